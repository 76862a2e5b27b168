#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "deskcloud/control/http_api.hpp"
#include "deskcloud/core/json_support.hpp"

namespace deskcloud {

enum class OutputMode { table, json };

struct CliConfig {
  std::string api_url = "http://127.0.0.1:8470";
  std::string token_cache_path;
  OutputMode output = OutputMode::table;
  bool color = false;
};

// Defaults, then `key = value` lines from an optional file (api_url,
// token_cache_path, output), then DESKCLOUD_API_URL / DESKCLOUD_TOKEN_CACHE.
CliConfig load_cli_config(const std::string& path);
bool valid_api_url(const std::string& url);

// Sends one request to the API. The default transport speaks HTTP to
// api_url; tests substitute an in-process router.
using Transport = std::function<ApiResponse(const ApiRequest&)>;
Transport http_transport(const std::string& api_url);

// Renders an array of objects as aligned columns; dotted column names reach
// into nested objects.
std::string render_table(const Json& rows, const std::vector<std::string>& columns, bool color = false);
// Renders the scalar and list members of an object as `key  value` lines.
std::string render_object(const Json& object);

// Exit codes: 0 success, 1 domain or connection error, 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const Transport* transport = nullptr);

}  // namespace deskcloud
