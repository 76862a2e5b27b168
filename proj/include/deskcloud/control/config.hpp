#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "deskcloud/core/clock.hpp"
#include "deskcloud/core/json_support.hpp"

namespace deskcloud {

struct Config {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8470;
  std::uint64_t seed = 1;
  Duration heartbeat_interval{5000};
  int miss_limit = 3;
  double overcommit_ratio = 4.0;
  int object_replication_factor = 3;
  int object_write_quorum = 2;
  int object_read_quorum = 1;
  Duration token_ttl{8LL * 3600 * 1000};
  std::size_t async_queue_limit = 4096;
  std::size_t meter_retention = 1000;
  std::size_t meter_min_samples = 100;
  double development_threshold_vcpu = 0.6;
  int service_minimum_vcpu = 2;
  int vlans_per_farm = 1;
  bool share_user_templates = false;
  std::string data_dir;
  std::string admin_username = "admin";
  std::string admin_password = "admin";

  // Applies one key=value setting; unknown keys throw InvalidArgument.
  void set(const std::string& key, const std::string& value);
};

// Reads `key = value` lines (# comments allowed), then applies environment
// overrides named DESKCLOUD_<KEY> with dots replaced by underscores.
Config load_config(const std::string& path);
Config apply_env_overrides(Config config);
std::map<std::string, std::string> config_entries(const Config& config);

void to_json(Json& j, const Config& c);

}  // namespace deskcloud
