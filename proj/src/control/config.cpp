#include "deskcloud/control/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "deskcloud/core/error.hpp"

namespace deskcloud {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    raise(ErrorCode::InvalidArgument, "config " + key + ": not a number: " + value);
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(value, &pos);
    if (pos == value.size()) return d;
  } catch (const std::exception&) {
  }
  raise(ErrorCode::InvalidArgument, "config " + key + ": not a number: " + value);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  raise(ErrorCode::InvalidArgument, "config " + key + ": not a boolean: " + value);
}

using Setter = std::function<void(Config&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"listen.host", [](Config& c, const std::string&, const std::string& v) { c.listen_host = v; }},
      {"listen.port", [](Config& c, const std::string& k, const std::string& v) { c.listen_port = parse_number<int>(k, v); }},
      {"seed", [](Config& c, const std::string& k, const std::string& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"heartbeat.interval_ms",
       [](Config& c, const std::string& k, const std::string& v) { c.heartbeat_interval = Duration{parse_number<std::int64_t>(k, v)}; }},
      {"heartbeat.miss_limit", [](Config& c, const std::string& k, const std::string& v) { c.miss_limit = parse_number<int>(k, v); }},
      {"pool.overcommit_ratio", [](Config& c, const std::string& k, const std::string& v) { c.overcommit_ratio = parse_double(k, v); }},
      {"object.replication_factor",
       [](Config& c, const std::string& k, const std::string& v) { c.object_replication_factor = parse_number<int>(k, v); }},
      {"object.write_quorum", [](Config& c, const std::string& k, const std::string& v) { c.object_write_quorum = parse_number<int>(k, v); }},
      {"object.read_quorum", [](Config& c, const std::string& k, const std::string& v) { c.object_read_quorum = parse_number<int>(k, v); }},
      {"auth.token_ttl_ms",
       [](Config& c, const std::string& k, const std::string& v) { c.token_ttl = Duration{parse_number<std::int64_t>(k, v)}; }},
      {"block.async_queue_limit",
       [](Config& c, const std::string& k, const std::string& v) { c.async_queue_limit = parse_number<std::size_t>(k, v); }},
      {"meter.retention", [](Config& c, const std::string& k, const std::string& v) { c.meter_retention = parse_number<std::size_t>(k, v); }},
      {"meter.min_samples",
       [](Config& c, const std::string& k, const std::string& v) { c.meter_min_samples = parse_number<std::size_t>(k, v); }},
      {"meter.development_threshold_vcpu",
       [](Config& c, const std::string& k, const std::string& v) { c.development_threshold_vcpu = parse_double(k, v); }},
      {"meter.service_minimum_vcpu",
       [](Config& c, const std::string& k, const std::string& v) { c.service_minimum_vcpu = parse_number<int>(k, v); }},
      {"farm.vlans_per_farm", [](Config& c, const std::string& k, const std::string& v) { c.vlans_per_farm = parse_number<int>(k, v); }},
      {"templates.share_user_built",
       [](Config& c, const std::string& k, const std::string& v) { c.share_user_templates = parse_bool(k, v); }},
      {"data_dir", [](Config& c, const std::string&, const std::string& v) { c.data_dir = v; }},
      {"admin.username", [](Config& c, const std::string&, const std::string& v) { c.admin_username = v; }},
      {"admin.password", [](Config& c, const std::string&, const std::string& v) { c.admin_password = v; }},
  };
  return table;
}

std::string env_name(const std::string& key) {
  std::string out = "DESKCLOUD_";
  for (char ch : key) out += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return out;
}

}  // namespace

void Config::set(const std::string& key, const std::string& value) {
  auto it = setters().find(key);
  if (it == setters().end()) raise(ErrorCode::InvalidArgument, "unknown config key: " + key);
  it->second(*this, key, value);
}

Config apply_env_overrides(Config config) {
  for (const auto& [key, _] : setters())
    if (const char* v = std::getenv(env_name(key).c_str())) config.set(key, v);
  return config;
}

Config load_config(const std::string& path) {
  Config c;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::NotFound, "cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        raise(ErrorCode::InvalidArgument, path + ":" + std::to_string(lineno) + ": expected key = value");
      c.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
  }
  return apply_env_overrides(std::move(c));
}

std::map<std::string, std::string> config_entries(const Config& c) {
  std::ostringstream ratio, thresh;
  ratio << c.overcommit_ratio;
  thresh << c.development_threshold_vcpu;
  return {{"listen.host", c.listen_host},
          {"listen.port", std::to_string(c.listen_port)},
          {"seed", std::to_string(c.seed)},
          {"heartbeat.interval_ms", std::to_string(c.heartbeat_interval.count())},
          {"heartbeat.miss_limit", std::to_string(c.miss_limit)},
          {"pool.overcommit_ratio", ratio.str()},
          {"object.replication_factor", std::to_string(c.object_replication_factor)},
          {"object.write_quorum", std::to_string(c.object_write_quorum)},
          {"object.read_quorum", std::to_string(c.object_read_quorum)},
          {"auth.token_ttl_ms", std::to_string(c.token_ttl.count())},
          {"block.async_queue_limit", std::to_string(c.async_queue_limit)},
          {"meter.retention", std::to_string(c.meter_retention)},
          {"meter.min_samples", std::to_string(c.meter_min_samples)},
          {"meter.development_threshold_vcpu", thresh.str()},
          {"meter.service_minimum_vcpu", std::to_string(c.service_minimum_vcpu)},
          {"farm.vlans_per_farm", std::to_string(c.vlans_per_farm)},
          {"templates.share_user_built", c.share_user_templates ? "true" : "false"},
          {"data_dir", c.data_dir},
          {"admin.username", c.admin_username}};
}

void to_json(Json& j, const Config& c) {
  j = Json::object();
  for (const auto& [k, v] : config_entries(c)) j[k] = v;
}

}  // namespace deskcloud
