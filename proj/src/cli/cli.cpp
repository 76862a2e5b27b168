#include "deskcloud/cli/cli.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "httplib.h"

#include "deskcloud/control/control_plane.hpp"
#include "deskcloud/core/error.hpp"
#include "deskcloud/sim/scenario.hpp"

namespace deskcloud {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string default_token_cache() {
  if (const char* home = std::getenv("HOME"); home && *home) return (fs::path(home) / ".deskcloud" / "token").string();
  return ".deskcloud-token";
}

std::string cell(const Json& v) {
  if (v.is_null()) return "-";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) {
      if (!out.empty()) out += ",";
      out += cell(e);
    }
    return out.empty() ? "-" : out;
  }
  return v.dump();
}

const Json* dotted(const Json& obj, const std::string& path) {
  const Json* cur = &obj;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!cur->is_object()) return nullptr;
    auto it = cur->find(part);
    if (it == cur->end()) return nullptr;
    cur = &*it;
    if (dot == std::string::npos) return cur;
    start = dot + 1;
  }
}

void write_token(const std::string& path, const std::string& token) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
  if (fd < 0) raise(ErrorCode::InvalidArgument, "cannot write token cache: " + path);
  ::fchmod(fd, 0600);
  const std::string line = token + "\n";
  const bool ok = ::write(fd, line.data(), line.size()) == static_cast<ssize_t>(line.size());
  ::close(fd);
  if (!ok) raise(ErrorCode::InvalidArgument, "cannot write token cache: " + path);
}

std::string read_token(const std::string& path) {
  std::ifstream in(path);
  std::string token;
  if (in) std::getline(in, token);
  return trim(token);
}

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

struct Runner {
  CliConfig cfg;
  Transport transport;
  std::ostream& out;
  std::ostream& err;

  ApiResponse send(const std::string& method, const std::string& path, const Json& body = nullptr,
                   std::map<std::string, std::string> params = {}) {
    ApiRequest req;
    req.method = method;
    req.path = path;
    if (!body.is_null()) req.body = body.dump();
    req.bearer_token = read_token(cfg.token_cache_path);
    req.params = std::move(params);
    return transport(req);
  }

  int fail(const ApiResponse& r) {
    if (cfg.output == OutputMode::json) {
      err << r.body << "\n";
      return 1;
    }
    std::string code = "Error", message = r.body;
    try {
      const Json j = Json::parse(r.body);
      code = j.value("error", code);
      message = j.value("message", message);
    } catch (const Json::exception&) {
    }
    err << "error: " << code << ": " << message;
    if (r.status > 0) err << " (HTTP " << r.status << ")";
    err << "\n";
    return 1;
  }

  // Prints a successful response; `columns` selects the table projection
  // for array bodies, `list_key` unwraps an object holding the array.
  int show(const ApiResponse& r, const std::vector<std::string>& columns = {}, const std::string& list_key = "") {
    if (r.status < 200 || r.status >= 300) return fail(r);
    if (cfg.output == OutputMode::json || r.content_type != "application/json") {
      out << r.body;
      if (r.body.empty() || r.body.back() != '\n') out << "\n";
      return 0;
    }
    Json body = Json::parse(r.body);
    if (!list_key.empty() && body.is_object() && body.contains(list_key)) body = body[list_key];
    if (body.is_array())
      out << render_table(body, columns.empty() ? std::vector<std::string>{"id"} : columns, cfg.color);
    else
      out << render_object(body);
    return 0;
  }

  int call(const std::string& method, const std::string& path, const Json& body = nullptr,
           const std::vector<std::string>& columns = {}, const std::string& list_key = "",
           std::map<std::string, std::string> params = {}) {
    return show(send(method, path, body, std::move(params)), columns, list_key);
  }
};

const std::vector<std::string> kInstanceColumns{"id", "state", "host_id", "workload_class", "spec.vcpu", "spec.memory_gib", "farm_id"};

int serve(const std::string& config_path, const std::string& host_opt, int port_opt, const std::string& data_dir_opt,
          std::ostream& out, std::ostream& err) {
  Config cfg = config_path.empty() ? apply_env_overrides(Config{}) : load_config(config_path);
  if (!host_opt.empty()) cfg.listen_host = host_opt;
  if (port_opt >= 0) cfg.listen_port = port_opt;
  if (!data_dir_opt.empty()) cfg.data_dir = data_dir_opt;
  std::unique_ptr<ControlPlane> plane;
  if (!cfg.data_dir.empty() && fs::exists(fs::path(cfg.data_dir) / "snapshot.dcs")) {
    RestoreReport rep;
    plane = std::make_unique<ControlPlane>(ControlPlane::restore(cfg, cfg.data_dir, &rep));
    out << "restored " << rep.replayed << " journal records";
    if (rep.dropped_bytes) out << ", dropped " << rep.dropped_bytes << " torn bytes";
    out << "\n";
  } else {
    plane = std::make_unique<ControlPlane>(cfg);
    if (!cfg.data_dir.empty()) plane->open_data_dir(cfg.data_dir);
  }
  HttpServer server(*plane);
  int port = 0;
  try {
    port = server.start(cfg.listen_host, cfg.listen_port);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  out << "listening on http://" << cfg.listen_host << ":" << port << std::endl;
  g_stop = false;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
  server.stop();
  if (!cfg.data_dir.empty()) plane->checkpoint();
  return 0;
}

int run_scenario_cmd(const std::string& path, std::optional<std::uint64_t> seed, const std::string& metrics,
                     const std::string& report_path, OutputMode mode, std::ostream& out, std::ostream& err) {
  Scenario sc = load_scenario_file(path);
  if (seed) sc.seed = *seed;
  const ScenarioReport r = run_scenario(sc);
  if (!metrics.empty()) {
    std::ofstream m(metrics);
    if (!m) {
      err << "error: cannot write " << metrics << "\n";
      return 1;
    }
    m << r.metrics_csv;
  }
  const Json j = to_json(r);
  if (!report_path.empty()) std::ofstream(report_path) << j.dump(2) << "\n";
  if (mode == OutputMode::json) {
    out << j.dump(2) << "\n";
  } else {
    out << "seed        " << r.seed << "\n";
    out << "digest      " << r.digest << "\n";
    out << "violations  " << r.violations.size() << "\n";
    out << "failovers   " << r.failovers.size() << "\n";
    out << "instances   " << r.summary.value("instances", Json::object()).dump() << "\n";
    out << "elapsed_s   " << std::fixed << std::setprecision(3) << r.elapsed_seconds << "\n";
    for (const auto& v : r.violations)
      out << "violation   t=" << v.at_ms << "ms " << v.boundary << " " << v.violation.invariant << ": " << v.violation.detail << "\n";
  }
  return r.violations.empty() ? 0 : 1;
}

}  // namespace

CliConfig load_cli_config(const std::string& path) {
  CliConfig c;
  c.token_cache_path = default_token_cache();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::InvalidArgument, "cannot read config file: " + path);
    std::string line;
    while (std::getline(in, line)) {
      line = trim(line.substr(0, line.find('#')));
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) raise(ErrorCode::InvalidArgument, "expected key = value: " + line);
      const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
      if (key == "api_url") c.api_url = value;
      else if (key == "token_cache_path") c.token_cache_path = value;
      else if (key == "output") c.output = value == "json" ? OutputMode::json : OutputMode::table;
      else raise(ErrorCode::InvalidArgument, "unknown cli config key: " + key);
    }
  }
  if (const char* v = std::getenv("DESKCLOUD_API_URL"); v && *v) c.api_url = v;
  if (const char* v = std::getenv("DESKCLOUD_TOKEN_CACHE"); v && *v) c.token_cache_path = v;
  c.color = std::getenv("NO_COLOR") == nullptr && ::isatty(STDOUT_FILENO);
  return c;
}

bool valid_api_url(const std::string& url) {
  static const std::regex re(R"(^http://[A-Za-z0-9.\-]+(:[0-9]{1,5})?/?$)");
  return std::regex_match(url, re);
}

Transport http_transport(const std::string& api_url) {
  return [api_url](const ApiRequest& req) {
    std::string base = api_url;
    if (!base.empty() && base.back() == '/') base.pop_back();
    httplib::Client client(base);
    client.set_connection_timeout(5, 0);
    client.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!req.bearer_token.empty()) headers.emplace("Authorization", "Bearer " + req.bearer_token);
    httplib::Params params(req.params.begin(), req.params.end());
    httplib::Result res;
    if (req.method == "GET") res = client.Get(req.path, params, headers);
    else if (req.method == "POST") res = client.Post(req.path, headers, req.body, "application/json");
    else if (req.method == "PUT") res = client.Put(req.path, headers, req.body, "application/json");
    else if (req.method == "DELETE") res = client.Delete(req.path, headers, req.body, "application/json");
    if (!res)
      return ApiResponse{0, "application/json",
                         Json{{"error", "ConnectionFailed"}, {"message", base + ": " + httplib::to_string(res.error())}}.dump()};
    const std::string type = res->get_header_value("Content-Type");
    return ApiResponse{res->status, type.rfind("application/json", 0) == 0 ? "application/json" : type, res->body};
  };
}

std::string render_table(const Json& rows, const std::vector<std::string>& columns, bool color) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::size_t> width;
  for (const auto& c : columns) width.push_back(c.size());
  for (const auto& row : rows) {
    std::vector<std::string> line;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      const Json* v = dotted(row, columns[i]);
      line.push_back(v ? cell(*v) : "-");
      width[i] = std::max(width[i], line.back().size());
    }
    cells.push_back(std::move(line));
  }
  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      os << line[i];
      if (i + 1 < line.size()) os << std::string(width[i] - line[i].size() + 2, ' ');
    }
    os << "\n";
  };
  if (color) os << "\033[1m";
  std::vector<std::string> head(columns.begin(), columns.end());
  for (std::size_t i = 0; i < head.size(); ++i) {
    os << head[i];
    if (i + 1 < head.size()) os << std::string(width[i] - head[i].size() + 2, ' ');
  }
  if (color) os << "\033[0m";
  os << "\n";
  for (const auto& line : cells) emit(line);
  return os.str();
}

std::string render_object(const Json& object) {
  if (!object.is_object()) return cell(object) + "\n";
  std::size_t w = 0;
  for (const auto& [k, _] : object.items()) w = std::max(w, k.size());
  std::ostringstream os;
  for (const auto& [k, v] : object.items()) os << k << std::string(w - k.size() + 2, ' ') << (v.is_object() ? v.dump() : cell(v)) << "\n";
  return os.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Transport* transport) {
  CLI::App app{"deskcloud: desk-scale IaaS control plane and client", "deskcloud"};
  app.require_subcommand(1);
  std::string config_path, api_url, token_cache, output;
  app.add_option("--config", config_path, "Client config file (api_url, token_cache_path, output)");
  app.add_option("--api-url", api_url, "Control API endpoint, e.g. http://127.0.0.1:8470");
  app.add_option("--token-cache", token_cache, "Where login stores the bearer token");
  app.add_option("--output,-o", output, "table or json")->check(CLI::IsMember({"table", "json"}));

  std::function<int(Runner&)> action;
  std::function<int()> local_action;

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the control plane HTTP API");
  std::string serve_config, serve_host, serve_dir;
  int serve_port = -1;
  serve_cmd->add_option("--server-config", serve_config, "Server key=value config file");
  serve_cmd->add_option("--host", serve_host, "Listen address");
  serve_cmd->add_option("--port", serve_port, "Listen port (0 picks a free port)");
  serve_cmd->add_option("--data-dir", serve_dir, "Snapshot and journal directory");
  serve_cmd->callback([&] { local_action = [&] { return serve(serve_config, serve_host, serve_port, serve_dir, out, err); }; });

  // run-scenario
  auto* scen_cmd = app.add_subcommand("run-scenario", "Run a scenario file against a fresh in-process control plane");
  std::string scen_path, scen_metrics, scen_report;
  std::optional<std::uint64_t> scen_seed;
  scen_cmd->add_option("path", scen_path, "Scenario JSON file")->required();
  scen_cmd->add_option("--seed", scen_seed, "Override the scenario seed");
  scen_cmd->add_option("--metrics", scen_metrics, "Write the utilization CSV here");
  scen_cmd->add_option("--report", scen_report, "Write the JSON report here");

  // login / whoami
  auto* login_cmd = app.add_subcommand("login", "Authenticate and cache a bearer token");
  std::string username, password;
  std::vector<std::string> surfaces;
  login_cmd->add_option("--username,-u", username)->required();
  login_cmd->add_option("--password,-p", password)->required();
  login_cmd->add_option("--surface", surfaces, "Restrict the token (framework, image, storage, network_remote)");
  login_cmd->callback([&] {
    action = [&](Runner& r) {
      Json body{{"username", username}, {"password", password}};
      if (!surfaces.empty()) body["surfaces"] = surfaces;
      const ApiResponse res = r.send("POST", "/v1/login", body);
      if (res.status < 200 || res.status >= 300) return r.fail(res);
      write_token(r.cfg.token_cache_path, Json::parse(res.body).at("token").get<std::string>());
      return r.show(res);
    };
  });
  app.add_subcommand("whoami", "Show the authenticated user")->callback([&] {
    action = [](Runner& r) { return r.call("GET", "/v1/whoami"); };
  });

  // template
  auto* tmpl = app.add_subcommand("template", "Template catalog");
  tmpl->require_subcommand(1);
  tmpl->add_subcommand("list", "List visible templates")->callback([&] {
    action = [](Runner& r) {
      return r.call("GET", "/v1/templates", nullptr,
                    {"id", "name", "origin", "published", "default_spec.vcpu", "default_spec.memory_gib",
                     "default_spec.disk_gib", "default_spec.network_count"});
    };
  });
  auto* tmpl_create = tmpl->add_subcommand("create", "Register a template");
  std::string t_name, t_project, t_class = "development", t_os = "linux";
  int t_vcpu = 1, t_nets = 1;
  std::int64_t t_mem = 1, t_disk = 1;
  tmpl_create->add_option("--name", t_name)->required();
  tmpl_create->add_option("--vcpu", t_vcpu)->required();
  tmpl_create->add_option("--memory-gib", t_mem)->required();
  tmpl_create->add_option("--disk-gib", t_disk)->required();
  tmpl_create->add_option("--networks", t_nets)->required();
  tmpl_create->add_option("--project", t_project);
  tmpl_create->add_option("--class", t_class)->check(CLI::IsMember({"service", "development"}));
  tmpl_create->add_option("--os", t_os);
  tmpl_create->callback([&] {
    action = [&](Runner& r) {
      Json body{{"name", t_name},
                {"spec", {{"vcpu", t_vcpu}, {"memory_gib", t_mem}, {"disk_gib", t_disk}, {"network_count", t_nets}}},
                {"workload_class", t_class},
                {"os_label", t_os}};
      if (!t_project.empty()) body["project_id"] = t_project;
      return r.call("POST", "/v1/templates", body);
    };
  });
  auto* tmpl_publish = tmpl->add_subcommand("publish", "Publish a template to every project");
  std::string t_id;
  tmpl_publish->add_option("id", t_id)->required();
  tmpl_publish->callback([&] { action = [&](Runner& r) { return r.call("POST", "/v1/templates/" + t_id + "/publish", Json::object()); }; });

  // farm
  auto* farm = app.add_subcommand("farm", "Virtual farms");
  farm->require_subcommand(1);
  auto* farm_create = farm->add_subcommand("create", "Create a farm");
  std::string f_name, f_project, f_pool, f_secondary, f_cidr;
  int f_hosts = 0, f_instances = 0;
  std::int64_t f_object = 0, f_block = 0;
  farm_create->add_option("--name", f_name)->required();
  farm_create->add_option("--project", f_project)->required();
  farm_create->add_option("--pool", f_pool)->required();
  farm_create->add_option("--max-hosts", f_hosts)->required();
  farm_create->add_option("--max-instances", f_instances)->required();
  farm_create->add_option("--object-gib", f_object)->required();
  farm_create->add_option("--block-gib", f_block)->required();
  farm_create->add_option("--secondary-pool", f_secondary);
  farm_create->add_option("--network-cidr", f_cidr);
  farm_create->callback([&] {
    action = [&](Runner& r) {
      Json body{{"name", f_name},
                {"project_id", f_project},
                {"pool_id", f_pool},
                {"quota", {{"max_hosts", f_hosts}, {"max_instances", f_instances}, {"object_quota_gib", f_object}, {"block_quota_gib", f_block}}}};
      if (!f_secondary.empty()) body["secondary_pool_id"] = f_secondary;
      if (!f_cidr.empty()) body["network_cidr"] = f_cidr;
      return r.call("POST", "/v1/farms", body);
    };
  });
  farm->add_subcommand("list", "List farms")->callback([&] {
    action = [](Runner& r) {
      return r.call("GET", "/v1/farms", nullptr, {"id", "name", "project_id", "site_id", "pool_id", "quota.max_instances", "vlan_ids"});
    };
  });
  auto* farm_show = farm->add_subcommand("show", "Show one farm with usage");
  std::string f_id;
  farm_show->add_option("id", f_id)->required();
  farm_show->callback([&] { action = [&](Runner& r) { return r.call("GET", "/v1/farms/" + f_id); }; });

  // instance
  auto* inst = app.add_subcommand("instance", "Virtual instances");
  inst->require_subcommand(1);
  auto* inst_prov = inst->add_subcommand("provision", "Create, attribute and start instances");
  std::string i_template, i_farm, i_class;
  int i_count = 1;
  bool i_no_start = false;
  std::optional<std::int64_t> i_volume;
  inst_prov->add_option("--template", i_template)->required();
  inst_prov->add_option("--farm", i_farm)->required();
  inst_prov->add_option("--count", i_count);
  inst_prov->add_option("--class", i_class)->check(CLI::IsMember({"service", "development"}));
  inst_prov->add_option("--volume-gib", i_volume);
  inst_prov->add_flag("--no-start", i_no_start);
  inst_prov->callback([&] {
    action = [&](Runner& r) {
      Json body{{"template_id", i_template}, {"count", i_count}, {"start", !i_no_start}};
      if (!i_class.empty()) body["workload_class"] = i_class;
      if (i_volume) body["volume_gib"] = *i_volume;
      return r.call("POST", "/v1/farms/" + i_farm + "/instances", body, kInstanceColumns, "instances");
    };
  });
  std::string i_id, i_target;
  for (const char* verb : {"start", "stop", "destroy", "migrate"}) {
    auto* sub = inst->add_subcommand(verb, std::string(verb) + " an instance");
    sub->add_option("id", i_id)->required();
    if (std::string(verb) == "migrate") sub->add_option("--target", i_target, "Destination host id");
    const std::string v = verb;
    sub->callback([&, v] {
      action = [&, v](Runner& r) {
        Json body = Json::object();
        if (v == "migrate" && !i_target.empty()) body["target_host"] = i_target;
        return r.call("POST", "/v1/instances/" + i_id + "/actions/" + v, body);
      };
    });
  }
  auto* inst_list = inst->add_subcommand("list", "List instances");
  std::string il_farm;
  inst_list->add_option("--farm", il_farm);
  inst_list->callback([&] {
    action = [&](Runner& r) {
      std::map<std::string, std::string> params;
      if (!il_farm.empty()) params["farm_id"] = il_farm;
      return r.call("GET", "/v1/instances", nullptr, kInstanceColumns, "", params);
    };
  });

  // net
  auto* net = app.add_subcommand("net", "Networks and traffic rules");
  net->require_subcommand(1);
  net->add_subcommand("pools", "List network pools")->callback([&] {
    action = [](Runner& r) { return r.call("GET", "/v1/networks", nullptr, {"id", "name", "site_id", "cidr", "vlan_id", "farm_id", "free"}); };
  });
  net->add_subcommand("rules", "List firewall rules")->callback([&] {
    action = [](Runner& r) {
      return r.call("GET", "/v1/firewall-rules", nullptr,
                    {"id", "scope_kind", "scope_id", "protocol", "port_low", "port_high", "remote_cidr", "action", "priority"});
    };
  });
  net->add_subcommand("lb", "List load-balancer rules")->callback([&] {
    action = [](Runner& r) { return r.call("GET", "/v1/lb-rules", nullptr, {"id", "farm_id", "vip", "port", "backend_instance_ids"}); };
  });

  // volume
  auto* vol = app.add_subcommand("volume", "Block volumes");
  vol->require_subcommand(1);
  const std::vector<std::string> vol_cols{"id", "name", "farm_id", "size_gib", "site_id", "mode", "peer_connected", "journal_length", "lost"};
  auto* vol_list = vol->add_subcommand("list", "List volumes");
  std::string v_farm, v_name, v_id;
  std::int64_t v_size = 0, v_block = 0;
  vol_list->add_option("--farm", v_farm);
  vol_list->callback([&] {
    action = [&](Runner& r) {
      std::map<std::string, std::string> params;
      if (!v_farm.empty()) params["farm_id"] = v_farm;
      return r.call("GET", "/v1/volumes", nullptr, vol_cols, "", params);
    };
  });
  auto* vol_create = vol->add_subcommand("create", "Create a volume");
  vol_create->add_option("--farm", v_farm)->required();
  vol_create->add_option("--size-gib", v_size)->required();
  vol_create->add_option("--name", v_name);
  vol_create->callback([&] {
    action = [&](Runner& r) {
      Json body{{"farm_id", v_farm}, {"size_gib", v_size}};
      if (!v_name.empty()) body["name"] = v_name;
      return r.call("POST", "/v1/volumes", body);
    };
  });
  auto* vol_write = vol->add_subcommand("write", "Write one block");
  vol_write->add_option("id", v_id)->required();
  vol_write->add_option("--block", v_block)->required();
  vol_write->callback([&] {
    action = [&](Runner& r) { return r.call("POST", "/v1/volumes/" + v_id + "/write", Json{{"block", v_block}}); };
  });

  // object
  auto* obj = app.add_subcommand("object", "Object storage");
  obj->require_subcommand(1);
  std::string o_key, o_farm, o_hash;
  std::int64_t o_size = 0;
  auto* obj_put = obj->add_subcommand("put", "Store an object");
  obj_put->add_option("key", o_key)->required();
  obj_put->add_option("--farm", o_farm)->required();
  obj_put->add_option("--size-bytes", o_size)->required();
  obj_put->add_option("--hash", o_hash, "Content hash (defaults to a digest of key and size)");
  obj_put->callback([&] {
    action = [&](Runner& r) {
      Json body{{"farm_id", o_farm}, {"size_bytes", o_size}};
      if (!o_hash.empty()) body["content_hash"] = o_hash;
      return r.call("PUT", "/v1/objects/" + o_key, body);
    };
  });
  for (const char* verb : {"get", "delete"}) {
    auto* sub = obj->add_subcommand(verb, std::string(verb) + " an object");
    sub->add_option("key", o_key)->required();
    const std::string v = verb;
    sub->callback([&, v] {
      action = [&, v](Runner& r) { return r.call(v == "get" ? "GET" : "DELETE", "/v1/objects/" + o_key); };
    });
  }
  auto* obj_list = obj->add_subcommand("list", "List objects");
  obj_list->add_option("--farm", o_farm);
  obj_list->callback([&] {
    action = [&](Runner& r) {
      std::map<std::string, std::string> params;
      if (!o_farm.empty()) params["farm_id"] = o_farm;
      return r.call("GET", "/v1/objects", nullptr, {"key", "farm_id", "size_bytes", "replica_nodes"}, "", params);
    };
  });

  // sites and failover
  app.add_subcommand("sites", "List sites")->callback([&] {
    action = [](Runner& r) { return r.call("GET", "/v1/sites", nullptr, {"id", "name", "role", "status", "replication_mode", "peer_site", "reachable"}); };
  });
  auto* fo = app.add_subcommand("failover", "Promote a standby site");
  std::string fo_site;
  fo->add_option("site", fo_site, "Site id to promote")->required();
  fo->callback([&] { action = [&](Runner& r) { return r.call("POST", "/v1/sites/" + fo_site + "/failover", Json::object()); }; });

  // report
  auto* rep = app.add_subcommand("report", "Utilization report per workload class");
  std::string r_class;
  std::optional<std::int64_t> r_start, r_end;
  bool r_csv = false;
  rep->add_option("--class", r_class)->check(CLI::IsMember({"service", "development"}));
  rep->add_option("--start-ms", r_start);
  rep->add_option("--end-ms", r_end);
  rep->add_flag("--csv", r_csv, "Print the CSV export");
  rep->callback([&] {
    action = [&](Runner& r) {
      std::map<std::string, std::string> params;
      if (!r_class.empty()) params["class"] = r_class;
      if (r_start) params["start_ms"] = std::to_string(*r_start);
      if (r_end) params["end_ms"] = std::to_string(*r_end);
      if (r_csv) params["format"] = "csv";
      const ApiResponse res = r.send("GET", "/v1/reports/utilization", nullptr, params);
      if (r_csv || r.cfg.output == OutputMode::json || res.status != 200) return r.show(res);
      const Json body = Json::parse(res.body);
      Json rows = Json::array();
      for (const auto& [cls, st] : body.at("per_class").items()) {
        Json row = st;
        row["class"] = cls;
        row["recommended_vcpu"] = body.at("recommended_vcpu").value(cls, Json());
        if (row["recommended_vcpu"].is_object()) row["recommended_vcpu"] = row["recommended_vcpu"].value("error", "-");
        rows.push_back(std::move(row));
      }
      r.out << render_table(rows, {"class", "samples", "mean_pct", "p95_pct", "recommended_vcpu"}, r.cfg.color);
      return 0;
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    if (args.empty()) err << app.help();
    else app.exit(e, out, err);
    return 2;
  }

  try {
    CliConfig cfg = load_cli_config(config_path);
    if (!api_url.empty()) cfg.api_url = api_url;
    if (!token_cache.empty()) cfg.token_cache_path = token_cache;
    if (!output.empty()) cfg.output = output == "json" ? OutputMode::json : OutputMode::table;
    if (scen_cmd->parsed()) return run_scenario_cmd(scen_path, scen_seed, scen_metrics, scen_report, cfg.output, out, err);
    if (local_action) return local_action();
    if (!action) {
      err << app.help();
      return 2;
    }
    if (!transport && !valid_api_url(cfg.api_url)) {
      err << "error: malformed api url: " << cfg.api_url << "\n";
      return 2;
    }
    Runner runner{cfg, transport ? *transport : http_transport(cfg.api_url), out, err};
    return action(runner);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace deskcloud
