#include "deskcloud/control/http_api.hpp"

#include <regex>

#include "httplib.h"

#include "deskcloud/core/error.hpp"

namespace deskcloud {

namespace {

enum class Kind { command, query };

struct Route {
  const char* method;
  const char* pattern;
  Kind kind;
  const char* target;
  bool created = false;
};

// Path captures `{name}` become payload members of the same name; `{name*}`
// also matches slashes.
const std::vector<Route>& route_table() {
  static const std::vector<Route> table{
      {"POST", "/v1/login", Kind::command, "auth.login"},
      {"GET", "/v1/whoami", Kind::query, "whoami"},
      {"GET", "/v1/users", Kind::query, "users"},
      {"POST", "/v1/users", Kind::command, "user.create", true},
      {"GET", "/v1/projects", Kind::query, "projects"},
      {"POST", "/v1/projects", Kind::command, "project.create", true},
      {"POST", "/v1/projects/{project_id}/members", Kind::command, "project.member.add"},
      {"GET", "/v1/sites", Kind::query, "sites"},
      {"POST", "/v1/sites", Kind::command, "site.create", true},
      {"POST", "/v1/sites/{site_id}/failover", Kind::command, "site.failover"},
      {"POST", "/v1/sites/{site_id}/repair", Kind::command, "site.repair"},
      {"GET", "/v1/pools", Kind::query, "pools"},
      {"POST", "/v1/pools", Kind::command, "pool.create", true},
      {"GET", "/v1/hosts", Kind::query, "hosts"},
      {"POST", "/v1/hosts", Kind::command, "host.add", true},
      {"POST", "/v1/hosts/{host_id}/drain", Kind::command, "host.drain"},
      {"POST", "/v1/hosts/{host_id}/undrain", Kind::command, "host.undrain"},
      {"GET", "/v1/templates", Kind::query, "templates"},
      {"POST", "/v1/templates", Kind::command, "template.register", true},
      {"GET", "/v1/templates/{id}", Kind::query, "template"},
      {"PUT", "/v1/templates/{template_id}", Kind::command, "template.update"},
      {"POST", "/v1/templates/{template_id}/publish", Kind::command, "template.publish"},
      {"GET", "/v1/farms", Kind::query, "farms"},
      {"POST", "/v1/farms", Kind::command, "farm.create", true},
      {"GET", "/v1/farms/{id}", Kind::query, "farm"},
      {"GET", "/v1/farms/{id}/replication", Kind::query, "farm_view"},
      {"PUT", "/v1/farms/{farm_id}/share", Kind::command, "farm.share.set"},
      {"GET", "/v1/farms/{farm_id}/instances", Kind::query, "instances"},
      {"POST", "/v1/farms/{farm_id}/instances", Kind::command, "instance.provision", true},
      {"GET", "/v1/instances", Kind::query, "instances"},
      {"GET", "/v1/instances/{id}", Kind::query, "instance"},
      {"POST", "/v1/instances/{instance_id}/actions/attribute", Kind::command, "instance.attribute"},
      {"POST", "/v1/instances/{instance_id}/actions/start", Kind::command, "instance.start"},
      {"POST", "/v1/instances/{instance_id}/actions/stop", Kind::command, "instance.stop"},
      {"POST", "/v1/instances/{instance_id}/actions/migrate", Kind::command, "instance.migrate"},
      {"POST", "/v1/instances/{instance_id}/actions/destroy", Kind::command, "instance.destroy"},
      {"POST", "/v1/instances/{instance_id}/actions/remote-access", Kind::command, "instance.remote_access"},
      {"POST", "/v1/instances/{instance_id}/actions/monitoring", Kind::command, "instance.monitoring"},
      {"GET", "/v1/networks", Kind::query, "networks"},
      {"POST", "/v1/networks", Kind::command, "net.pool.create", true},
      {"GET", "/v1/firewall-rules", Kind::query, "firewall_rules"},
      {"POST", "/v1/firewall-rules", Kind::command, "firewall.create", true},
      {"POST", "/v1/firewall-rules/evaluate", Kind::query, "firewall_evaluate"},
      {"DELETE", "/v1/firewall-rules/{rule_id}", Kind::command, "firewall.delete"},
      {"GET", "/v1/lb-rules", Kind::query, "lb_rules"},
      {"POST", "/v1/lb-rules", Kind::command, "lb.create", true},
      {"POST", "/v1/lb-rules/{rule_id}/pick", Kind::command, "lb.pick"},
      {"GET", "/v1/volumes", Kind::query, "volumes"},
      {"POST", "/v1/volumes", Kind::command, "volume.create", true},
      {"GET", "/v1/volumes/{id}/journal", Kind::query, "volume_journal"},
      {"POST", "/v1/volumes/{volume_id}/attach", Kind::command, "volume.attach"},
      {"POST", "/v1/volumes/{volume_id}/write", Kind::command, "volume.write"},
      {"GET", "/v1/objects", Kind::query, "objects"},
      {"GET", "/v1/objects/{key*}", Kind::query, "object"},
      {"PUT", "/v1/objects/{key*}", Kind::command, "object.put", true},
      {"DELETE", "/v1/objects/{key*}", Kind::command, "object.delete"},
      {"GET", "/v1/storage-nodes", Kind::query, "storage_nodes"},
      {"POST", "/v1/storage-nodes", Kind::command, "object.node.add", true},
      {"GET", "/v1/reports/utilization", Kind::query, "report"},
      {"POST", "/v1/meter/samples", Kind::command, "meter.ingest_batch"},
      {"GET", "/v1/failovers", Kind::query, "failovers"},
      {"GET", "/v1/state/digest", Kind::query, "digest"},
      {"GET", "/v1/state/violations", Kind::query, "violations"},
      {"POST", "/v1/sim/tick", Kind::command, "sim.tick"},
      {"POST", "/v1/sim/hosts/{host_id}/kill", Kind::command, "sim.kill_host"},
      {"POST", "/v1/sim/hosts/{host_id}/revive", Kind::command, "sim.revive_host"},
      {"POST", "/v1/sim/sites/{site_id}/kill", Kind::command, "sim.kill_site"},
      {"POST", "/v1/sim/sites/{site_id}/revive", Kind::command, "sim.revive_site"},
      {"POST", "/v1/sim/storage-nodes/{node_id}/kill", Kind::command, "sim.kill_node"},
      {"POST", "/v1/sim/storage-nodes/{node_id}/revive", Kind::command, "sim.revive_node"},
  };
  return table;
}

struct CompiledRoute {
  const Route* route;
  std::regex regex;
  std::vector<std::string> captures;
};

const std::vector<CompiledRoute>& compiled() {
  static const std::vector<CompiledRoute> out = [] {
    std::vector<CompiledRoute> v;
    static const std::regex capture(R"(\{([a-z_]+)(\*?)\})");
    for (const auto& r : route_table()) {
      std::string pattern = r.pattern;
      std::vector<std::string> names;
      std::string rx;
      auto begin = std::sregex_iterator(pattern.begin(), pattern.end(), capture);
      std::size_t last = 0;
      for (auto it = begin; it != std::sregex_iterator(); ++it) {
        rx += pattern.substr(last, static_cast<std::size_t>(it->position()) - last);
        rx += (*it)[2].length() ? "(.+)" : "([^/]+)";
        names.push_back((*it)[1].str());
        last = static_cast<std::size_t>(it->position() + it->length());
      }
      rx += pattern.substr(last);
      v.push_back({&r, std::regex("^" + rx + "$"), std::move(names)});
    }
    return v;
  }();
  return out;
}

// Query strings are untyped; only time and port parameters are numeric.
Json param_value(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  const bool numeric_key = key == "port" || (key.size() > 3 && key.ends_with("_ms"));
  if (numeric_key && !v.empty() && v.find_first_not_of("0123456789-") == std::string::npos && v != "-") {
    try {
      return std::stoll(v);
    } catch (const std::exception&) {
    }
  }
  return v;
}

Json error_body(std::string_view code, const std::string& message) {
  return Json{{"error", std::string(code)}, {"message", message}};
}

}  // namespace

ApiRouter::ApiRouter(ControlPlane& plane) : plane_(plane) {}

std::vector<RouteInfo> ApiRouter::routes() {
  std::vector<RouteInfo> out;
  for (const auto& r : route_table()) out.push_back({r.method, r.pattern, r.target, r.kind == Kind::command});
  return out;
}

ApiResponse ApiRouter::error_response(const Error& e) {
  return ApiResponse{http_status(e.code()), "application/json", error_body(to_string(e.code()), e.what()).dump()};
}

ApiResponse ApiRouter::handle(const ApiRequest& req) {
  bool path_known = false;
  for (const auto& cr : compiled()) {
    std::smatch m;
    if (!std::regex_match(req.path, m, cr.regex)) continue;
    path_known = true;
    if (req.method != cr.route->method) continue;
    try {
      Json payload = Json::object();
      if (!req.body.empty()) {
        try {
          payload = Json::parse(req.body);
        } catch (const Json::exception&) {
          raise(ErrorCode::MalformedCommand, "request body is not valid JSON");
        }
        if (!payload.is_object()) raise(ErrorCode::MalformedCommand, "request body must be a JSON object");
      }
      for (const auto& [k, v] : req.params) payload[k] = param_value(k, v);
      for (std::size_t i = 0; i < cr.captures.size(); ++i) payload[cr.captures[i]] = m[static_cast<int>(i) + 1].str();
      std::lock_guard lock(mu_);
      if (cr.route->kind == Kind::query) {
        Json out = plane_.query(cr.route->target, payload, req.bearer_token);
        if (out.is_object() && out.size() == 1 && out.contains("csv"))
          return ApiResponse{200, "text/csv", out["csv"].get<std::string>()};
        return ApiResponse{200, "application/json", out.dump()};
      }
      Json out = plane_.submit(cr.route->target, payload, req.bearer_token);
      return ApiResponse{cr.route->created ? 201 : 200, "application/json", out.dump()};
    } catch (const Error& e) {
      return error_response(e);
    } catch (const std::exception& e) {
      return ApiResponse{500, "application/json", error_body("Internal", e.what()).dump()};
    }
  }
  if (path_known) return ApiResponse{405, "application/json", error_body("MethodNotAllowed", req.method + " " + req.path).dump()};
  return ApiResponse{404, "application/json", error_body("NotFound", "no route for " + req.path).dump()};
}

HttpServer::HttpServer(ControlPlane& plane) : router_(plane), server_(std::make_unique<httplib::Server>()) { install(); }

HttpServer::~HttpServer() { stop(); }

void HttpServer::install() {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r;
    r.method = req.method;
    r.path = req.path;
    r.body = req.body;
    const std::string auth = req.get_header_value("Authorization");
    if (auth.rfind("Bearer ", 0) == 0) r.bearer_token = auth.substr(7);
    for (const auto& [k, v] : req.params) r.params[k] = v;
    const ApiResponse out = router_.handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  server_->Get(".*", handler);
  server_->Post(".*", handler);
  server_->Put(".*", handler);
  server_->Delete(".*", handler);
}

int HttpServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0)
    bound = server_->bind_to_any_port(host);
  else if (!server_->bind_to_port(host, port))
    bound = -1;
  if (bound < 0) raise(ErrorCode::InvalidArgument, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

bool HttpServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace deskcloud
