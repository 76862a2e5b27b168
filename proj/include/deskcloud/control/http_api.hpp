#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "deskcloud/control/control_plane.hpp"

namespace httplib {
class Server;
}

namespace deskcloud {

struct ApiRequest {
  std::string method;
  std::string path;
  std::string body;
  std::string bearer_token;
  std::map<std::string, std::string> params;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

struct RouteInfo {
  std::string method;
  std::string pattern;
  std::string target;  // command or query name
  bool mutating = false;
};

// Maps REST paths onto control plane commands and queries. Serialized by an
// internal mutex; safe to call from concurrent server threads.
class ApiRouter {
 public:
  explicit ApiRouter(ControlPlane& plane);
  ApiResponse handle(const ApiRequest& request);
  static std::vector<RouteInfo> routes();
  // Error code name -> HTTP status mapping used for domain errors.
  static ApiResponse error_response(const Error& e);

 private:
  ControlPlane& plane_;
  std::mutex mu_;
};

class HttpServer {
 public:
  explicit HttpServer(ControlPlane& plane);
  ~HttpServer();
  // Binds and serves on a background thread; port 0 picks a free port.
  int start(const std::string& host, int port);
  // Serves on the calling thread until stop().
  bool listen(const std::string& host, int port);
  void stop();

 private:
  void install();

  ApiRouter router_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace deskcloud
