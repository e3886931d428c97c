#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "netvis/result.hpp"
#include "netvis/session.hpp"

namespace netvis {

struct ServerOptions {
  std::string host = "127.0.0.1";
  /// 0 picks a free port; see HttpServer::port().
  unsigned short port = 8080;
  std::filesystem::path static_dir;
  /// Empty disables the admin endpoints.
  std::string admin_token;
  unsigned refresh_rate_seconds = 30;
  unsigned threads = 2;
};

struct HttpRequest {
  std::string method;
  std::string target;
  std::string authorization;
  std::string body;
};

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Plain HTTP routes, independent of the socket layer:
///   GET  /api/v1/health     service counters as JSON
///   GET  /api/v1/snapshot   current topology as XML
///   POST /api/v1/topology   replace the topology (Bearer admin token)
///   POST /api/v1/stats      {"<link id>": LinkStats, ...} (Bearer admin token)
///   GET  /<path>            file under static_dir
HttpReply route_request(Service& service, const ServerOptions& options, const HttpRequest& request);

/// HTTP/1.1 and WebSocket (/ws/v1) front end for a Service, plus the
/// periodic stats push.
class HttpServer {
 public:
  HttpServer(Service& service, ServerOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds, listens and starts the worker threads.
  Status<std::string> start();
  unsigned short port() const;
  /// Stops on SIGINT or SIGTERM, or after stop().
  void wait_for_signal();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace netvis
