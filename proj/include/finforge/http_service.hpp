#pragma once

#include <memory>
#include <string>

#include "finforge/engine.hpp"

namespace httplib {
class Server;
}

namespace finforge {

/// JSON-over-HTTP front end for an Engine. Errors come back as
/// `{code, message, detail}` with the status from http_status().
class HttpService {
 public:
  explicit HttpService(Engine& engine);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  void run();
  void stop();

 private:
  void routes();

  Engine& engine_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace finforge
