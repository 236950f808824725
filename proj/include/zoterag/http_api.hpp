#pragma once

#include <memory>
#include <string>

#include "zoterag/error.hpp"
#include "zoterag/session.hpp"

namespace zoterag {

// HTTP status used for each error code in API responses.
int http_status_for(ErrorCode code);

// JSON API plus the static single-page client at "/".
class HttpApi {
 public:
  explicit HttpApi(ChatService& service);
  ~HttpApi();
  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  // Binds to host:port (0 picks a free port) and returns the bound port.
  // Throws Error(kIoError) when binding fails.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind().
  void listen();
  // bind() and serve on a background thread.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace zoterag
