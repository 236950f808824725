#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace zoterag::http {

using Headers = std::vector<std::pair<std::string, std::string>>;

struct Request {
  std::string method;
  std::string url;  // absolute, including query string
  Headers headers;
  std::string body;

  std::string header(std::string_view name) const;
};

struct Response {
  int status = 0;
  std::map<std::string, std::string> headers;  // lowercased names
  std::string body;

  std::string header(std::string_view name) const;
};

// Splits "https://host[:port]/path?q" into origin and path-with-query.
struct UrlParts {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string target;
};
UrlParts parse_url(const std::string& url);

class Transport {
 public:
  virtual ~Transport() = default;
  // Throws Error(kTransport) on connection failure or timeout. HTTP error
  // statuses are returned, not thrown.
  virtual Response send(const Request& request) = 0;
};

// Bounds concurrent requests per host.
class HostLimiter {
 public:
  explicit HostLimiter(std::size_t per_host = 4) : cap_(per_host) {}

  class Permit {
   public:
    Permit(HostLimiter* owner, std::string host)
        : owner_(owner), host_(std::move(host)) {}
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;
    ~Permit() { owner_->release(host_); }

   private:
    HostLimiter* owner_;
    std::string host_;
  };

  std::unique_ptr<Permit> acquire(const std::string& host);
  std::size_t cap() const { return cap_; }

 private:
  void release(const std::string& host);

  std::size_t cap_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, std::size_t> active_;
};

class NetworkTransport : public Transport {
 public:
  explicit NetworkTransport(std::shared_ptr<HostLimiter> limiter =
                                std::make_shared<HostLimiter>(),
                            std::chrono::seconds timeout =
                                std::chrono::seconds(60));
  Response send(const Request& request) override;

 private:
  std::shared_ptr<HostLimiter> limiter_;
  std::chrono::seconds timeout_;
};

// Replays recorded exchanges from one or more scenario directories. Each
// exchange NNN consists of NNN.request.json ({"method", "url", optional
// "headers" to match}), an optional NNN.request.body that the outgoing body
// must equal byte for byte, NNN.response.json ({"status", "headers"}) and an
// optional NNN.response.body. The first exchange in numeric order whose
// method, url, listed headers and body all match is replayed.
class FixtureTransport : public Transport {
 public:
  explicit FixtureTransport(const std::filesystem::path& scenario_dir);
  FixtureTransport(const std::vector<std::filesystem::path>& scenario_dirs);

  Response send(const Request& request) override;

  std::vector<Request> sent() const;
  std::size_t exchange_count() const { return exchanges_.size(); }

 private:
  struct Exchange {
    std::string name;
    std::string method;
    std::string url;
    Headers match_headers;
    bool has_body = false;
    std::string body;
    Response response;
  };
  void load(const std::filesystem::path& dir);

  std::vector<Exchange> exchanges_;
  mutable std::mutex mu_;
  std::vector<Request> sent_;
};

// Forwards to another transport and writes every exchange to a scenario
// directory in the FixtureTransport layout. Header values are not recorded.
class RecordingTransport : public Transport {
 public:
  RecordingTransport(std::shared_ptr<Transport> inner,
                     std::filesystem::path dir);
  Response send(const Request& request) override;

 private:
  std::shared_ptr<Transport> inner_;
  std::filesystem::path dir_;
  std::mutex mu_;
  std::size_t next_ = 1;
};

// Retry policy for HTTP 429. The sleeper is injectable so tests run instantly.
struct BackoffPolicy {
  std::chrono::milliseconds base{1000};
  double factor = 2.0;
  int max_tries = 5;
  std::function<void(std::chrono::milliseconds)> sleep;

  Response send_with_retry(Transport& transport, const Request& request) const;
};

}  // namespace zoterag::http
