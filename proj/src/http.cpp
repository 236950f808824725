#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "zoterag/http.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "zoterag/error.hpp"
#include "zoterag/fs_util.hpp"

namespace zoterag::http {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::string Request::header(std::string_view name) const {
  for (const auto& [k, v] : headers) {
    if (iequals(k, name)) return v;
  }
  return {};
}

std::string Response::header(std::string_view name) const {
  auto it = headers.find(lower(name));
  return it == headers.end() ? std::string() : it->second;
}

UrlParts parse_url(const std::string& url) {
  UrlParts parts;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kTransport, "malformed url: " + url);
  }
  parts.scheme = lower(url.substr(0, scheme_end));
  const auto host_begin = scheme_end + 3;
  const auto path_begin = url.find('/', host_begin);
  std::string authority = url.substr(
      host_begin, path_begin == std::string::npos ? std::string::npos
                                                  : path_begin - host_begin);
  parts.target = path_begin == std::string::npos ? "/" : url.substr(path_begin);
  const auto colon = authority.rfind(':');
  if (colon != std::string::npos) {
    parts.host = authority.substr(0, colon);
    parts.port = std::stoi(authority.substr(colon + 1));
  } else {
    parts.host = authority;
    parts.port = parts.scheme == "https" ? 443 : 80;
  }
  if (parts.host.empty()) {
    throw Error(ErrorCode::kTransport, "malformed url: " + url);
  }
  return parts;
}

std::unique_ptr<HostLimiter::Permit> HostLimiter::acquire(
    const std::string& host) {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return active_[host] < cap_; });
  ++active_[host];
  return std::make_unique<Permit>(this, host);
}

void HostLimiter::release(const std::string& host) {
  {
    std::lock_guard lock(mu_);
    --active_[host];
  }
  cv_.notify_all();
}

NetworkTransport::NetworkTransport(std::shared_ptr<HostLimiter> limiter,
                                   std::chrono::seconds timeout)
    : limiter_(std::move(limiter)), timeout_(timeout) {}

Response NetworkTransport::send(const Request& request) {
  const UrlParts parts = parse_url(request.url);
  auto permit = limiter_->acquire(parts.host);

  httplib::Client client(parts.scheme + "://" + parts.host + ":" +
                         std::to_string(parts.port));
  client.set_follow_location(true);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);

  httplib::Headers headers;
  std::string content_type = "application/json";
  for (const auto& [k, v] : request.headers) {
    if (iequals(k, "Content-Type")) {
      content_type = v;
    } else {
      headers.emplace(k, v);
    }
  }

  httplib::Result result;
  if (request.method == "GET") {
    result = client.Get(parts.target, headers);
  } else if (request.method == "POST") {
    result = client.Post(parts.target, headers, request.body, content_type);
  } else {
    throw Error(ErrorCode::kTransport,
                "unsupported method " + request.method);
  }
  if (!result) {
    throw Error(ErrorCode::kTransport,
                request.method + " " + parts.host + parts.target + ": " +
                    httplib::to_string(result.error()));
  }
  Response response;
  response.status = result->status;
  response.body = result->body;
  for (const auto& [k, v] : result->headers) {
    response.headers[lower(k)] = v;
  }
  return response;
}

FixtureTransport::FixtureTransport(const std::filesystem::path& scenario_dir) {
  load(scenario_dir);
}

FixtureTransport::FixtureTransport(
    const std::vector<std::filesystem::path>& scenario_dirs) {
  for (const auto& dir : scenario_dirs) load(dir);
}

void FixtureTransport::load(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kIoError,
                "fixture directory not found: " + dir.string());
  }
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string file = entry.path().filename().string();
    const std::string suffix = ".request.json";
    if (file.size() > suffix.size() &&
        file.compare(file.size() - suffix.size(), suffix.size(), suffix) ==
            0) {
      names.push_back(file.substr(0, file.size() - suffix.size()));
    }
  }
  std::sort(names.begin(), names.end());
  for (const auto& name : names) {
    Exchange ex;
    ex.name = (dir / name).string();
    const auto req = nlohmann::json::parse(
        fs_util::read_file(dir / (name + ".request.json")));
    ex.method = req.at("method").get<std::string>();
    ex.url = req.at("url").get<std::string>();
    if (req.contains("headers")) {
      for (const auto& [k, v] : req["headers"].items()) {
        ex.match_headers.emplace_back(k, v.get<std::string>());
      }
    }
    if (fs::exists(dir / (name + ".request.body"))) {
      ex.has_body = true;
      ex.body = fs_util::read_file(dir / (name + ".request.body"));
    }
    const auto resp = nlohmann::json::parse(
        fs_util::read_file(dir / (name + ".response.json")));
    ex.response.status = resp.at("status").get<int>();
    if (resp.contains("headers")) {
      for (const auto& [k, v] : resp["headers"].items()) {
        ex.response.headers[lower(k)] = v.get<std::string>();
      }
    }
    if (fs::exists(dir / (name + ".response.body"))) {
      ex.response.body = fs_util::read_file(dir / (name + ".response.body"));
    }
    exchanges_.push_back(std::move(ex));
  }
}

Response FixtureTransport::send(const Request& request) {
  {
    std::lock_guard lock(mu_);
    sent_.push_back(request);
  }
  for (const Exchange& ex : exchanges_) {
    if (ex.method != request.method || ex.url != request.url) continue;
    const bool headers_match = std::all_of(
        ex.match_headers.begin(), ex.match_headers.end(),
        [&](const auto& h) { return request.header(h.first) == h.second; });
    if (!headers_match) continue;
    if (ex.has_body && ex.body != request.body) continue;
    return ex.response;
  }
  throw Error(ErrorCode::kTransport, "no recorded exchange for " +
                                         request.method + " " + request.url);
}

std::vector<Request> FixtureTransport::sent() const {
  std::lock_guard lock(mu_);
  return sent_;
}

RecordingTransport::RecordingTransport(std::shared_ptr<Transport> inner,
                                       std::filesystem::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

Response RecordingTransport::send(const Request& request) {
  Response response = inner_->send(request);
  std::lock_guard lock(mu_);
  std::ostringstream name;
  name << std::setw(3) << std::setfill('0') << next_++;
  const std::string stem = name.str();
  nlohmann::json req = {{"method", request.method}, {"url", request.url}};
  fs_util::write_file_atomic(dir_ / (stem + ".request.json"), req.dump(2));
  if (!request.body.empty()) {
    fs_util::write_file_atomic(dir_ / (stem + ".request.body"), request.body);
  }
  nlohmann::json resp = {{"status", response.status},
                         {"headers", nlohmann::json::object()}};
  if (auto ct = response.header("content-type"); !ct.empty()) {
    resp["headers"]["Content-Type"] = ct;
  }
  fs_util::write_file_atomic(dir_ / (stem + ".response.json"), resp.dump(2));
  fs_util::write_file_atomic(dir_ / (stem + ".response.body"), response.body);
  return response;
}

Response BackoffPolicy::send_with_retry(Transport& transport,
                                        const Request& request) const {
  auto delay = base;
  for (int attempt = 1;; ++attempt) {
    Response response = transport.send(request);
    if (response.status != 429 || attempt >= max_tries) return response;
    if (sleep) {
      sleep(delay);
    } else {
      std::this_thread::sleep_for(delay);
    }
    delay = std::chrono::milliseconds(
        static_cast<long long>(static_cast<double>(delay.count()) * factor));
  }
}

}  // namespace zoterag::http
