#include "zoterag/logging.hpp"

#include <algorithm>
#include <mutex>
#include <set>

#include <spdlog/sinks/base_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>

namespace zoterag::logging {

namespace {

std::mutex& secrets_mutex() {
  static std::mutex mu;
  return mu;
}

std::set<std::string, std::greater<>>& secrets() {
  static std::set<std::string, std::greater<>> s;
  return s;
}

class RedactingSink final : public spdlog::sinks::base_sink<std::mutex> {
 public:
  explicit RedactingSink(std::vector<spdlog::sink_ptr> targets)
      : targets_(std::move(targets)) {}

 protected:
  void sink_it_(const spdlog::details::log_msg& msg) override {
    const std::string clean =
        redact(std::string_view(msg.payload.data(), msg.payload.size()));
    spdlog::details::log_msg copy = msg;
    copy.payload = spdlog::string_view_t(clean.data(), clean.size());
    for (auto& t : targets_) {
      if (t->should_log(copy.level)) t->log(copy);
    }
  }

  void flush_() override {
    for (auto& t : targets_) t->flush();
  }

 private:
  std::vector<spdlog::sink_ptr> targets_;
};

}  // namespace

void register_secret(std::string_view secret) {
  if (secret.size() < 4) return;  // too short to scrub without mangling text
  std::lock_guard lock(secrets_mutex());
  secrets().emplace(secret);
}

void clear_secrets() {
  std::lock_guard lock(secrets_mutex());
  secrets().clear();
}

std::string redact(std::string_view text) {
  std::string out(text);
  std::lock_guard lock(secrets_mutex());
  for (const auto& s : secrets()) {
    std::size_t pos = 0;
    while ((pos = out.find(s, pos)) != std::string::npos) {
      out.replace(pos, s.size(), "***");
      pos += 3;
    }
  }
  return out;
}

void install(std::vector<spdlog::sink_ptr> sinks) {
  if (sinks.empty()) {
    sinks.push_back(std::make_shared<spdlog::sinks::stderr_color_sink_mt>());
  }
  auto logger = std::make_shared<spdlog::logger>(
      "zoterag", std::make_shared<RedactingSink>(std::move(sinks)));
  logger->set_level(spdlog::level::info);
  spdlog::set_default_logger(std::move(logger));
}

std::shared_ptr<spdlog::logger> get() {
  auto logger = spdlog::get("zoterag");
  if (!logger) {
    install();
    logger = spdlog::get("zoterag");
  }
  return logger;
}

}  // namespace zoterag::logging
