#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <spdlog/sinks/sink.h>
#include <spdlog/spdlog.h>

namespace zoterag::logging {

// Secrets registered here are replaced with "***" in every log line that
// passes through a logger created by install().
void register_secret(std::string_view secret);
void clear_secrets();
std::string redact(std::string_view text);

// Installs the "zoterag" logger as the spdlog default, writing through a
// redacting wrapper to the given sinks (stderr when empty).
void install(std::vector<spdlog::sink_ptr> sinks = {});

std::shared_ptr<spdlog::logger> get();

}  // namespace zoterag::logging
