#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "zoterag/config.hpp"
#include "zoterag/generator.hpp"
#include "zoterag/ingest.hpp"
#include "zoterag/vector_store.hpp"

namespace zoterag {

enum class Role { kUser, kAssistant };

std::string_view to_string(Role r);
Role role_from_string(std::string_view s);

struct ChatTurn {
  Role role = Role::kUser;
  std::string content;
  std::optional<Answer> answer;  // assistant turns only
  std::string timestamp;

  nlohmann::json to_json() const;
  static ChatTurn from_json(const nlohmann::json& j);
};

// Plain-text transcript of a session and its inverse. parse_transcript
// returns the (role, content) sequence; answers and timestamps are not
// recovered.
std::string render_transcript(const std::string& session_id,
                              const std::vector<ChatTurn>& turns);
std::vector<std::pair<Role, std::string>> parse_transcript(std::string_view text);

// Terminal rendering of an answer under the headers "Answer:", "References",
// "Source Documents:" and "All relevant sources:".
std::string render_answer(const Answer& answer);

// Session ids are 1-64 characters from [A-Za-z0-9_-].
bool valid_session_id(std::string_view id);

struct IndexStatus {
  bool exists = false;
  bool stale = false;
  std::size_t record_count = 0;
  std::optional<StoreManifest> manifest;
};

// Owns the effective configuration, the loaded index, the ingest runner and
// chat sessions. Safe to call from concurrent HTTP handlers.
class ChatService {
 public:
  struct Options {
    PipelineConfig config = PipelineConfig::defaults();
    IngestDeps deps;
    bool persist_sessions = true;
  };

  explicit ChatService(Options opts);
  ~ChatService();

  PipelineConfig config() const;
  // Effective config plus index status and available models; secrets redacted.
  nlohmann::json config_json() const;
  // Partial update; environment secrets are reapplied afterwards.
  PipelineConfig update_config(const nlohmann::json& patch);
  // Returns whether the index is stale afterwards. Throws Error(kInvalidParams).
  bool apply_chunking_params(std::size_t chunk_size, std::size_t chunk_overlap);

  IndexStatus index_status() const;

  // Throws Error(kBusy) while another ingest is running.
  std::string start_ingest(const nlohmann::json& request = nlohmann::json::object());
  IngestReport ingest_report(const std::string& job_id) const;
  IngestReport wait_ingest(const std::string& job_id) const;

  // Creates a session (random id when none is given).
  std::string create_session(const std::string& requested_id = {});
  bool has_session(const std::string& id) const;

  // Unknown but well-formed session ids are created on first ask.
  Answer ask(const std::string& session_id, const std::string& question,
             const nlohmann::json& overrides = nlohmann::json::object());

  std::vector<ChatTurn> history(const std::string& session_id) const;
  std::string export_history(const std::string& session_id) const;

  // Hash of the loaded index contents; 0 without an index.
  std::uint64_t store_hash() const;

 private:
  struct Session {
    std::mutex mu;
    std::vector<ChatTurn> turns;
  };

  std::shared_ptr<VectorStore> current_store() const;
  std::shared_ptr<Session> find_session(const std::string& id) const;
  std::shared_ptr<Session> get_or_create(const std::string& id);
  void load_sessions();
  void persist_turns(const std::string& id, const std::vector<ChatTurn>& turns) const;
  void register_secrets() const;
  static bool stale_against(const StoreManifest& m, const PipelineConfig& cfg);

  Options opts_;
  mutable std::shared_mutex config_mu_;
  PipelineConfig config_;
  mutable std::mutex store_mu_;
  std::shared_ptr<VectorStore> store_;
  std::unique_ptr<IngestRunner> runner_;
  mutable std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace zoterag
