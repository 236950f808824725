#include "zoterag/session.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include "zoterag/error.hpp"
#include "zoterag/fs_util.hpp"
#include "zoterag/logging.hpp"
#include "zoterag/text_util.hpp"

namespace zoterag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string random_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard g(mu);
  return "s-" + text::hex64(rng()).substr(0, 12);
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (true) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.emplace_back(text.substr(start));
      return lines;
    }
    lines.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
}

fs::path sessions_dir(const fs::path& data_dir) { return data_dir / "sessions"; }

// Runs one pipeline stage, prefixing failures with the stage name.
template <typename Fn>
auto stage(const char* name, Fn fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(name) + ": " + e.what());
  }
}

constexpr const char* kRetrievalKeys[] = {"search_type", "k", "fetch_k", "mmr_lambda",
                                          "lambda", "score_threshold", "compression"};
constexpr const char* kGenerationKeys[] = {"model", "model_id", "max_tokens"};

}  // namespace

std::string_view to_string(Role r) {
  return r == Role::kUser ? "user" : "assistant";
}

Role role_from_string(std::string_view s) {
  if (s == "user") return Role::kUser;
  if (s == "assistant") return Role::kAssistant;
  throw Error(ErrorCode::kInvalidParams, "unknown role '" + std::string(s) + "'");
}

json ChatTurn::to_json() const {
  json j = {{"role", std::string(zoterag::to_string(role))},
            {"content", content},
            {"timestamp", timestamp}};
  if (answer) j["answer"] = zoterag::to_json(*answer);
  return j;
}

ChatTurn ChatTurn::from_json(const json& j) {
  ChatTurn t;
  t.role = role_from_string(j.at("role").get<std::string>());
  t.content = j.at("content").get<std::string>();
  t.timestamp = j.value("timestamp", std::string());
  if (j.contains("answer") && !j.at("answer").is_null()) {
    t.answer = answer_from_json(j.at("answer"));
  }
  return t;
}

std::string render_transcript(const std::string& session_id,
                              const std::vector<ChatTurn>& turns) {
  std::string out = "Chat history export\n";
  out += "Session: " + session_id + "\n";
  out += "Turns: " + std::to_string(turns.size()) + "\n";
  for (const auto& turn : turns) {
    out += '\n';
    out += turn.role == Role::kUser ? "User:\n" : "Assistant:\n";
    for (const auto& line : split_lines(turn.content)) out += "  " + line + "\n";
    if (turn.role == Role::kAssistant && turn.answer) {
      out += "References:\n";
      for (const auto& r : turn.answer->references) {
        out += "  [" + std::to_string(r.n) + "] " + r.filename + "\n";
      }
      out += "All relevant sources:\n";
      for (const auto& s : turn.answer->all_relevant_sources) out += "  " + s + "\n";
    }
  }
  return out;
}

std::string render_answer(const Answer& answer) {
  std::string out = "Answer:\n" + answer.text + "\n\nReferences\n";
  for (const auto& r : answer.references) {
    out += "[" + std::to_string(r.n) + "] " + r.filename + "\n";
  }
  out += "\nSource Documents:\n";
  for (const auto& s : answer.source_excerpts) {
    char score[32];
    std::snprintf(score, sizeof(score), "%.3f", s.score);
    out += "- " + s.filename + " (score " + score + ")\n";
    for (const auto& line : split_lines(s.text)) out += "  " + line + "\n";
  }
  out += "\nAll relevant sources:\n";
  for (const auto& f : answer.all_relevant_sources) out += "- " + f + "\n";
  for (const auto& w : answer.warnings) out += "warning: " + w + "\n";
  return out;
}

std::vector<std::pair<Role, std::string>> parse_transcript(std::string_view text) {
  std::vector<std::pair<Role, std::string>> turns;
  auto lines = split_lines(text);
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  bool in_content = false;
  bool first_line = true;
  for (const auto& line : lines) {
    if (line == "User:" || line == "Assistant:") {
      turns.emplace_back(line == "User:" ? Role::kUser : Role::kAssistant, std::string());
      in_content = true;
      first_line = true;
      continue;
    }
    if (turns.empty()) continue;  // header
    if (in_content && line.starts_with("  ")) {
      if (!first_line) turns.back().second += '\n';
      turns.back().second += line.substr(2);
      first_line = false;
      continue;
    }
    in_content = false;  // References block or separator
  }
  return turns;
}

bool valid_session_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

ChatService::ChatService(Options opts) : opts_(std::move(opts)) {
  config_ = opts_.config;
  config_.validate();
  register_secrets();
  runner_ = std::make_unique<IngestRunner>(opts_.deps);
  const fs::path idx = index_dir(config_.data_dir);
  if (VectorStore::exists(idx)) {
    try {
      store_ = std::shared_ptr<VectorStore>(VectorStore::load(idx));
      logging::get()->info("loaded index with {} records", store_->size());
    } catch (const Error& e) {
      logging::get()->warn("ignoring unreadable index ({}): {}", to_string(e.code()),
                           e.what());
    }
  }
  if (opts_.persist_sessions) load_sessions();
}

ChatService::~ChatService() { runner_.reset(); }

void ChatService::register_secrets() const {
  for (const auto& s : config_.secrets()) logging::register_secret(s);
}

PipelineConfig ChatService::config() const {
  std::shared_lock lock(config_mu_);
  return config_;
}

bool ChatService::stale_against(const StoreManifest& m, const PipelineConfig& cfg) {
  return m.chunk_size != cfg.chunking.chunk_size ||
         m.chunk_overlap != cfg.chunking.chunk_overlap ||
         m.embedder_id != cfg.embedder.embedder_id();
}

IndexStatus ChatService::index_status() const {
  IndexStatus st;
  const auto store = current_store();
  if (!store) return st;
  st.exists = true;
  st.manifest = store->manifest();
  st.record_count = store->size();
  st.stale = stale_against(*st.manifest, config());
  return st;
}

json ChatService::config_json() const {
  json j = config().to_json();
  const IndexStatus st = index_status();
  j["index"] = {{"exists", st.exists},
                {"stale", st.stale},
                {"record_count", st.record_count}};
  if (st.manifest) {
    j["index"]["chunk_size"] = st.manifest->chunk_size;
    j["index"]["chunk_overlap"] = st.manifest->chunk_overlap;
    j["index"]["embedder_id"] = st.manifest->embedder_id;
  }
  j["available_models"] = available_models();
  return j;
}

PipelineConfig ChatService::update_config(const json& patch) {
  json p = patch;
  if (p.is_object()) p.erase("data_dir");  // fixed for the lifetime of the service
  std::unique_lock lock(config_mu_);
  PipelineConfig next = config_.patched(p);
  next.apply_secret_environment();
  config_ = next;
  register_secrets();
  return config_;
}

bool ChatService::apply_chunking_params(std::size_t chunk_size, std::size_t chunk_overlap) {
  update_config({{"chunking", {{"chunk_size", chunk_size}, {"chunk_overlap", chunk_overlap}}}});
  return index_status().stale;
}

std::shared_ptr<VectorStore> ChatService::current_store() const {
  std::lock_guard g(store_mu_);
  return store_;
}

std::string ChatService::start_ingest(const json& request) {
  if (!request.is_object()) {
    throw Error(ErrorCode::kInvalidParams, "ingest request must be a JSON object");
  }
  IngestSource source = IngestSource::kAuto;
  if (request.contains("source")) {
    if (!request.at("source").is_string()) {
      throw Error(ErrorCode::kInvalidParams, "source must be a string");
    }
    source = ingest_source_from_string(request.at("source").get<std::string>());
  }
  json lib = json::object();
  for (const char* key : {"library_type", "library_id", "api_key"}) {
    if (request.contains(key)) lib[key] = request.at(key);
  }
  PipelineConfig cfg = lib.empty() ? config() : update_config({{"library", lib}});
  if (source == IngestSource::kZotero) cfg.library.validate();

  IngestRequest req{cfg.library, cfg.chunking, cfg.embedder, cfg.data_dir, source};
  return runner_->submit(std::move(req), [this](const IngestOutcome& outcome) {
    if (!outcome.store) return;
    std::lock_guard g(store_mu_);
    store_ = outcome.store;
  });
}

IngestReport ChatService::ingest_report(const std::string& job_id) const {
  return runner_->report(job_id);
}

IngestReport ChatService::wait_ingest(const std::string& job_id) const {
  return runner_->wait(job_id);
}

std::shared_ptr<ChatService::Session> ChatService::find_session(const std::string& id) const {
  std::lock_guard g(sessions_mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::shared_ptr<ChatService::Session> ChatService::get_or_create(const std::string& id) {
  if (!valid_session_id(id)) {
    throw Error(ErrorCode::kInvalidParams,
                "session id must be 1-64 characters of [A-Za-z0-9_-]");
  }
  std::lock_guard g(sessions_mu_);
  auto& slot = sessions_[id];
  if (!slot) {
    slot = std::make_shared<Session>();
    if (opts_.persist_sessions) {
      std::error_code ec;
      const fs::path dir = sessions_dir(config().data_dir);
      fs::create_directories(dir, ec);
      std::ofstream touch(dir / (id + ".jsonl"), std::ios::app);
    }
  }
  return slot;
}

std::string ChatService::create_session(const std::string& requested_id) {
  std::string id = requested_id;
  if (id.empty()) {
    do {
      id = random_id();
    } while (has_session(id));
  }
  get_or_create(id);
  return id;
}

bool ChatService::has_session(const std::string& id) const {
  return find_session(id) != nullptr;
}

Answer ChatService::ask(const std::string& session_id, const std::string& question,
                        const json& overrides) {
  if (!valid_session_id(session_id)) {
    throw Error(ErrorCode::kInvalidParams,
                "session id must be 1-64 characters of [A-Za-z0-9_-]");
  }
  const PipelineConfig cfg = config();
  const auto store = current_store();
  if (!store) {
    throw Error(ErrorCode::kNoIndex, "no index has been built yet; run an ingest first");
  }
  if (stale_against(store->manifest(), cfg)) {
    throw Error(ErrorCode::kIndexStale,
                "chunking or embedding settings changed since the last ingest; "
                "re-ingest before asking");
  }
  if (text::is_blank(question)) {
    throw Error(ErrorCode::kEmptyQuestion, "question must not be empty");
  }
  if (!overrides.is_null() && !overrides.is_object()) {
    throw Error(ErrorCode::kInvalidParams, "overrides must be a JSON object");
  }

  json retrieval_patch = json::object();
  json generation_patch = json::object();
  if (overrides.is_object()) {
    if (overrides.contains("retrieval")) retrieval_patch = overrides.at("retrieval");
    if (overrides.contains("generation")) generation_patch = overrides.at("generation");
    for (const char* key : kRetrievalKeys) {
      if (overrides.contains(key) && retrieval_patch.is_object()) {
        retrieval_patch[key] = overrides.at(key);
      }
    }
    for (const char* key : kGenerationKeys) {
      if (overrides.contains(key) && generation_patch.is_object()) {
        generation_patch[key] = overrides.at(key);
      }
    }
  }
  const RetrievalConfig retrieval = patched_retrieval(cfg.retrieval, retrieval_patch);
  const GenConfig generation = patched_generation(cfg.generation, generation_patch);

  auto session = get_or_create(session_id);

  const RetrievalResult result = stage("retrieve", [&] {
    auto embedder = make_embedder(cfg.embedder, opts_.deps.provider_transport);
    return retrieve(question, retrieval, *store, *embedder);
  });
  const PromptBundle bundle = build_prompt(question, result);
  const std::string raw = stage("generate", [&] {
    auto provider = make_chat_provider(generation, opts_.deps.provider_transport);
    return generate_answer(*provider, bundle);
  });
  Answer answer = resolve_citations(raw, bundle, result);

  ChatTurn user{Role::kUser, question, std::nullopt, utc_now()};
  ChatTurn assistant{Role::kAssistant, answer.text, answer, utc_now()};
  {
    std::lock_guard g(session->mu);
    session->turns.push_back(user);
    session->turns.push_back(assistant);
    if (opts_.persist_sessions) persist_turns(session_id, {user, assistant});
  }
  logging::get()->info("answered question in session {} with {} sources", session_id,
                       answer.references.size());
  return answer;
}

std::vector<ChatTurn> ChatService::history(const std::string& session_id) const {
  auto session = find_session(session_id);
  if (!session) {
    throw Error(ErrorCode::kUnknownSession, "unknown session '" + session_id + "'");
  }
  std::lock_guard g(session->mu);
  return session->turns;
}

std::string ChatService::export_history(const std::string& session_id) const {
  return render_transcript(session_id, history(session_id));
}

std::uint64_t ChatService::store_hash() const {
  const auto store = current_store();
  return store ? store->content_hash() : 0;
}

void ChatService::persist_turns(const std::string& id,
                                const std::vector<ChatTurn>& turns) const {
  std::error_code ec;
  const fs::path dir = sessions_dir(config().data_dir);
  fs::create_directories(dir, ec);
  std::ofstream out(dir / (id + ".jsonl"), std::ios::app | std::ios::binary);
  for (const auto& t : turns) out << t.to_json().dump() << '\n';
  if (!out) {
    logging::get()->warn("could not persist history for session {}", id);
  }
}

void ChatService::load_sessions() {
  const fs::path dir = sessions_dir(config_.data_dir);
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.path().extension() != ".jsonl") continue;
    const std::string id = entry.path().stem().string();
    if (!valid_session_id(id)) continue;
    auto session = std::make_shared<Session>();
    try {
      std::istringstream in(fs_util::read_file(entry.path()));
      std::string line;
      while (std::getline(in, line)) {
        if (text::is_blank(line)) continue;
        session->turns.push_back(ChatTurn::from_json(json::parse(line)));
      }
    } catch (const std::exception& e) {
      logging::get()->warn("session file {} is damaged after {} turns: {}",
                           entry.path().string(), session->turns.size(), e.what());
    }
    sessions_[id] = std::move(session);
  }
}

}  // namespace zoterag
