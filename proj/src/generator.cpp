#include "zoterag/generator.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "prompt_resource.hpp"
#include "zoterag/error.hpp"
#include "zoterag/fs_util.hpp"
#include "zoterag/logging.hpp"
#include "zoterag/text_util.hpp"

namespace zoterag {

using nlohmann::json;

std::string_view to_string(GenProvider p) {
  return p == GenProvider::kRemote ? "remote" : "scripted_mock";
}

GenProvider gen_provider_from_string(std::string_view s) {
  if (s == "remote") return GenProvider::kRemote;
  if (s == "scripted_mock") return GenProvider::kScriptedMock;
  throw Error(ErrorCode::kInvalidParams,
              "unknown generation provider: " + std::string(s));
}

void GenConfig::validate() const {
  if (max_tokens < 1) {
    throw Error(ErrorCode::kInvalidParams, "max_tokens must be >= 1");
  }
  if (model_id.empty()) {
    throw Error(ErrorCode::kInvalidParams, "model id must not be empty");
  }
  if (provider == GenProvider::kRemote && (base_url.empty() || api_key.empty())) {
    throw Error(ErrorCode::kInvalidParams,
                "remote generation requires base_url and api_key");
  }
}

PromptTemplate PromptTemplate::parse(std::string_view text) {
  constexpr std::string_view kVersion = "version: ";
  constexpr std::string_view kSystem = "=== system ===\n";
  constexpr std::string_view kUser = "=== user ===\n";
  const auto sys = text.find(kSystem);
  const auto usr = text.find(kUser);
  if (!text.starts_with(kVersion) || sys == std::string_view::npos ||
      usr == std::string_view::npos || usr < sys) {
    throw Error(ErrorCode::kInvalidParams, "malformed prompt template");
  }
  PromptTemplate t;
  t.version = std::string(
      text::trim_ascii(text.substr(kVersion.size(), sys - kVersion.size())));
  t.system_text = std::string(text::trim_ascii(
      text.substr(sys + kSystem.size(), usr - sys - kSystem.size())));
  t.user_template =
      std::string(text::trim_ascii(text.substr(usr + kUser.size())));
  if (t.user_template.find("{sources}") == std::string::npos ||
      t.user_template.find("{question}") == std::string::npos) {
    throw Error(ErrorCode::kInvalidParams,
                "prompt template lacks {sources} or {question}");
  }
  return t;
}

PromptTemplate PromptTemplate::builtin() {
  static const PromptTemplate t = parse(resources::kPromptV1);
  return t;
}

std::string PromptBundle::fingerprint() const {
  std::string material = system_text;
  material.push_back('\x1f');
  material += user_text;
  return text::hex64(text::fnv1a64(material));
}

namespace {

// Fills both placeholders in one pass so substituted text is never rescanned.
std::string fill_template(std::string_view tmpl, std::string_view sources,
                          std::string_view question) {
  constexpr std::string_view kSources = "{sources}";
  constexpr std::string_view kQuestion = "{question}";
  const auto sp = tmpl.find(kSources);
  const auto qp = tmpl.find(kQuestion);
  std::string out;
  std::size_t pos = 0;
  auto emit = [&](std::size_t at, std::string_view key, std::string_view value) {
    out.append(tmpl.substr(pos, at - pos));
    out.append(value);
    pos = at + key.size();
  };
  if (sp != std::string_view::npos && (qp == std::string_view::npos || sp < qp)) {
    emit(sp, kSources, sources);
    if (qp != std::string_view::npos) emit(qp, kQuestion, question);
  } else if (qp != std::string_view::npos) {
    emit(qp, kQuestion, question);
    if (sp != std::string_view::npos) emit(sp, kSources, sources);
  }
  out.append(tmpl.substr(pos));
  return out;
}

std::string meta(const VectorRecord& r, const std::string& key) {
  auto it = r.metadata.find(key);
  return it == r.metadata.end() ? std::string() : it->second;
}

}  // namespace

PromptBundle build_prompt(std::string_view question,
                          const RetrievalResult& result,
                          const PromptTemplate& tmpl) {
  PromptBundle bundle;
  bundle.template_version = tmpl.version;
  bundle.system_text = tmpl.system_text;
  bundle.no_context = result.hits.empty();

  std::map<std::string, int> ref_of;
  for (const auto& hit : result.hits) {
    const auto& doc_id = hit.record.chunk.doc_id;
    auto [it, inserted] =
        ref_of.emplace(doc_id, static_cast<int>(ref_of.size()) + 1);
    if (inserted) {
      bundle.source_index.push_back({it->second, doc_id,
                                     meta(hit.record, "filename"),
                                     meta(hit.record, "title")});
    }
    bundle.chunk_map.push_back({it->second, hit.record.record_id,
                                hit.record.chunk.text,
                                meta(hit.record, "filename"), hit.score});
  }

  std::string sources;
  for (const auto& src : bundle.source_index) {
    if (!sources.empty()) sources += "\n\n";
    sources += "[" + std::to_string(src.ref_number) + "] " + src.filename;
    for (const auto& row : bundle.chunk_map) {
      if (row.ref_number != src.ref_number) continue;
      sources += "\n";
      sources += row.excerpt;
      sources += "\n";
    }
  }
  if (sources.empty()) sources = "(none)";
  bundle.user_text = fill_template(tmpl.user_template, sources, question);
  return bundle;
}

RemoteChatProvider::RemoteChatProvider(GenConfig cfg,
                                       std::shared_ptr<http::Transport> transport,
                                       http::BackoffPolicy backoff)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      backoff_(std::move(backoff)) {
  cfg_.validate();
  logging::register_secret(cfg_.api_key);
}

std::string RemoteChatProvider::request_body(const PromptBundle& bundle) const {
  return json{{"model", cfg_.model_id},
              {"messages",
               {{{"role", "system"}, {"content", bundle.system_text}},
                {{"role", "user"}, {"content", bundle.user_text}}}},
              {"max_tokens", cfg_.max_tokens},
              {"temperature", 0}}
      .dump();
}

std::string RemoteChatProvider::complete(const PromptBundle& bundle) {
  http::Request req{"POST", cfg_.base_url + "/v1/chat/completions",
                    {{"Authorization", "Bearer " + cfg_.api_key},
                     {"Content-Type", "application/json"}},
                    request_body(bundle)};
  const http::Response resp = backoff_.send_with_retry(*transport_, req);
  json doc;
  try {
    doc = json::parse(resp.body);
  } catch (const json::exception&) {
    doc = json::object();
  }
  if (resp.status < 200 || resp.status >= 300) {
    const bool overflow =
        doc.is_object() && doc.contains("error") && doc["error"].is_object() &&
        doc["error"].value("code", std::string()) == "context_length_exceeded";
    if (overflow) {
      throw Error(ErrorCode::kContextOverflow,
                  "the prompt exceeds the model context window; lower k or "
                  "chunk_size and try again");
    }
    throw Error(ErrorCode::kProviderError,
                "chat completion failed with HTTP " +
                    std::to_string(resp.status));
  }
  try {
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProviderError,
                std::string("malformed chat completion response: ") + e.what());
  }
}

ScriptedMockProvider::ScriptedMockProvider(const std::filesystem::path& script)
    : script_(json::parse(fs_util::read_file(script))) {}

ScriptedMockProvider::ScriptedMockProvider(json script)
    : script_(std::move(script)) {}

std::string ScriptedMockProvider::complete(const PromptBundle& bundle) {
  ++calls_;
  const std::string key = bundle.fingerprint();
  if (script_.contains("responses") && script_["responses"].contains(key)) {
    return script_["responses"][key].get<std::string>();
  }
  if (script_.contains("default")) {
    return script_["default"].get<std::string>();
  }
  if (script_.contains("responses")) {
    logging::get()->warn("scripted reply for prompt {} not found", key);
  }
  std::string reply;
  for (const auto& src : bundle.source_index) {
    const auto row = std::find_if(
        bundle.chunk_map.begin(), bundle.chunk_map.end(),
        [&](const ChunkRef& r) { return r.ref_number == src.ref_number; });
    std::string excerpt = row == bundle.chunk_map.end() ? "" : row->excerpt;
    for (char& c : excerpt) {
      if (c == '\n') c = ' ';
    }
    const auto offsets = text::char_offsets(excerpt);
    if (offsets.size() > 161) excerpt = excerpt.substr(0, offsets[160]) + "...";
    if (!reply.empty()) reply += ' ';
    reply += src.filename + " states: \"" + excerpt + "\" [" +
             std::to_string(src.ref_number) + "]";
  }
  return reply;
}

std::unique_ptr<ChatProvider> make_chat_provider(
    const GenConfig& cfg, std::shared_ptr<http::Transport> transport) {
  cfg.validate();
  if (cfg.provider == GenProvider::kScriptedMock) {
    if (cfg.script_path.empty()) return std::make_unique<ScriptedMockProvider>();
    return std::make_unique<ScriptedMockProvider>(cfg.script_path);
  }
  return std::make_unique<RemoteChatProvider>(cfg, std::move(transport));
}

std::string generate_answer(ChatProvider& provider, const PromptBundle& bundle) {
  if (bundle.no_context) return std::string(kNoContextReply);
  return provider.complete(bundle);
}

Answer resolve_citations(const std::string& raw, const PromptBundle& bundle,
                         const RetrievalResult& result) {
  Answer answer;
  answer.text = raw;
  for (const auto& src : bundle.source_index) {
    answer.references.push_back({src.ref_number, src.filename});
  }
  for (const auto& row : bundle.chunk_map) {
    answer.source_excerpts.push_back({row.excerpt, row.filename, row.score});
  }
  std::set<std::string> seen;
  for (const auto& hit : result.hits) {
    const std::string filename = meta(hit.record, "filename");
    if (seen.insert(filename).second) {
      answer.all_relevant_sources.push_back(filename);
    }
  }
  if (bundle.no_context) return answer;

  const long long count = static_cast<long long>(answer.references.size());
  std::size_t markers = 0;
  std::set<std::string> warned;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] != '[') continue;
    std::size_t j = i + 1;
    while (j < raw.size() && raw[j] >= '0' && raw[j] <= '9') ++j;
    if (j == i + 1 || j >= raw.size() || raw[j] != ']') continue;
    ++markers;
    const std::string digits = raw.substr(i + 1, j - i - 1);
    const auto first_nonzero = digits.find_first_not_of('0');
    const std::size_t significant =
        first_nonzero == std::string::npos ? 0 : digits.size() - first_nonzero;
    const long long n =
        significant == 0 ? 0
        : significant > 18 ? -1
                           : std::stoll(digits.substr(first_nonzero));
    if (n < 1 || n > count) {
      const std::string warning = "unresolved citation [" + digits + "]";
      if (warned.insert(warning).second) answer.warnings.push_back(warning);
    }
    i = j;
  }
  if (markers == 0) answer.warnings.push_back("answer contains no citations");
  return answer;
}

json to_json(const Answer& answer) {
  json refs = json::array();
  for (const auto& r : answer.references) {
    refs.push_back({{"n", r.n}, {"filename", r.filename}});
  }
  json excerpts = json::array();
  for (const auto& e : answer.source_excerpts) {
    excerpts.push_back(
        {{"text", e.text}, {"filename", e.filename}, {"score", e.score}});
  }
  return {{"text", answer.text},
          {"references", refs},
          {"source_excerpts", excerpts},
          {"all_relevant_sources", answer.all_relevant_sources},
          {"warnings", answer.warnings}};
}

Answer answer_from_json(const json& j) {
  Answer a;
  a.text = j.at("text").get<std::string>();
  for (const auto& r : j.at("references")) {
    a.references.push_back(
        {r.at("n").get<int>(), r.at("filename").get<std::string>()});
  }
  for (const auto& e : j.at("source_excerpts")) {
    a.source_excerpts.push_back({e.at("text").get<std::string>(),
                                 e.at("filename").get<std::string>(),
                                 e.at("score").get<double>()});
  }
  a.all_relevant_sources =
      j.at("all_relevant_sources").get<std::vector<std::string>>();
  a.warnings = j.at("warnings").get<std::vector<std::string>>();
  return a;
}

}  // namespace zoterag
