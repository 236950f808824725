#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "zoterag/http.hpp"
#include "zoterag/retriever.hpp"

namespace zoterag {

enum class GenProvider { kRemote, kScriptedMock };

std::string_view to_string(GenProvider p);
GenProvider gen_provider_from_string(std::string_view s);

struct GenConfig {
  GenProvider provider = GenProvider::kRemote;
  std::string model_id = "gpt-4";
  std::size_t max_tokens = 4000;
  std::string base_url = "https://api.openai.com";
  std::string api_key;
  // Scripted mock only; empty means built-in extractive replies.
  std::filesystem::path script_path;

  void validate() const;
};

// Prompt wording lives in a versioned resource; the built-in copy is
// compiled from resources/prompt.v1.txt.
struct PromptTemplate {
  std::string version;
  std::string system_text;
  std::string user_template;  // contains {sources} and {question}

  static PromptTemplate builtin();
  static PromptTemplate parse(std::string_view text);
};

struct SourceEntry {
  int ref_number = 0;
  std::string doc_id;
  std::string filename;
  std::string title;
};

struct ChunkRef {
  int ref_number = 0;
  std::string record_id;
  std::string excerpt;
  std::string filename;
  double score = 0.0;
};

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  std::vector<SourceEntry> source_index;
  std::vector<ChunkRef> chunk_map;
  bool no_context = false;
  std::string template_version;

  // Key used by the scripted mock provider.
  std::string fingerprint() const;
};

struct Reference {
  int n = 0;
  std::string filename;
  bool operator==(const Reference&) const = default;
};

struct SourceExcerpt {
  std::string text;
  std::string filename;
  double score = 0.0;
  bool operator==(const SourceExcerpt&) const = default;
};

struct Answer {
  std::string text;
  std::vector<Reference> references;
  std::vector<SourceExcerpt> source_excerpts;
  std::vector<std::string> all_relevant_sources;
  std::vector<std::string> warnings;

  bool operator==(const Answer&) const = default;
};

nlohmann::json to_json(const Answer& answer);
Answer answer_from_json(const nlohmann::json& j);

inline constexpr std::string_view kNoContextReply =
    "No relevant documents were found in the library for this question.";

PromptBundle build_prompt(std::string_view question,
                          const RetrievalResult& result,
                          const PromptTemplate& tmpl = PromptTemplate::builtin());

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string complete(const PromptBundle& bundle) = 0;
};

// OpenAI-compatible POST {base_url}/v1/chat/completions at temperature 0.
class RemoteChatProvider : public ChatProvider {
 public:
  RemoteChatProvider(GenConfig cfg, std::shared_ptr<http::Transport> transport,
                     http::BackoffPolicy backoff = {});
  std::string complete(const PromptBundle& bundle) override;
  std::string request_body(const PromptBundle& bundle) const;

 private:
  GenConfig cfg_;
  std::shared_ptr<http::Transport> transport_;
  http::BackoffPolicy backoff_;
};

// Replies from a script {"responses": {fingerprint: text}, "default": text}.
// Without a matching entry it composes an extractive reply that quotes the
// opening of each source and cites it.
class ScriptedMockProvider : public ChatProvider {
 public:
  ScriptedMockProvider() = default;
  explicit ScriptedMockProvider(const std::filesystem::path& script);
  explicit ScriptedMockProvider(nlohmann::json script);
  std::string complete(const PromptBundle& bundle) override;

  std::size_t calls() const { return calls_; }

 private:
  nlohmann::json script_ = nlohmann::json::object();
  std::size_t calls_ = 0;
};

std::unique_ptr<ChatProvider> make_chat_provider(
    const GenConfig& cfg, std::shared_ptr<http::Transport> transport);

// Returns kNoContextReply without calling the provider for empty bundles.
std::string generate_answer(ChatProvider& provider, const PromptBundle& bundle);

Answer resolve_citations(const std::string& raw, const PromptBundle& bundle,
                         const RetrievalResult& result);

}  // namespace zoterag
