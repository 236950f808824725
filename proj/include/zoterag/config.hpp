#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "zoterag/chunker.hpp"
#include "zoterag/embedder.hpp"
#include "zoterag/generator.hpp"
#include "zoterag/retriever.hpp"
#include "zoterag/zotero_client.hpp"

namespace zoterag {

inline constexpr std::string_view kRedacted = "***";

// Everything a user can tune, as one value.
struct PipelineConfig {
  LibraryConfig library;
  ChunkParams chunking;
  EmbedderConfig embedder;
  RetrievalConfig retrieval;
  GenConfig generation;
  std::filesystem::path data_dir = "data";

  // Remote embeddings at 1536 dimensions and the remote chat model.
  static PipelineConfig defaults();

  // Throws Error(kInvalidParams) with the first violated field.
  void validate() const;

  // Secrets are written as "***" (or "" when unset).
  nlohmann::json to_json() const;

  // Applies a full or partial JSON document on top of this config. Unknown
  // keys are ignored, wrong types and out-of-range values throw
  // Error(kInvalidParams). A secret equal to "***" leaves the current value.
  PipelineConfig patched(const nlohmann::json& patch) const;

  // ZOTERO_API_KEY, LLM_API_KEY, LLM_BASE_URL and DATA_DIR override the
  // corresponding fields when set.
  void apply_environment();
  // Only the two API key variables; reapplied after every update so they
  // always win over request-supplied values.
  void apply_secret_environment();

  // Switches to local_hash embeddings and the scripted mock generator.
  void use_mock_providers();

  std::vector<std::string> secrets() const;
};

// Overrides accepted by a single ask: retrieval fields and model settings.
RetrievalConfig patched_retrieval(const RetrievalConfig& base,
                                  const nlohmann::json& patch);
GenConfig patched_generation(const GenConfig& base, const nlohmann::json& patch);

// Model ids offered by the configuration endpoint.
std::vector<std::string> available_models();

}  // namespace zoterag
