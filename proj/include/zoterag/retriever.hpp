#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "zoterag/embedder.hpp"
#include "zoterag/vector_store.hpp"

namespace zoterag {

enum class SearchType { kSimilarity, kMmr, kSimilarityScoreThreshold };

std::string_view to_string(SearchType t);
SearchType search_type_from_string(std::string_view s);

struct CompressionConfig {
  bool enabled = true;
  double min_query_similarity = 0.3;
  double redundancy_ceiling = 0.95;

  bool operator==(const CompressionConfig&) const = default;
};

struct RetrievalConfig {
  SearchType search_type = SearchType::kMmr;
  std::size_t k = 7;
  std::size_t fetch_k = 20;
  double lambda = 0.5;
  double score_threshold = 0.5;
  CompressionConfig compression;

  // Throws Error(kInvalidParams).
  void validate() const;
  bool operator==(const RetrievalConfig&) const = default;
};

struct DroppedHit {
  std::string record_id;
  std::string reason;  // "below_threshold" or "redundant"

  bool operator==(const DroppedHit&) const = default;
};

struct RetrievalResult {
  std::vector<ScoredHit> hits;
  std::vector<DroppedHit> dropped;
};

// Order-stable relevance filter followed by a redundancy filter against the
// hits already kept. Identity when compression is disabled.
RetrievalResult compress(std::vector<ScoredHit> hits,
                         const CompressionConfig& cfg);

// Runs the configured search without compression.
std::vector<ScoredHit> search(const VectorStore& store,
                              const EmbeddingVector& query,
                              const RetrievalConfig& cfg);

RetrievalResult retrieve(std::string_view question, const RetrievalConfig& cfg,
                         const VectorStore& store, Embedder& embedder);

}  // namespace zoterag
