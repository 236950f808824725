#include "zoterag/retriever.hpp"

#include "zoterag/error.hpp"
#include "zoterag/text_util.hpp"

namespace zoterag {

std::string_view to_string(SearchType t) {
  switch (t) {
    case SearchType::kSimilarity: return "similarity";
    case SearchType::kMmr: return "mmr";
    case SearchType::kSimilarityScoreThreshold:
      return "similarity_score_threshold";
  }
  return "mmr";
}

SearchType search_type_from_string(std::string_view s) {
  if (s == "similarity") return SearchType::kSimilarity;
  if (s == "mmr") return SearchType::kMmr;
  if (s == "similarity_score_threshold") {
    return SearchType::kSimilarityScoreThreshold;
  }
  throw Error(ErrorCode::kInvalidParams,
              "unknown search_type: " + std::string(s));
}

void RetrievalConfig::validate() const {
  const auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kInvalidParams, msg);
  };
  if (k == 0) fail("k must be positive");
  if (k > fetch_k) fail("k must not exceed fetch_k");
  if (lambda < 0.0 || lambda > 1.0) fail("lambda must lie in [0, 1]");
  if (score_threshold < -1.0 || score_threshold > 1.0) {
    fail("score_threshold must lie in [-1, 1]");
  }
  const auto& c = compression;
  if (c.min_query_similarity < -1.0 || c.min_query_similarity > 1.0 ||
      c.redundancy_ceiling < -1.0 || c.redundancy_ceiling > 1.0) {
    fail("compression thresholds must lie in [-1, 1]");
  }
  if (c.redundancy_ceiling <= c.min_query_similarity) {
    fail("redundancy_ceiling must exceed min_query_similarity");
  }
}

RetrievalResult compress(std::vector<ScoredHit> hits,
                         const CompressionConfig& cfg) {
  RetrievalResult result;
  if (!cfg.enabled) {
    result.hits = std::move(hits);
    return result;
  }
  std::vector<ScoredHit> relevant;
  for (auto& h : hits) {
    if (h.score < cfg.min_query_similarity) {
      result.dropped.push_back({h.record.record_id, "below_threshold"});
    } else {
      relevant.push_back(std::move(h));
    }
  }
  for (auto& h : relevant) {
    bool redundant = false;
    for (const auto& kept : result.hits) {
      if (cosine_similarity(h.record.vector, kept.record.vector) >
          cfg.redundancy_ceiling) {
        redundant = true;
        break;
      }
    }
    if (redundant) {
      result.dropped.push_back({h.record.record_id, "redundant"});
    } else {
      result.hits.push_back(std::move(h));
    }
  }
  return result;
}

std::vector<ScoredHit> search(const VectorStore& store,
                              const EmbeddingVector& query,
                              const RetrievalConfig& cfg) {
  switch (cfg.search_type) {
    case SearchType::kSimilarity:
      return store.similarity_search(query, cfg.k);
    case SearchType::kMmr:
      return store.mmr_search(query, cfg.k, cfg.fetch_k, cfg.lambda);
    case SearchType::kSimilarityScoreThreshold:
      return store.threshold_search(query, cfg.k, cfg.score_threshold);
  }
  return {};
}

RetrievalResult retrieve(std::string_view question, const RetrievalConfig& cfg,
                         const VectorStore& store, Embedder& embedder) {
  if (text::is_blank(question)) {
    throw Error(ErrorCode::kEmptyQuestion, "question is empty");
  }
  cfg.validate();
  if (store.size() == 0) return {};
  const std::string q(question);
  const auto vectors = embedder.embed(std::span<const std::string>(&q, 1));
  return compress(search(store, vectors.at(0), cfg), cfg.compression);
}

}  // namespace zoterag
