#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "zoterag/chunker.hpp"
#include "zoterag/embedder.hpp"

namespace zoterag {

struct VectorRecord {
  std::string record_id;  // "{doc_id}:{seq}"
  Chunk chunk;
  EmbeddingVector vector;
  std::map<std::string, std::string> metadata;  // filename, title

  static std::string make_id(const std::string& doc_id, std::size_t seq) {
    return doc_id + ":" + std::to_string(seq);
  }
  bool operator==(const VectorRecord&) const = default;
};

struct StoreManifest {
  static constexpr int kFormatVersion = 1;

  std::size_t dim = 0;
  std::string embedder_id;
  std::size_t chunk_size = 0;
  std::size_t chunk_overlap = 0;
  std::size_t record_count = 0;
  int format_version = kFormatVersion;

  bool operator==(const StoreManifest&) const = default;
};

struct ScoredHit {
  VectorRecord record;
  double score = 0.0;
};

// Greedy maximal-marginal-relevance selection over a candidate pool.
// Each step picks the candidate maximizing
//   lambda * query_sims[i] - (1 - lambda) * max_{s selected} pair_sim(i, s)
// where the penalty is 0 while nothing is selected. Exact score ties go to
// the smaller id. Returns candidate indices in selection order.
std::vector<std::size_t> mmr_select(
    std::span<const double> query_sims,
    const std::function<double(std::size_t, std::size_t)>& pair_sim,
    std::span<const std::string> ids, std::size_t k, double lambda);

// Exact linear-scan store of unit-norm vectors. Writers (add_records,
// persist) take the gate exclusively; searches share it.
class VectorStore {
 public:
  explicit VectorStore(StoreManifest manifest);
  VectorStore(const VectorStore&) = delete;
  VectorStore& operator=(const VectorStore&) = delete;

  StoreManifest manifest() const;
  std::size_t size() const;

  // All-or-nothing append; returns the new record count.
  std::size_t add_records(std::vector<VectorRecord> records);

  std::vector<ScoredHit> similarity_search(const EmbeddingVector& q,
                                           std::size_t k) const;
  std::vector<ScoredHit> mmr_search(const EmbeddingVector& q, std::size_t k,
                                    std::size_t fetch_k, double lambda) const;
  std::vector<ScoredHit> threshold_search(const EmbeddingVector& q,
                                          std::size_t k,
                                          double threshold) const;

  std::vector<VectorRecord> records() const;
  // Hash over every persisted field, used to check that reads never mutate.
  std::uint64_t content_hash() const;

  // Writes {dir}/manifest.json and {dir}/records.jsonl.
  void persist(const std::filesystem::path& dir) const;
  static std::unique_ptr<VectorStore> load(const std::filesystem::path& dir);
  static bool exists(const std::filesystem::path& dir);

 private:
  struct Ranked {
    std::size_t index;
    double score;
  };
  std::vector<Ranked> top_k(const EmbeddingVector& q, std::size_t k) const;
  void check_dim(const EmbeddingVector& q) const;

  StoreManifest manifest_;
  std::vector<VectorRecord> records_;
  std::map<std::string, std::size_t, std::less<>> index_;
  mutable std::shared_mutex gate_;
};

}  // namespace zoterag
