#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zoterag/http.hpp"

namespace zoterag {

// A unit-norm vector. Construction always normalizes, so similarity between
// two EmbeddingVectors is a plain dot product.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;

  // Throws Error(kEmptyText) for a zero vector.
  static EmbeddingVector normalized(std::vector<float> raw);

  // Accepts components that are already unit-norm (within 1e-5), e.g. values
  // read back from disk. Throws Error(kCorruptStore) otherwise.
  static EmbeddingVector from_unit(std::vector<float> values);

  std::size_t dim() const { return values_.size(); }
  std::span<const float> values() const { return values_; }
  double norm() const;

  bool operator==(const EmbeddingVector&) const = default;

 private:
  explicit EmbeddingVector(std::vector<float> v) : values_(std::move(v)) {}
  std::vector<float> values_;
};

// Dot product clamped to [-1, 1]. Throws Error(kDimMismatch).
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

enum class EmbedderProvider { kRemote, kLocalHash };

std::string_view to_string(EmbedderProvider p);
EmbedderProvider embedder_provider_from_string(std::string_view s);

struct EmbedderConfig {
  EmbedderProvider provider = EmbedderProvider::kLocalHash;
  std::string model_id = "text-embedding-ada-002";
  std::string base_url = "https://api.openai.com";
  std::string api_key;
  std::size_t dim = 256;

  void validate() const;
  // Identity recorded in the store manifest, e.g. "local_hash/256".
  std::string embedder_id() const;

  static constexpr std::size_t kRemoteDim = 1536;
  static constexpr std::size_t kLocalDim = 256;
};

// Lowercased alphanumeric runs (bytes >= 0x80 count as alphanumeric).
std::vector<std::string> hash_tokens(std::string_view text);

// Signed feature hashing: each token adds +1 or -1 (negative when the top bit
// of its FNV-1a hash is set) at index hash % dim, then the sum is normalized.
EmbeddingVector hash_embed(std::string_view text, std::size_t dim);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<EmbeddingVector> embed(
      std::span<const std::string> texts) = 0;
  virtual std::size_t dim() const = 0;
  virtual std::string id() const = 0;
};

class LocalHashEmbedder : public Embedder {
 public:
  explicit LocalHashEmbedder(std::size_t dim = EmbedderConfig::kLocalDim);
  std::vector<EmbeddingVector> embed(
      std::span<const std::string> texts) override;
  std::size_t dim() const override { return dim_; }
  std::string id() const override;

 private:
  std::size_t dim_;
};

// OpenAI-compatible POST {base_url}/v1/embeddings.
class RemoteEmbedder : public Embedder {
 public:
  static constexpr std::size_t kBatchSize = 64;
  static constexpr std::size_t kMaxInputChars = 8000;

  RemoteEmbedder(EmbedderConfig cfg, std::shared_ptr<http::Transport> transport,
                 http::BackoffPolicy backoff = {});
  std::vector<EmbeddingVector> embed(
      std::span<const std::string> texts) override;
  std::size_t dim() const override { return cfg_.dim; }
  std::string id() const override { return cfg_.embedder_id(); }

  // The exact request body sent for one batch.
  std::string request_body(std::span<const std::string> batch) const;

 private:
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> batch);

  EmbedderConfig cfg_;
  std::shared_ptr<http::Transport> transport_;
  http::BackoffPolicy backoff_;
};

std::unique_ptr<Embedder> make_embedder(
    const EmbedderConfig& cfg, std::shared_ptr<http::Transport> transport);

// Rejects blank inputs with Error(kEmptyText), then delegates.
std::vector<EmbeddingVector> embed_texts(Embedder& embedder,
                                         std::span<const std::string> texts);

}  // namespace zoterag
