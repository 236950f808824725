#include "zoterag/embedder.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "zoterag/error.hpp"
#include "zoterag/logging.hpp"
#include "zoterag/text_util.hpp"

namespace zoterag {

EmbeddingVector EmbeddingVector::normalized(std::vector<float> raw) {
  double sum = 0.0;
  for (float x : raw) sum += static_cast<double>(x) * x;
  if (sum == 0.0 || !std::isfinite(sum)) {
    throw Error(ErrorCode::kEmptyText, "cannot normalize a zero vector");
  }
  const double inv = 1.0 / std::sqrt(sum);
  for (float& x : raw) x = static_cast<float>(x * inv);
  return EmbeddingVector(std::move(raw));
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<float> values) {
  EmbeddingVector v(std::move(values));
  if (v.dim() == 0 || std::abs(v.norm() - 1.0) > 1e-5) {
    throw Error(ErrorCode::kCorruptStore, "stored vector is not unit-norm");
  }
  return v;
}

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (float x : values_) sum += static_cast<double>(x) * x;
  return std::sqrt(sum);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimMismatch,
                "dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                    std::to_string(b.dim()));
  }
  const auto av = a.values();
  const auto bv = b.values();
  double dot = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    dot += static_cast<double>(av[i]) * bv[i];
  }
  return std::clamp(dot, -1.0, 1.0);
}

std::string_view to_string(EmbedderProvider p) {
  return p == EmbedderProvider::kRemote ? "remote" : "local_hash";
}

EmbedderProvider embedder_provider_from_string(std::string_view s) {
  if (s == "remote") return EmbedderProvider::kRemote;
  if (s == "local_hash") return EmbedderProvider::kLocalHash;
  throw Error(ErrorCode::kInvalidParams,
              "unknown embedder provider: " + std::string(s));
}

void EmbedderConfig::validate() const {
  if (dim == 0) {
    throw Error(ErrorCode::kInvalidParams, "embedding dim must be positive");
  }
  if (provider == EmbedderProvider::kLocalHash && dim < 2) {
    throw Error(ErrorCode::kInvalidParams, "local_hash dim must be >= 2");
  }
  if (provider == EmbedderProvider::kRemote &&
      (model_id.empty() || base_url.empty() || api_key.empty())) {
    throw Error(ErrorCode::kInvalidParams,
                "remote embedder requires model_id, base_url and api_key");
  }
}

std::string EmbedderConfig::embedder_id() const {
  if (provider == EmbedderProvider::kLocalHash) {
    return "local_hash/" + std::to_string(dim);
  }
  return "remote/" + model_id + "/" + std::to_string(dim);
}

std::vector<std::string> hash_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

EmbeddingVector hash_embed(std::string_view text, std::size_t dim) {
  if (dim < 2) {
    throw Error(ErrorCode::kInvalidParams, "hash_embed dim must be >= 2");
  }
  const auto tokens = hash_tokens(text);
  std::vector<float> acc(dim, 0.0F);
  if (tokens.empty()) {
    if (text::is_blank(text)) {
      throw Error(ErrorCode::kEmptyText, "text has no tokens");
    }
    // Punctuation-only text still gets a deterministic direction.
    acc[text::fnv1a64(text) % dim] = 1.0F;
    return EmbeddingVector::normalized(std::move(acc));
  }
  for (const auto& tok : tokens) {
    const std::uint64_t h = text::fnv1a64(tok);
    const float sign = (h >> 63) != 0 ? -1.0F : 1.0F;
    acc[h % dim] += sign;
  }
  if (std::all_of(acc.begin(), acc.end(), [](float x) { return x == 0.0F; })) {
    // Every contribution cancelled; fall back to a single feature for the
    // whole token sequence so the result is still a deterministic unit vector.
    std::string joined;
    for (const auto& tok : tokens) joined += tok + ' ';
    acc[text::fnv1a64(joined) % dim] = 1.0F;
  }
  return EmbeddingVector::normalized(std::move(acc));
}

LocalHashEmbedder::LocalHashEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ < 2) {
    throw Error(ErrorCode::kInvalidParams, "local_hash dim must be >= 2");
  }
}

std::vector<EmbeddingVector> LocalHashEmbedder::embed(
    std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(hash_embed(t, dim_));
  return out;
}

std::string LocalHashEmbedder::id() const {
  return "local_hash/" + std::to_string(dim_);
}

RemoteEmbedder::RemoteEmbedder(EmbedderConfig cfg,
                               std::shared_ptr<http::Transport> transport,
                               http::BackoffPolicy backoff)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      backoff_(std::move(backoff)) {
  cfg_.validate();
  logging::register_secret(cfg_.api_key);
}

std::string RemoteEmbedder::request_body(
    std::span<const std::string> batch) const {
  nlohmann::json input = nlohmann::json::array();
  for (const auto& t : batch) {
    if (text::char_length(t) > kMaxInputChars) {
      const auto offsets = text::char_offsets(t);
      input.push_back(t.substr(0, offsets[kMaxInputChars]));
    } else {
      input.push_back(t);
    }
  }
  return nlohmann::json{{"model", cfg_.model_id}, {"input", input}}.dump();
}

std::vector<EmbeddingVector> RemoteEmbedder::embed(
    std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); i += kBatchSize) {
    const auto batch = texts.subspan(i, std::min(kBatchSize, texts.size() - i));
    auto vectors = embed_batch(batch);
    std::move(vectors.begin(), vectors.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(
    std::span<const std::string> batch) {
  for (const auto& t : batch) {
    if (text::char_length(t) > kMaxInputChars) {
      logging::get()->warn("embedding input of {} characters truncated to {}",
                           text::char_length(t), kMaxInputChars);
    }
  }
  http::Request req{"POST", cfg_.base_url + "/v1/embeddings",
                    {{"Authorization", "Bearer " + cfg_.api_key},
                     {"Content-Type", "application/json"}},
                    request_body(batch)};
  const http::Response resp = backoff_.send_with_retry(*transport_, req);
  if (resp.status == 401 || resp.status == 403) {
    throw Error(ErrorCode::kAuthFailed,
                "embedding provider rejected the credentials (HTTP " +
                    std::to_string(resp.status) + ")");
  }
  if (resp.status < 200 || resp.status >= 300) {
    throw Error(ErrorCode::kProviderError,
                "embedding request failed with HTTP " +
                    std::to_string(resp.status));
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(resp.body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProviderError,
                std::string("malformed embedding response: ") + e.what());
  }
  if (!doc.contains("data") || !doc["data"].is_array() ||
      doc["data"].size() != batch.size()) {
    throw Error(ErrorCode::kProviderError,
                "embedding response does not contain one vector per input");
  }
  std::vector<std::pair<std::size_t, std::vector<float>>> rows;
  std::size_t position = 0;
  for (const auto& item : doc["data"]) {
    if (!item.contains("embedding") || !item["embedding"].is_array()) {
      throw Error(ErrorCode::kProviderError, "embedding entry missing vector");
    }
    const std::size_t index = item.contains("index")
                                  ? item["index"].get<std::size_t>()
                                  : position;
    std::vector<float> values;
    values.reserve(item["embedding"].size());
    for (const auto& x : item["embedding"]) {
      if (!x.is_number()) {
        throw Error(ErrorCode::kProviderError, "non-numeric embedding value");
      }
      values.push_back(x.get<float>());
    }
    if (values.size() != cfg_.dim) {
      throw Error(ErrorCode::kDimMismatch,
                  "provider returned " + std::to_string(values.size()) +
                      " components, expected " + std::to_string(cfg_.dim));
    }
    rows.emplace_back(index, std::move(values));
    ++position;
  }
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<EmbeddingVector> out;
  out.reserve(rows.size());
  for (auto& [index, values] : rows) {
    try {
      out.push_back(EmbeddingVector::normalized(std::move(values)));
    } catch (const Error&) {
      throw Error(ErrorCode::kProviderError, "provider returned zero vector");
    }
  }
  return out;
}

std::unique_ptr<Embedder> make_embedder(
    const EmbedderConfig& cfg, std::shared_ptr<http::Transport> transport) {
  cfg.validate();
  if (cfg.provider == EmbedderProvider::kLocalHash) {
    return std::make_unique<LocalHashEmbedder>(cfg.dim);
  }
  return std::make_unique<RemoteEmbedder>(cfg, std::move(transport));
}

std::vector<EmbeddingVector> embed_texts(Embedder& embedder,
                                         std::span<const std::string> texts) {
  for (const auto& t : texts) {
    if (text::is_blank(t)) {
      throw Error(ErrorCode::kEmptyText, "cannot embed blank text");
    }
  }
  return embedder.embed(texts);
}

}  // namespace zoterag
