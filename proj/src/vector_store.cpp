#include "zoterag/vector_store.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <limits>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "zoterag/error.hpp"
#include "zoterag/fs_util.hpp"
#include "zoterag/text_util.hpp"

namespace zoterag {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::size_t> mmr_select(
    std::span<const double> query_sims,
    const std::function<double(std::size_t, std::size_t)>& pair_sim,
    std::span<const std::string> ids, std::size_t k, double lambda) {
  if (lambda < 0.0 || lambda > 1.0) {
    throw Error(ErrorCode::kInvalidParams, "mmr lambda must lie in [0, 1]");
  }
  const std::size_t n = query_sims.size();
  std::vector<std::size_t> selected;
  std::vector<bool> taken(n, false);
  // Highest similarity to any selected item, per candidate.
  std::vector<double> redundancy(n, -std::numeric_limits<double>::infinity());
  while (selected.size() < std::min(k, n)) {
    std::size_t best = n;
    double best_score = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double penalty = selected.empty() ? 0.0 : redundancy[i];
      const double score = lambda * query_sims[i] - (1.0 - lambda) * penalty;
      if (best == n || score > best_score ||
          (score == best_score && ids[i] < ids[best])) {
        best = i;
        best_score = score;
      }
    }
    taken[best] = true;
    selected.push_back(best);
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken[i]) redundancy[i] = std::max(redundancy[i], pair_sim(i, best));
    }
  }
  return selected;
}

VectorStore::VectorStore(StoreManifest manifest)
    : manifest_(std::move(manifest)) {
  if (manifest_.dim == 0) {
    throw Error(ErrorCode::kInvalidParams, "store dim must be positive");
  }
  manifest_.record_count = 0;
}

StoreManifest VectorStore::manifest() const {
  std::shared_lock lock(gate_);
  return manifest_;
}

std::size_t VectorStore::size() const {
  std::shared_lock lock(gate_);
  return records_.size();
}

std::size_t VectorStore::add_records(std::vector<VectorRecord> records) {
  std::unique_lock lock(gate_);
  std::map<std::string, std::size_t, std::less<>> staged;
  for (const auto& r : records) {
    if (r.vector.dim() != manifest_.dim) {
      throw Error(ErrorCode::kDimMismatch,
                  "record " + r.record_id + " has dim " +
                      std::to_string(r.vector.dim()) + ", store expects " +
                      std::to_string(manifest_.dim));
    }
    if (index_.count(r.record_id) != 0 || staged.count(r.record_id) != 0) {
      throw Error(ErrorCode::kDuplicateId,
                  "duplicate record id " + r.record_id);
    }
    staged.emplace(r.record_id, records_.size() + staged.size());
  }
  index_.merge(staged);
  for (auto& r : records) records_.push_back(std::move(r));
  manifest_.record_count = records_.size();
  return records_.size();
}

void VectorStore::check_dim(const EmbeddingVector& q) const {
  if (q.dim() != manifest_.dim) {
    throw Error(ErrorCode::kDimMismatch,
                "query has dim " + std::to_string(q.dim()) +
                    ", store expects " + std::to_string(manifest_.dim));
  }
}

std::vector<VectorStore::Ranked> VectorStore::top_k(const EmbeddingVector& q,
                                                    std::size_t k) const {
  check_dim(q);
  std::vector<Ranked> ranked;
  ranked.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    ranked.push_back({i, cosine_similarity(q, records_[i].vector)});
  }
  const auto before = [this](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    return records_[a.index].record_id < records_[b.index].record_id;
  };
  const std::size_t n = std::min(k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<long>(n),
                    ranked.end(), before);
  ranked.resize(n);
  return ranked;
}

std::vector<ScoredHit> VectorStore::similarity_search(const EmbeddingVector& q,
                                                      std::size_t k) const {
  std::shared_lock lock(gate_);
  std::vector<ScoredHit> hits;
  for (const auto& r : top_k(q, k)) {
    hits.push_back({records_[r.index], r.score});
  }
  return hits;
}

std::vector<ScoredHit> VectorStore::mmr_search(const EmbeddingVector& q,
                                               std::size_t k,
                                               std::size_t fetch_k,
                                               double lambda) const {
  if (fetch_k < k) {
    throw Error(ErrorCode::kInvalidParams, "fetch_k must be >= k");
  }
  if (lambda < 0.0 || lambda > 1.0) {
    throw Error(ErrorCode::kInvalidParams, "mmr lambda must lie in [0, 1]");
  }
  std::shared_lock lock(gate_);
  const auto pool = top_k(q, fetch_k);
  std::vector<double> sims;
  std::vector<std::string> ids;
  for (const auto& r : pool) {
    sims.push_back(r.score);
    ids.push_back(records_[r.index].record_id);
  }
  const auto pair = [&](std::size_t a, std::size_t b) {
    return cosine_similarity(records_[pool[a].index].vector,
                             records_[pool[b].index].vector);
  };
  std::vector<ScoredHit> hits;
  for (std::size_t i : mmr_select(sims, pair, ids, k, lambda)) {
    hits.push_back({records_[pool[i].index], pool[i].score});
  }
  return hits;
}

std::vector<ScoredHit> VectorStore::threshold_search(const EmbeddingVector& q,
                                                     std::size_t k,
                                                     double threshold) const {
  auto hits = similarity_search(q, k);
  std::erase_if(hits, [&](const ScoredHit& h) { return h.score < threshold; });
  return hits;
}

std::vector<VectorRecord> VectorStore::records() const {
  std::shared_lock lock(gate_);
  return records_;
}

namespace {

std::string format_float(float x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(x));
  return buf;
}

std::string record_line(const VectorRecord& r) {
  json obj = {{"record_id", r.record_id},
              {"doc_id", r.chunk.doc_id},
              {"seq", r.chunk.seq},
              {"text", r.chunk.text},
              {"span", {r.chunk.start, r.chunk.end}},
              {"metadata", r.metadata}};
  std::string line = obj.dump();
  line.pop_back();  // reopen the object to append the vector verbatim
  line += ",\"vector\":[";
  const auto values = r.vector.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i != 0) line += ',';
    line += format_float(values[i]);
  }
  line += "]}";
  return line;
}

std::string crc_hex(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()),
              static_cast<uInt>(bytes.size()));
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08lx", crc);
  return buf;
}

std::string manifest_json(const StoreManifest& m) {
  return json{{"format_version", m.format_version},
              {"dim", m.dim},
              {"embedder_id", m.embedder_id},
              {"chunk_size", m.chunk_size},
              {"chunk_overlap", m.chunk_overlap},
              {"record_count", m.record_count}}
             .dump(2) +
         "\n";
}

}  // namespace

std::uint64_t VectorStore::content_hash() const {
  std::shared_lock lock(gate_);
  std::uint64_t h = text::fnv1a64(manifest_json(manifest_));
  for (const auto& r : records_) h = text::fnv1a64(record_line(r), h);
  return h;
}

void VectorStore::persist(const fs::path& dir) const {
  std::unique_lock lock(gate_);
  std::string body;
  for (const auto& r : records_) {
    body += record_line(r);
    body += '\n';
  }
  body += json{{"crc32", crc_hex(body)}}.dump() + "\n";
  fs_util::write_file_atomic(dir / "records.jsonl", body);
  fs_util::write_file_atomic(dir / "manifest.json", manifest_json(manifest_));
}

bool VectorStore::exists(const fs::path& dir) {
  return fs::exists(dir / "manifest.json") && fs::exists(dir / "records.jsonl");
}

std::unique_ptr<VectorStore> VectorStore::load(const fs::path& dir) {
  const std::string manifest_text = fs_util::read_file(dir / "manifest.json");
  StoreManifest m;
  try {
    const json doc = json::parse(manifest_text);
    m.format_version = doc.at("format_version").get<int>();
    if (m.format_version != StoreManifest::kFormatVersion) {
      throw Error(ErrorCode::kFormatVersionMismatch,
                  "store format version " + std::to_string(m.format_version) +
                      " is not supported");
    }
    m.dim = doc.at("dim").get<std::size_t>();
    m.embedder_id = doc.at("embedder_id").get<std::string>();
    m.chunk_size = doc.at("chunk_size").get<std::size_t>();
    m.chunk_overlap = doc.at("chunk_overlap").get<std::size_t>();
    m.record_count = doc.at("record_count").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptStore,
                std::string("unreadable manifest: ") + e.what());
  }

  const std::string body = fs_util::read_file(dir / "records.jsonl");
  if (body.empty() || body.back() != '\n') {
    throw Error(ErrorCode::kCorruptStore, "records file is truncated");
  }
  const auto last_start = body.rfind('\n', body.size() - 2);
  const std::size_t payload_end =
      last_start == std::string::npos ? 0 : last_start + 1;
  const std::string_view payload(body.data(), payload_end);
  try {
    const json trailer = json::parse(body.substr(payload_end));
    if (!trailer.is_object() || !trailer.contains("crc32") ||
        trailer["crc32"].get<std::string>() != crc_hex(payload)) {
      throw Error(ErrorCode::kCorruptStore, "records checksum mismatch");
    }
  } catch (const json::exception&) {
    throw Error(ErrorCode::kCorruptStore, "records checksum line missing");
  }

  auto store = std::make_unique<VectorStore>(m);
  std::vector<VectorRecord> records;
  std::istringstream lines{std::string(payload)};
  std::string line;
  try {
    while (std::getline(lines, line)) {
      const json obj = json::parse(line);
      VectorRecord r;
      r.record_id = obj.at("record_id").get<std::string>();
      r.chunk.doc_id = obj.at("doc_id").get<std::string>();
      r.chunk.seq = obj.at("seq").get<std::size_t>();
      r.chunk.text = obj.at("text").get<std::string>();
      r.chunk.start = obj.at("span").at(0).get<std::size_t>();
      r.chunk.end = obj.at("span").at(1).get<std::size_t>();
      r.metadata =
          obj.at("metadata").get<std::map<std::string, std::string>>();
      r.vector = EmbeddingVector::from_unit(
          obj.at("vector").get<std::vector<float>>());
      records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptStore,
                std::string("unreadable record: ") + e.what());
  }
  if (records.size() != m.record_count) {
    throw Error(ErrorCode::kCorruptStore,
                "manifest lists " + std::to_string(m.record_count) +
                    " records, file holds " + std::to_string(records.size()));
  }
  try {
    store->add_records(std::move(records));
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruptStore, e.what());
  }
  return store;
}

}  // namespace zoterag
