#include "support.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "zoterag/logging.hpp"
#include "zoterag/text_util.hpp"

namespace zoterag::testing {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path fixture(const std::string& rel) { return fs::path(ZRG_FIXTURE_DIR) / rel; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TempDir::TempDir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  static std::mutex mu;
  std::lock_guard g(mu);
  do {
    path_ = fs::temp_directory_path() /
            (tag + "-" + std::to_string(rng() % 100000000));
  } while (fs::exists(path_));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string random_text(std::mt19937_64& rng, std::size_t max_chars) {
  static const std::vector<std::string> words = {
      "the", "cell", "sickle", "Zotero", "vector", "a", "of", "hemoglobin", "MMR",
      "caf\xC3\xA9", "na\xC3\xAFve", "\xE6\xBC\xA2\xE5\xAD\x97", "\xF0\x9F\xA7\xAC",
      "x", "retrieval", "2019", "et", "al."};
  static const std::vector<std::string> gaps = {
      " ", " ", " ", " ", "  ", "\n", "\n\n", "\t", ", ", ". ", "\r\n", "\xC2\xA0",
      "\n\n\n", " - "};
  const std::size_t target = std::uniform_int_distribution<std::size_t>(0, max_chars)(rng);
  std::string out;
  std::size_t chars = 0;
  std::uniform_int_distribution<int> pick(0, 99);
  while (chars < target) {
    std::string piece;
    const int r = pick(rng);
    if (r < 3) {
      const std::size_t n = std::uniform_int_distribution<std::size_t>(20, 900)(rng);
      piece.assign(n, static_cast<char>('a' + r));
    } else {
      piece = words[rng() % words.size()];
    }
    piece += gaps[rng() % gaps.size()];
    out += piece;
    chars += text::char_length(piece);
  }
  // Cut back to at most target characters without splitting a character.
  const auto off = text::char_offsets(out);
  if (off.size() - 1 > target) out.resize(off[target]);
  return out;
}

ChunkParams random_params(std::mt19937_64& rng) {
  ChunkParams p;
  static const std::vector<std::size_t> sizes = {1, 2, 3, 5, 8, 20, 50, 100, 200, 500, 1000, 4000};
  p.chunk_size = sizes[rng() % sizes.size()];
  if (rng() % 3 == 0) p.chunk_size += rng() % 97;
  p.chunk_overlap = rng() % 4 == 0 ? 0 : rng() % p.chunk_size;
  return p;
}

std::string check_chunks(std::string_view src, const ChunkParams& params,
                         const std::vector<TextSpan>& chunks) {
  const auto off = text::char_offsets(src);
  const std::size_t n = off.size() - 1;
  std::size_t max_sep = 0;
  for (const auto& s : params.separators) max_sep = std::max(max_sep, text::char_length(s));
  std::vector<bool> covered(n, false);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const auto& c = chunks[i];
    const std::string where = "chunk " + std::to_string(i);
    if (c.start >= c.end || c.end > n) return where + ": bad span";
    const std::size_t len = text::char_length(c.text);
    if (len < 1 || len > params.chunk_size) return where + ": length " + std::to_string(len);
    if (c.end - c.start > params.chunk_size) return where + ": span wider than chunk_size";
    if (text::is_blank(c.text)) return where + ": blank";
    if (src.substr(off[c.start], off[c.end] - off[c.start]) != c.text) {
      return where + ": text does not match its span";
    }
    if (i > 0) {
      const auto& p = chunks[i - 1];
      if (c.start < p.start) return where + ": out of order";
      if (c.start < p.end) {
        const std::size_t inter = std::min(p.end, c.end) - c.start;
        if (inter > params.chunk_overlap + max_sep) {
          return where + ": overlap " + std::to_string(inter);
        }
      }
    }
    for (std::size_t k = c.start; k < c.end; ++k) covered[k] = true;
  }
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t len = 0;
    if (!covered[k] && !text::is_space(text::decode_at(src, off[k], &len))) {
      return "position " + std::to_string(k) + " not covered";
    }
  }
  return {};
}

EmbeddingVector random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> v(dim);
  for (auto& x : v) x = n(rng);
  return EmbeddingVector::normalized(std::move(v));
}

VectorRecord make_record(const std::string& id, EmbeddingVector v, const std::string& text,
                         const std::string& filename) {
  VectorRecord r;
  r.record_id = id;
  r.chunk.doc_id = id;
  r.chunk.text = text;
  r.chunk.end = text.size();
  r.vector = std::move(v);
  r.metadata = {{"filename", filename}, {"title", filename}};
  return r;
}

std::unique_ptr<VectorStore> random_store(std::mt19937_64& rng, std::size_t n,
                                          std::size_t dim) {
  StoreManifest m;
  m.dim = dim;
  m.embedder_id = "random/" + std::to_string(dim);
  m.chunk_size = 500;
  m.chunk_overlap = 200;
  auto store = std::make_unique<VectorStore>(m);
  std::vector<VectorRecord> recs;
  recs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    recs.push_back(make_record("d" + std::to_string(i), random_unit(rng, dim),
                               "text " + std::to_string(i)));
  }
  store->add_records(std::move(recs));
  return store;
}

std::vector<std::pair<std::string, double>> brute_force(const VectorStore& store,
                                                        const EmbeddingVector& q,
                                                        std::size_t k) {
  std::vector<std::pair<std::string, double>> all;
  for (const auto& r : store.records()) {
    double dot = 0.0;
    const auto a = r.vector.values();
    const auto b = q.values();
    for (std::size_t i = 0; i < a.size(); ++i) dot += double(a[i]) * double(b[i]);
    all.emplace_back(r.record_id, std::clamp(dot, -1.0, 1.0));
  }
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

void ScriptedTransport::push(int status, std::string body,
                             std::map<std::string, std::string> headers) {
  std::lock_guard g(mu_);
  http::Response r;
  r.status = status;
  r.body = std::move(body);
  r.headers = std::move(headers);
  queue_.push_back(std::move(r));
}

http::Response ScriptedTransport::send(const http::Request& request) {
  std::lock_guard g(mu_);
  requests_.push_back(request);
  if (queue_.empty()) throw Error(ErrorCode::kTransport, "scripted transport exhausted");
  http::Response r = queue_.front();
  queue_.pop_front();
  return r;
}

std::vector<http::Request> ScriptedTransport::requests() const {
  std::lock_guard g(mu_);
  return requests_;
}

LogCapture::LogCapture() : out_(std::make_shared<std::ostringstream>()) {
  logging::install({std::make_shared<spdlog::sinks::ostream_sink_mt>(*out_)});
  logging::get()->set_level(spdlog::level::trace);
}

LogCapture::~LogCapture() {
  logging::install();
  logging::get()->set_level(spdlog::level::warn);
}

std::string LogCapture::text() const {
  logging::get()->flush();
  return out_->str();
}

SickleCase sickle_case() {
  const json j = json::parse(slurp(fixture("mock/sickle_case.json")));
  SickleCase c;
  c.library_type = j.at("library_type");
  c.library_id = j.at("library_id");
  c.zotero_api_key = j.at("zotero_api_key");
  c.llm_api_key = j.at("llm_api_key");
  c.question = j.at("question");
  c.filenames = j.at("filenames").get<std::vector<std::string>>();
  return c;
}

ChatService::Options fixture_options(const fs::path& data_dir, const std::string& scenario,
                                     const std::string& library_type,
                                     const std::string& library_id,
                                     const std::string& api_key) {
  ChatService::Options o;
  o.config = PipelineConfig::defaults();
  o.config.use_mock_providers();
  o.config = o.config.patched({{"library", {{"library_type", library_type},
                                            {"library_id", library_id},
                                            {"api_key", api_key}}},
                               {"data_dir", data_dir.string()}});
  o.deps.zotero_transport = std::make_shared<http::FixtureTransport>(fixture("http/" + scenario));
  o.deps.zotero_api_base = "https://api.zotero.org";
  o.persist_sessions = false;
  return o;
}

ChatService::Options sickle_options(const fs::path& data_dir, bool persist_sessions) {
  const SickleCase c = sickle_case();
  auto o = fixture_options(data_dir, "zotero_sickle", c.library_type, c.library_id,
                           c.zotero_api_key);
  o.config.generation.script_path = fixture("mock/sickle_script.json");
  o.config.embedder.api_key = c.llm_api_key;
  o.config.generation.api_key = c.llm_api_key;
  o.persist_sessions = persist_sessions;
  return o;
}

}  // namespace zoterag::testing
