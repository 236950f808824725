#pragma once

#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include <spdlog/sinks/ostream_sink.h>

#include "zoterag/chunker.hpp"
#include "zoterag/config.hpp"
#include "zoterag/http.hpp"
#include "zoterag/session.hpp"
#include "zoterag/vector_store.hpp"

namespace zoterag::testing {

std::filesystem::path fixture(const std::string& rel);
std::string slurp(const std::filesystem::path& p);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "zrg");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Words, punctuation, mixed whitespace, multibyte characters and the odd
// overlong token.
std::string random_text(std::mt19937_64& rng, std::size_t max_chars);
ChunkParams random_params(std::mt19937_64& rng);

// Empty when every chunk invariant holds, otherwise a description of the
// first violation.
std::string check_chunks(std::string_view text, const ChunkParams& params,
                         const std::vector<TextSpan>& chunks);

EmbeddingVector random_unit(std::mt19937_64& rng, std::size_t dim);

// Records "d{i}" with random unit vectors.
std::unique_ptr<VectorStore> random_store(std::mt19937_64& rng, std::size_t n,
                                          std::size_t dim);
VectorRecord make_record(const std::string& id, EmbeddingVector v,
                         const std::string& text = "chunk",
                         const std::string& filename = "doc.pdf");

// Independent score-and-sort over every record.
std::vector<std::pair<std::string, double>> brute_force(const VectorStore& store,
                                                        const EmbeddingVector& q,
                                                        std::size_t k);

// Replays a fixed queue of responses and keeps every request.
class ScriptedTransport : public http::Transport {
 public:
  void push(int status, std::string body,
            std::map<std::string, std::string> headers = {});
  http::Response send(const http::Request& request) override;
  std::vector<http::Request> requests() const;

 private:
  mutable std::mutex mu_;
  std::deque<http::Response> queue_;
  std::vector<http::Request> requests_;
};

// Routes the zoterag logger into a string buffer for the lifetime of the object.
class LogCapture {
 public:
  LogCapture();
  ~LogCapture();
  std::string text() const;

 private:
  std::shared_ptr<std::ostringstream> out_;
};

struct SickleCase {
  std::string library_type;
  std::string library_id;
  std::string zotero_api_key;
  std::string llm_api_key;
  std::string question;
  std::vector<std::string> filenames;
};
SickleCase sickle_case();

// Service wired to the recorded sickle-cell library with mock providers and
// the frozen answer script.
ChatService::Options sickle_options(const std::filesystem::path& data_dir,
                                    bool persist_sessions = false);

// Mock-provider service over an arbitrary Zotero fixture scenario.
ChatService::Options fixture_options(const std::filesystem::path& data_dir,
                                     const std::string& scenario,
                                     const std::string& library_type,
                                     const std::string& library_id,
                                     const std::string& api_key);

}  // namespace zoterag::testing
