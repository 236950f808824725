#pragma once

#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "zoterag/chunker.hpp"
#include "zoterag/embedder.hpp"
#include "zoterag/error.hpp"
#include "zoterag/http.hpp"
#include "zoterag/vector_store.hpp"
#include "zoterag/zotero_client.hpp"

namespace zoterag {

struct SourceDocument {
  std::string doc_id;  // Zotero item key
  std::string filename;
  std::string title;
  std::string text;
  std::size_t page_count = 0;

  bool operator==(const SourceDocument&) const = default;
};

class DocumentRegistry {
 public:
  // Throws Error(kEmptyDocument) for blank text and Error(kDuplicateDocument)
  // when the key is already present and replace is false.
  const SourceDocument& register_document(const AttachmentRef& ref,
                                          std::string text,
                                          std::size_t page_count,
                                          bool replace = false);

  const SourceDocument* find(const std::string& doc_id) const;
  std::size_t size() const { return docs_.size(); }
  std::vector<SourceDocument> documents() const;
  void clear() { docs_.clear(); }

 private:
  std::map<std::string, SourceDocument> docs_;
};

enum class JobStatus { kPending, kRunning, kDone, kFailed };

std::string_view to_string(JobStatus s);

struct SkippedDocument {
  std::string item_key;
  std::string filename;
  std::string reason;  // error code name, e.g. "EmptyDocument"
  std::string message;

  bool operator==(const SkippedDocument&) const = default;
};

struct IngestReport {
  std::string job_id;
  JobStatus status = JobStatus::kPending;
  std::string source;  // "zotero" or "local"
  std::size_t documents_ingested = 0;
  std::vector<SkippedDocument> skipped;
  std::size_t skipped_non_pdf = 0;
  std::size_t chunks_created = 0;
  std::size_t records_indexed = 0;
  std::size_t chunk_size = 0;
  std::size_t chunk_overlap = 0;
  std::string started;   // ISO-8601 UTC, empty until running
  std::string finished;  // empty until done or failed
  std::string error;     // set when failed
  std::string error_code;

  std::size_t documents_skipped() const { return skipped.size(); }
  nlohmann::json to_json() const;
};

enum class IngestSource { kZotero, kLocal, kAuto };

std::string_view to_string(IngestSource s);
IngestSource ingest_source_from_string(std::string_view s);

struct IngestRequest {
  LibraryConfig library;
  ChunkParams chunking;
  EmbedderConfig embedder;
  std::filesystem::path data_dir;
  IngestSource source = IngestSource::kAuto;
};

struct IngestDeps {
  std::shared_ptr<http::Transport> zotero_transport;
  std::string zotero_api_base = std::string(kZoteroApiBase);
  std::shared_ptr<http::Transport> provider_transport;
};

// Paths under the data directory.
std::filesystem::path pdf_dir(const std::filesystem::path& data_dir);
std::filesystem::path index_dir(const std::filesystem::path& data_dir);
std::filesystem::path catalog_path(const std::filesystem::path& data_dir);

// The listing of downloaded attachments, kept so the index can be rebuilt
// without contacting Zotero.
struct LocalCatalog {
  LibraryType library_type = LibraryType::kGroup;
  std::string library_id;
  std::size_t skipped_non_pdf = 0;
  std::vector<AttachmentRef> attachments;

  void save(const std::filesystem::path& data_dir) const;
  static std::optional<LocalCatalog> load(const std::filesystem::path& data_dir);
  // True when every listed attachment has a file on disk.
  bool complete(const std::filesystem::path& data_dir) const;
};

struct IngestOutcome {
  IngestReport report;
  std::shared_ptr<VectorStore> store;  // null unless status == done
};

// Runs list -> download -> extract -> chunk -> embed -> index synchronously,
// rebuilding the store under index_dir(data_dir) from scratch. Per-document
// problems become skips; listing, credential and configuration errors fail
// the whole run. progress is invoked after every document.
IngestOutcome run_ingest(const IngestRequest& req, const IngestDeps& deps,
                         const std::string& job_id = "job-0",
                         const std::function<void(const IngestReport&)>& progress = {});

// Background job runner; at most one job runs at a time.
class IngestRunner {
 public:
  using Completion = std::function<void(const IngestOutcome&)>;

  explicit IngestRunner(IngestDeps deps);
  ~IngestRunner();
  IngestRunner(const IngestRunner&) = delete;
  IngestRunner& operator=(const IngestRunner&) = delete;

  // Throws Error(kBusy) while another job is pending or running.
  std::string submit(IngestRequest req, Completion on_done = {});
  // Throws Error(kUnknownJob).
  IngestReport report(const std::string& job_id) const;
  IngestReport wait(const std::string& job_id) const;
  bool busy() const;

 private:
  IngestDeps deps_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::map<std::string, IngestReport> reports_;
  std::size_t next_id_ = 1;
  bool active_ = false;
  std::thread worker_;
};

}  // namespace zoterag
