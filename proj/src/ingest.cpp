#include "zoterag/ingest.hpp"

#include <chrono>
#include <ctime>
#include <utility>

#include "zoterag/fs_util.hpp"
#include "zoterag/logging.hpp"
#include "zoterag/pdf_text.hpp"
#include "zoterag/text_util.hpp"

namespace zoterag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Errors that say the run as a whole cannot succeed, as opposed to one bad
// document.
bool fatal_for_job(ErrorCode code) {
  switch (code) {
    case ErrorCode::kAuthFailed:
    case ErrorCode::kInvalidParams:
    case ErrorCode::kDimMismatch:
    case ErrorCode::kDiskFull:
    case ErrorCode::kInvalidLibraryId:
    case ErrorCode::kLibraryNotFound:
      return true;
    default:
      return false;
  }
}

struct PendingDocument {
  AttachmentRef ref;
  fs::path path;
};

}  // namespace

const SourceDocument& DocumentRegistry::register_document(
    const AttachmentRef& ref, std::string text, std::size_t page_count,
    bool replace) {
  if (text::is_blank(text)) {
    throw Error(ErrorCode::kEmptyDocument,
                "document " + ref.item_key + " has no text");
  }
  auto it = docs_.find(ref.item_key);
  if (it != docs_.end() && !replace) {
    throw Error(ErrorCode::kDuplicateDocument,
                "document " + ref.item_key + " is already registered");
  }
  SourceDocument doc{ref.item_key, ref.filename, ref.title, std::move(text),
                     page_count};
  if (it != docs_.end()) {
    it->second = std::move(doc);
    return it->second;
  }
  return docs_.emplace(ref.item_key, std::move(doc)).first->second;
}

const SourceDocument* DocumentRegistry::find(const std::string& doc_id) const {
  auto it = docs_.find(doc_id);
  return it == docs_.end() ? nullptr : &it->second;
}

std::vector<SourceDocument> DocumentRegistry::documents() const {
  std::vector<SourceDocument> out;
  out.reserve(docs_.size());
  for (const auto& [id, doc] : docs_) out.push_back(doc);
  return out;
}

std::string_view to_string(JobStatus s) {
  switch (s) {
    case JobStatus::kPending: return "pending";
    case JobStatus::kRunning: return "running";
    case JobStatus::kDone: return "done";
    case JobStatus::kFailed: return "failed";
  }
  return "failed";
}

json IngestReport::to_json() const {
  json skipped_json = json::array();
  for (const auto& s : skipped) {
    skipped_json.push_back({{"item_key", s.item_key},
                            {"filename", s.filename},
                            {"reason", s.reason},
                            {"message", s.message}});
  }
  json j = {{"job_id", job_id},
            {"status", std::string(to_string(status))},
            {"source", source},
            {"documents_ingested", documents_ingested},
            {"documents_skipped", documents_skipped()},
            {"skipped", skipped_json},
            {"skipped_non_pdf", skipped_non_pdf},
            {"chunks_created", chunks_created},
            {"records_indexed", records_indexed},
            {"chunk_size", chunk_size},
            {"chunk_overlap", chunk_overlap},
            {"started", started.empty() ? json(nullptr) : json(started)},
            {"finished", finished.empty() ? json(nullptr) : json(finished)}};
  if (status == JobStatus::kFailed) {
    j["error"] = {{"code", error_code}, {"message", error}};
  }
  return j;
}

std::string_view to_string(IngestSource s) {
  switch (s) {
    case IngestSource::kZotero: return "zotero";
    case IngestSource::kLocal: return "local";
    case IngestSource::kAuto: return "auto";
  }
  return "auto";
}

IngestSource ingest_source_from_string(std::string_view s) {
  if (s == "zotero") return IngestSource::kZotero;
  if (s == "local") return IngestSource::kLocal;
  if (s == "auto") return IngestSource::kAuto;
  throw Error(ErrorCode::kInvalidParams,
              "source must be zotero, local or auto, got '" + std::string(s) + "'");
}

fs::path pdf_dir(const fs::path& data_dir) { return data_dir / "pdfs"; }
fs::path index_dir(const fs::path& data_dir) { return data_dir / "index"; }
fs::path catalog_path(const fs::path& data_dir) {
  return pdf_dir(data_dir) / "catalog.json";
}

void LocalCatalog::save(const fs::path& data_dir) const {
  json items = json::array();
  for (const auto& a : attachments) {
    items.push_back({{"item_key", a.item_key},
                     {"filename", a.filename},
                     {"title", a.title},
                     {"content_type", a.content_type}});
  }
  const json j = {{"library_type", std::string(to_string(library_type))},
                  {"library_id", library_id},
                  {"skipped_non_pdf", skipped_non_pdf},
                  {"attachments", items}};
  fs_util::write_file_atomic(catalog_path(data_dir), j.dump(2) + "\n");
}

std::optional<LocalCatalog> LocalCatalog::load(const fs::path& data_dir) {
  const fs::path p = catalog_path(data_dir);
  std::error_code ec;
  if (!fs::exists(p, ec)) return std::nullopt;
  try {
    const json j = json::parse(fs_util::read_file(p));
    LocalCatalog c;
    c.library_type = library_type_from_string(j.at("library_type").get<std::string>());
    c.library_id = j.at("library_id").get<std::string>();
    c.skipped_non_pdf = j.value("skipped_non_pdf", std::size_t{0});
    for (const auto& a : j.at("attachments")) {
      c.attachments.push_back({a.at("item_key").get<std::string>(),
                               a.at("filename").get<std::string>(),
                               a.value("title", std::string()),
                               a.value("content_type", std::string(kPdfContentType))});
    }
    return c;
  } catch (const std::exception& e) {
    logging::get()->warn("ignoring unreadable catalog {}: {}", p.string(), e.what());
    return std::nullopt;
  }
}

bool LocalCatalog::complete(const fs::path& data_dir) const {
  std::error_code ec;
  for (const auto& a : attachments) {
    if (!fs::is_regular_file(attachment_path(pdf_dir(data_dir), a), ec)) return false;
  }
  return true;
}

IngestOutcome run_ingest(const IngestRequest& req, const IngestDeps& deps,
                         const std::string& job_id,
                         const std::function<void(const IngestReport&)>& progress) {
  auto log = logging::get();
  IngestOutcome out;
  IngestReport& report = out.report;
  report.job_id = job_id;
  report.status = JobStatus::kRunning;
  report.started = utc_now();
  report.chunk_size = req.chunking.chunk_size;
  report.chunk_overlap = req.chunking.chunk_overlap;
  auto notify = [&] {
    if (progress) progress(report);
  };
  auto skip = [&](const AttachmentRef& ref, const Error& e) {
    log->warn("skipping {} ({}): {}", ref.filename, to_string(e.code()), e.what());
    report.skipped.push_back({ref.item_key, ref.filename,
                              std::string(to_string(e.code())), e.what()});
  };
  notify();

  try {
    req.chunking.validate();
    req.embedder.validate();
    auto embedder = make_embedder(req.embedder, deps.provider_transport);

    // Decide where the attachment list comes from.
    std::vector<PendingDocument> pending;
    const auto catalog = LocalCatalog::load(req.data_dir);
    bool use_local = false;
    if (req.source == IngestSource::kLocal) {
      if (!catalog || !catalog->complete(req.data_dir)) {
        throw Error(ErrorCode::kIoError,
                    "no complete local PDF catalog under " + pdf_dir(req.data_dir).string());
      }
      use_local = true;
    } else if (req.source == IngestSource::kAuto && catalog &&
               catalog->complete(req.data_dir) &&
               (req.library.library_id.empty() ||
                (catalog->library_id == req.library.library_id &&
                 catalog->library_type == req.library.library_type))) {
      use_local = true;
    }

    if (use_local) {
      report.source = "local";
      report.skipped_non_pdf = catalog->skipped_non_pdf;
      for (const auto& a : catalog->attachments) {
        pending.push_back({a, attachment_path(pdf_dir(req.data_dir), a)});
      }
      log->info("rebuilding index from {} local PDFs", pending.size());
    } else {
      report.source = "zotero";
      req.library.validate();
      if (!deps.zotero_transport) {
        throw Error(ErrorCode::kTransport, "no transport configured for Zotero");
      }
      ZoteroClient client(deps.zotero_transport, deps.zotero_api_base);
      const AttachmentListing listing = client.list_attachments(req.library);
      report.skipped_non_pdf = listing.skipped_non_pdf;
      log->info("library lists {} PDF attachments ({} other attachments skipped)",
                listing.pdfs.size(), listing.skipped_non_pdf);
      LocalCatalog fresh{req.library.library_type, req.library.library_id,
                         listing.skipped_non_pdf, {}};
      for (const auto& ref : listing.pdfs) {
        try {
          const fs::path p = client.download_attachment(req.library, ref, pdf_dir(req.data_dir));
          pending.push_back({ref, p});
          fresh.attachments.push_back(ref);
        } catch (const Error& e) {
          if (fatal_for_job(e.code())) throw;
          skip(ref, e);
          notify();
        }
      }
      std::error_code ec;
      fs::create_directories(pdf_dir(req.data_dir), ec);
      fresh.save(req.data_dir);
    }

    StoreManifest manifest;
    manifest.dim = embedder->dim();
    manifest.embedder_id = embedder->id();
    manifest.chunk_size = req.chunking.chunk_size;
    manifest.chunk_overlap = req.chunking.chunk_overlap;
    auto store = std::make_shared<VectorStore>(manifest);
    DocumentRegistry registry;

    for (const auto& doc : pending) {
      try {
        PdfText extracted = extract_text(doc.path);
        const SourceDocument& source = registry.register_document(
            doc.ref, std::move(extracted.text), extracted.page_count);
        const auto chunks = chunk_document(source, req.chunking);
        std::vector<std::string> texts;
        texts.reserve(chunks.size());
        for (const auto& c : chunks) texts.push_back(c.text);
        const auto vectors = embed_texts(*embedder, texts);

        // Stage the whole document, then commit it in one call.
        std::vector<VectorRecord> staged;
        staged.reserve(chunks.size());
        for (std::size_t i = 0; i < chunks.size(); ++i) {
          staged.push_back({VectorRecord::make_id(chunks[i].doc_id, chunks[i].seq),
                            chunks[i],
                            vectors[i],
                            {{"filename", source.filename}, {"title", source.title}}});
        }
        const std::size_t before = store->size();
        const std::size_t after = store->add_records(std::move(staged));
        report.documents_ingested += 1;
        report.chunks_created += chunks.size();
        report.records_indexed += after - before;
        log->info("indexed {} ({} pages, {} chunks)", source.filename,
                  source.page_count, chunks.size());
      } catch (const Error& e) {
        if (fatal_for_job(e.code()) || e.code() == ErrorCode::kTransport) throw;
        skip(doc.ref, e);
      }
      notify();
    }

    store->persist(index_dir(req.data_dir));
    out.store = std::move(store);
    report.status = JobStatus::kDone;
  } catch (const Error& e) {
    report.status = JobStatus::kFailed;
    report.error_code = std::string(to_string(e.code()));
    report.error = e.what();
    log->error("ingest failed ({}): {}", report.error_code, e.what());
  } catch (const std::exception& e) {
    report.status = JobStatus::kFailed;
    report.error_code = "Internal";
    report.error = e.what();
    log->error("ingest failed: {}", e.what());
  }
  report.finished = utc_now();
  notify();
  return out;
}

IngestRunner::IngestRunner(IngestDeps deps) : deps_(std::move(deps)) {}

IngestRunner::~IngestRunner() {
  if (worker_.joinable()) worker_.join();
}

std::string IngestRunner::submit(IngestRequest req, Completion on_done) {
  std::unique_lock lock(mu_);
  if (active_) {
    throw Error(ErrorCode::kBusy, "an ingest job is already running");
  }
  if (worker_.joinable()) {
    // The previous job has finished; reclaim its thread.
    lock.unlock();
    worker_.join();
    lock.lock();
    if (active_) throw Error(ErrorCode::kBusy, "an ingest job is already running");
  }
  const std::string job_id = "job-" + std::to_string(next_id_++);
  IngestReport pending;
  pending.job_id = job_id;
  pending.chunk_size = req.chunking.chunk_size;
  pending.chunk_overlap = req.chunking.chunk_overlap;
  reports_[job_id] = pending;
  active_ = true;
  worker_ = std::thread([this, job_id, req = std::move(req),
                         on_done = std::move(on_done)] {
    IngestOutcome outcome = run_ingest(req, deps_, job_id, [&](const IngestReport& r) {
      std::lock_guard g(mu_);
      if (r.status == JobStatus::kRunning) reports_[job_id] = r;
    });
    // Let the owner swap in the new store before the job reads as finished.
    if (on_done) {
      try {
        on_done(outcome);
      } catch (const std::exception& e) {
        logging::get()->error("ingest completion handler failed: {}", e.what());
      }
    }
    {
      std::lock_guard g(mu_);
      reports_[job_id] = outcome.report;
      active_ = false;
    }
    cv_.notify_all();
  });
  return job_id;
}

IngestReport IngestRunner::report(const std::string& job_id) const {
  std::lock_guard g(mu_);
  auto it = reports_.find(job_id);
  if (it == reports_.end()) {
    throw Error(ErrorCode::kUnknownJob, "unknown ingest job '" + job_id + "'");
  }
  return it->second;
}

IngestReport IngestRunner::wait(const std::string& job_id) const {
  std::unique_lock lock(mu_);
  if (!reports_.contains(job_id)) {
    throw Error(ErrorCode::kUnknownJob, "unknown ingest job '" + job_id + "'");
  }
  cv_.wait(lock, [&] {
    const auto s = reports_.at(job_id).status;
    return s == JobStatus::kDone || s == JobStatus::kFailed;
  });
  return reports_.at(job_id);
}

bool IngestRunner::busy() const {
  std::lock_guard g(mu_);
  return active_;
}

}  // namespace zoterag
