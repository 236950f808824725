#include <gtest/gtest.h>

#include <set>

#include "support.hpp"
#include "zoterag/error.hpp"
#include "zoterag/ingest.hpp"
#include "zoterag/pdf_text.hpp"

using namespace zoterag;
using namespace zoterag::testing;
namespace fs = std::filesystem;

namespace {

constexpr const char* kKey = "zk-fixture-4c1f9a7e2b83";

IngestRequest request(const fs::path& data_dir, LibraryType type, const std::string& id,
                      IngestSource source = IngestSource::kZotero) {
  IngestRequest r;
  r.library.api_key = kKey;
  r.library.library_type = type;
  r.library.library_id = id;
  r.data_dir = data_dir;
  r.source = source;
  return r;
}

IngestDeps deps(const std::string& scenario) {
  IngestDeps d;
  d.zotero_transport = std::make_shared<http::FixtureTransport>(fixture("http/" + scenario));
  return d;
}

std::vector<std::string> record_ids(const VectorStore& s) {
  std::vector<std::string> out;
  for (const auto& r : s.records()) out.push_back(r.record_id);
  return out;
}

}  // namespace

TEST(Registry, CarriesFieldsThrough) {
  DocumentRegistry reg;
  const auto& d = reg.register_document({"K1", "a.pdf", "Title A", "application/pdf"}, "hello", 1);
  EXPECT_EQ(d, (SourceDocument{"K1", "a.pdf", "Title A", "hello", 1}));
  EXPECT_EQ(reg.size(), 1u);
}

TEST(Registry, DuplicatesAndReplacement) {
  DocumentRegistry reg;
  const AttachmentRef ref{"K1", "a.pdf", "", "application/pdf"};
  reg.register_document(ref, "first", 1);
  try {
    reg.register_document(ref, "second", 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateDocument);
  }
  reg.register_document(ref, "second", 2, true);
  EXPECT_EQ(reg.size(), 1u);
  EXPECT_EQ(reg.find("K1")->text, "second");
  try {
    reg.register_document({"K2", "b.pdf", "", ""}, " \n ", 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDocument);
  }
}

TEST(Ingest, SickleLibraryMatchesChunkerOracle) {
  TempDir dir;
  const auto out = run_ingest(request(dir.path(), LibraryType::kGroup, "53"), deps("zotero_sickle"));
  const auto& r = out.report;
  EXPECT_EQ(r.status, JobStatus::kDone);
  EXPECT_EQ(r.documents_ingested, 2u);
  EXPECT_EQ(r.documents_skipped(), 0u);
  EXPECT_EQ(r.skipped_non_pdf, 1u);
  EXPECT_EQ(r.source, "zotero");

  std::size_t expected_chunks = 0;
  for (const auto& name : sickle_case().filenames) {
    const auto text = extract_text(fixture("sickle/" + name)).text;
    expected_chunks += split_text(text, ChunkParams{}).size();
  }
  EXPECT_EQ(r.chunks_created, expected_chunks);
  EXPECT_EQ(r.records_indexed, r.chunks_created);
  ASSERT_TRUE(out.store);
  EXPECT_EQ(out.store->size(), expected_chunks);
  EXPECT_EQ(out.store->manifest().chunk_size, 500u);
  EXPECT_EQ(out.store->manifest().embedder_id, "local_hash/256");

  EXPECT_TRUE(fs::exists(pdf_dir(dir.path()) / ("SNDD2019_" + sickle_case().filenames[0])));
  auto loaded = VectorStore::load(index_dir(dir.path()));
  EXPECT_EQ(loaded->content_hash(), out.store->content_hash());
  EXPECT_FALSE(r.started.empty());
  EXPECT_FALSE(r.finished.empty());
}

TEST(Ingest, EmptyLibraryIsVacuouslyDone) {
  TempDir dir;
  const auto out = run_ingest(request(dir.path(), LibraryType::kUser, "1"), deps("zotero_empty"));
  EXPECT_EQ(out.report.status, JobStatus::kDone);
  EXPECT_EQ(out.report.documents_ingested, 0u);
  EXPECT_EQ(out.report.documents_skipped(), 0u);
  EXPECT_EQ(out.report.chunks_created, 0u);
  EXPECT_EQ(out.report.records_indexed, 0u);
}

TEST(Ingest, ImageOnlyPdfIsSkipped) {
  TempDir dir;
  const auto out =
      run_ingest(request(dir.path(), LibraryType::kGroup, "7003"), deps("zotero_image_only"));
  EXPECT_EQ(out.report.status, JobStatus::kDone);
  EXPECT_EQ(out.report.documents_ingested, 2u);
  ASSERT_EQ(out.report.documents_skipped(), 1u);
  EXPECT_EQ(out.report.skipped[0].item_key, "SCAN0001");
  EXPECT_EQ(out.report.skipped[0].reason, "EmptyDocument");
  for (const auto& id : record_ids(*out.store)) EXPECT_FALSE(id.starts_with("SCAN0001"));
}

TEST(Ingest, BadDownloadsBecomeSkips) {
  TempDir dir;
  const auto out =
      run_ingest(request(dir.path(), LibraryType::kUser, "4242"), deps("zotero_downloads"));
  EXPECT_EQ(out.report.status, JobStatus::kDone);
  EXPECT_EQ(out.report.documents_ingested, 0u);
  ASSERT_EQ(out.report.documents_skipped(), 2u);
  std::set<std::string> reasons;
  for (const auto& s : out.report.skipped) reasons.insert(s.reason);
  EXPECT_EQ(reasons, (std::set<std::string>{"ExtractionFailed", "NotAPdf"}));
}

TEST(Ingest, AuthFailureFailsTheJob) {
  TempDir dir;
  auto req = request(dir.path(), LibraryType::kGroup, "53");
  req.library.api_key = "zk-not-the-key";
  const auto out = run_ingest(req, deps("zotero_sickle"));
  EXPECT_EQ(out.report.status, JobStatus::kFailed);
  EXPECT_EQ(out.report.error_code, "AuthFailed");
  EXPECT_FALSE(out.store);
  EXPECT_EQ(out.report.to_json().dump().find("zk-not-the-key"), std::string::npos);
}

TEST(Ingest, InvalidLibraryIdFails) {
  TempDir dir;
  const auto out = run_ingest(request(dir.path(), LibraryType::kGroup, "abc"), deps("zotero_sickle"));
  EXPECT_EQ(out.report.status, JobStatus::kFailed);
  EXPECT_EQ(out.report.error_code, "InvalidLibraryId");
}

TEST(Ingest, IdempotentAtEqualParameters) {
  TempDir a, b;
  const auto first = run_ingest(request(a.path(), LibraryType::kGroup, "53"), deps("zotero_sickle"));
  const auto second = run_ingest(request(a.path(), LibraryType::kGroup, "53"), deps("zotero_sickle"));
  const auto other = run_ingest(request(b.path(), LibraryType::kGroup, "53"), deps("zotero_sickle"));
  EXPECT_EQ(first.store->records(), second.store->records());
  EXPECT_EQ(first.store->content_hash(), other.store->content_hash());
}

TEST(Ingest, LocalRebuildWithoutZotero) {
  TempDir dir;
  run_ingest(request(dir.path(), LibraryType::kGroup, "53"), deps("zotero_sickle"));
  const auto catalog = LocalCatalog::load(dir.path());
  ASSERT_TRUE(catalog);
  EXPECT_TRUE(catalog->complete(dir.path()));
  EXPECT_EQ(catalog->attachments.size(), 2u);

  auto offline = std::make_shared<ScriptedTransport>();
  IngestDeps d;
  d.zotero_transport = offline;
  for (IngestSource src : {IngestSource::kLocal, IngestSource::kAuto}) {
    auto req = request(dir.path(), LibraryType::kGroup, "53", src);
    req.chunking.chunk_size = 400;
    req.chunking.chunk_overlap = 100;
    const auto out = run_ingest(req, d);
    EXPECT_EQ(out.report.status, JobStatus::kDone);
    EXPECT_EQ(out.report.source, "local");
    EXPECT_EQ(out.report.documents_ingested, 2u);
    EXPECT_EQ(out.report.chunk_size, 400u);
    EXPECT_EQ(out.store->manifest().chunk_overlap, 100u);
  }
  EXPECT_TRUE(offline->requests().empty());
}

TEST(Ingest, AutoGoesToZoteroForAnotherLibrary) {
  TempDir dir;
  run_ingest(request(dir.path(), LibraryType::kGroup, "53"), deps("zotero_sickle"));
  const auto out = run_ingest(request(dir.path(), LibraryType::kUser, "1", IngestSource::kAuto),
                              deps("zotero_empty"));
  EXPECT_EQ(out.report.source, "zotero");
  EXPECT_EQ(out.report.documents_ingested, 0u);
}

TEST(Ingest, LocalWithoutCatalogFails) {
  TempDir dir;
  const auto out = run_ingest(request(dir.path(), LibraryType::kGroup, "53", IngestSource::kLocal),
                              deps("zotero_sickle"));
  EXPECT_EQ(out.report.status, JobStatus::kFailed);
}

TEST(Ingest, ReportJson) {
  IngestReport r;
  r.job_id = "job-7";
  r.status = JobStatus::kDone;
  r.skipped.push_back({"K", "k.pdf", "EmptyDocument", "no text"});
  const auto j = r.to_json();
  EXPECT_EQ(j["status"], "done");
  EXPECT_EQ(j["documents_skipped"], 1);
  EXPECT_EQ(j["skipped"][0]["reason"], "EmptyDocument");
  EXPECT_EQ(ingest_source_from_string("local"), IngestSource::kLocal);
  EXPECT_THROW(ingest_source_from_string("ftp"), Error);
}

TEST(Runner, StatusTransitionsAndBusy) {
  TempDir dir;
  IngestRunner runner(deps("zotero_sickle"));
  std::vector<JobStatus> seen;
  std::mutex mu;
  std::condition_variable cv;
  bool release = false;
  const std::string job = runner.submit(
      request(dir.path(), LibraryType::kGroup, "53"), [&](const IngestOutcome&) {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return release; });
      });
  // The completion callback holds the job open, so a second submit is refused.
  try {
    runner.submit(request(dir.path(), LibraryType::kGroup, "53"));
    FAIL() << "expected Busy";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBusy);
  }
  EXPECT_TRUE(runner.busy());
  seen.push_back(runner.report(job).status);
  {
    std::lock_guard g(mu);
    release = true;
  }
  cv.notify_all();
  const auto final_report = runner.wait(job);
  EXPECT_EQ(final_report.status, JobStatus::kDone);
  EXPECT_NE(seen[0], JobStatus::kDone);
  EXPECT_FALSE(runner.busy());
  EXPECT_NO_THROW(runner.wait(runner.submit(request(dir.path(), LibraryType::kGroup, "53"))));
  try {
    runner.report("job-404");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownJob);
  }
}
