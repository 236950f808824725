#include <gtest/gtest.h>

#include "support.hpp"
#include "zoterag/error.hpp"
#include "zoterag/session.hpp"

using namespace zoterag;
using namespace zoterag::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kUnknownJob;
}

void ingest(ChatService& svc) {
  const auto r = svc.wait_ingest(svc.start_ingest());
  ASSERT_EQ(r.status, JobStatus::kDone) << r.error;
}

}  // namespace

TEST(Transcript, RenderAndParse) {
  Answer a;
  a.text = "Line one [1].\nLine two.";
  a.references = {{1, "a.pdf"}};
  a.all_relevant_sources = {"a.pdf"};
  const std::vector<ChatTurn> turns = {{Role::kUser, "Why?\n  indented", std::nullopt, "t"},
                                       {Role::kAssistant, a.text, a, "t"}};
  const std::string text = render_transcript("s1", turns);
  EXPECT_TRUE(text.starts_with("Chat history export\nSession: s1\nTurns: 2\n"));
  const auto parsed = parse_transcript(text);
  ASSERT_EQ(parsed.size(), 2u);
  EXPECT_EQ(parsed[0], (std::pair<Role, std::string>{Role::kUser, "Why?\n  indented"}));
  EXPECT_EQ(parsed[1], (std::pair<Role, std::string>{Role::kAssistant, a.text}));
}

TEST(Transcript, RenderAnswerHeaders) {
  Answer a;
  a.text = "X [1].";
  a.references = {{1, "a.pdf"}};
  a.source_excerpts = {{"excerpt", "a.pdf", 0.5}};
  a.all_relevant_sources = {"a.pdf"};
  const std::string out = render_answer(a);
  for (const char* h : {"Answer:", "References", "Source Documents:", "All relevant sources:"}) {
    EXPECT_NE(out.find(h), std::string::npos) << h;
  }
  EXPECT_NE(out.find("[1] a.pdf"), std::string::npos);
}

TEST(Transcript, SessionIds) {
  EXPECT_TRUE(valid_session_id("abc-DEF_09"));
  EXPECT_FALSE(valid_session_id(""));
  EXPECT_FALSE(valid_session_id("a/b"));
  EXPECT_FALSE(valid_session_id(std::string(65, 'a')));
}

TEST(Service, AskWithoutIndex) {
  TempDir dir;
  ChatService svc(sickle_options(dir.path()));
  EXPECT_FALSE(svc.index_status().exists);
  EXPECT_EQ(code_of([&] { svc.ask("s", "anything?"); }), ErrorCode::kNoIndex);
  EXPECT_EQ(svc.store_hash(), 0u);
}

TEST(Service, StalenessFollowsChunkingParams) {
  TempDir dir;
  ChatService svc(sickle_options(dir.path()));
  ingest(svc);
  EXPECT_FALSE(svc.index_status().stale);
  EXPECT_FALSE(svc.apply_chunking_params(500, 200));
  EXPECT_TRUE(svc.apply_chunking_params(400, 100));
  EXPECT_EQ(code_of([&] { svc.ask("s", sickle_case().question); }), ErrorCode::kIndexStale);
  EXPECT_EQ(code_of([&] { svc.apply_chunking_params(100, 100); }), ErrorCode::kInvalidParams);
  EXPECT_EQ(svc.config().chunking.chunk_size, 400u);

  ingest(svc);
  EXPECT_FALSE(svc.index_status().stale);
  EXPECT_EQ(svc.index_status().manifest->chunk_size, 400u);
  EXPECT_NO_THROW(svc.ask("s", sickle_case().question));
}

TEST(Service, AskAppendsTurnsAndLeavesStoreAlone) {
  TempDir dir;
  ChatService svc(sickle_options(dir.path()));
  ingest(svc);
  const auto before = svc.store_hash();
  const auto c = sickle_case();
  const Answer a = svc.ask("s1", c.question);
  EXPECT_NE(a.text.find("[1]"), std::string::npos);
  EXPECT_NE(a.text.find("[2]"), std::string::npos);
  EXPECT_EQ(a.references, (std::vector<Reference>{{1, c.filenames[0]}, {2, c.filenames[1]}}));
  EXPECT_TRUE(a.warnings.empty());
  svc.ask("s1", "And what about treatment?");
  const auto h = svc.history("s1");
  ASSERT_EQ(h.size(), 4u);
  EXPECT_EQ(h[0].role, Role::kUser);
  EXPECT_EQ(h[0].content, c.question);
  EXPECT_EQ(h[1].role, Role::kAssistant);
  EXPECT_EQ(h[1].answer, a);
  EXPECT_EQ(svc.store_hash(), before);
}

TEST(Service, QuestionValidation) {
  TempDir dir;
  ChatService svc(sickle_options(dir.path()));
  ingest(svc);
  EXPECT_EQ(code_of([&] { svc.ask("s", " \t\n"); }), ErrorCode::kEmptyQuestion);
  EXPECT_EQ(code_of([&] { svc.ask("bad/id", "q?"); }), ErrorCode::kInvalidParams);
  EXPECT_EQ(code_of([&] { svc.ask("s", "q?", json{{"k", 0}}); }), ErrorCode::kInvalidParams);
  EXPECT_EQ(code_of([&] { svc.history("never-created"); }), ErrorCode::kUnknownSession);
  EXPECT_EQ(code_of([&] { svc.export_history("never-created"); }), ErrorCode::kUnknownSession);
}

TEST(Service, OverridesApplyToOneAsk) {
  TempDir dir;
  ChatService svc(sickle_options(dir.path()));
  ingest(svc);
  const auto a = svc.ask("s", sickle_case().question,
                         json{{"k", 1}, {"search_type", "similarity"}});
  EXPECT_EQ(a.source_excerpts.size(), 1u);
  EXPECT_EQ(svc.config().retrieval.k, 7u);
}

TEST(Service, CreateSessions) {
  TempDir dir;
  ChatService svc(sickle_options(dir.path()));
  const auto id = svc.create_session();
  EXPECT_TRUE(valid_session_id(id));
  EXPECT_TRUE(svc.has_session(id));
  EXPECT_NE(svc.create_session(), id);
  EXPECT_EQ(svc.create_session("named"), "named");
  EXPECT_TRUE(svc.history("named").empty());
}

TEST(Service, ExportMatchesGolden) {
  TempDir dir;
  ChatService svc(sickle_options(dir.path()));
  ingest(svc);
  svc.ask("golden", sickle_case().question);
  const std::string exported = svc.export_history("golden");
  EXPECT_EQ(exported, slurp(fixture("golden/sickle_export.txt")));
  const auto parsed = parse_transcript(exported);
  const auto h = svc.history("golden");
  ASSERT_EQ(parsed.size(), h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    EXPECT_EQ(parsed[i].first, h[i].role);
    EXPECT_EQ(parsed[i].second, h[i].content);
  }
}

TEST(Service, ConfigJsonRedactsAndReportsIndex) {
  TempDir dir;
  ChatService svc(sickle_options(dir.path()));
  const auto c = sickle_case();
  json j = svc.config_json();
  EXPECT_EQ(j["index"]["exists"], false);
  EXPECT_EQ(j.dump().find(c.zotero_api_key), std::string::npos);
  EXPECT_EQ(j.dump().find(c.llm_api_key), std::string::npos);
  EXPECT_EQ(j["library"]["api_key"], "***");
  ingest(svc);
  j = svc.config_json();
  EXPECT_EQ(j["index"]["exists"], true);
  EXPECT_EQ(j["index"]["record_count"], svc.index_status().record_count);
}

TEST(Service, DataDirFixedAfterStart) {
  TempDir dir;
  ChatService svc(sickle_options(dir.path()));
  svc.update_config({{"data_dir", "/elsewhere"}, {"k", 5}});
  EXPECT_EQ(svc.config().data_dir, dir.path());
  EXPECT_EQ(svc.config().retrieval.k, 5u);
}

TEST(Service, UnknownJob) {
  TempDir dir;
  ChatService svc(sickle_options(dir.path()));
  EXPECT_EQ(code_of([&] { svc.ingest_report("job-999"); }), ErrorCode::kUnknownJob);
}

TEST(Service, IndexAndSessionsSurviveRestart) {
  TempDir dir;
  std::uint64_t hash = 0;
  {
    ChatService svc(sickle_options(dir.path(), true));
    ingest(svc);
    svc.ask("kept", sickle_case().question);
    hash = svc.store_hash();
  }
  ChatService again(sickle_options(dir.path(), true));
  EXPECT_EQ(again.store_hash(), hash);
  const auto h = again.history("kept");
  ASSERT_EQ(h.size(), 2u);
  EXPECT_TRUE(h[1].answer.has_value());
  EXPECT_NO_THROW(again.ask("kept", sickle_case().question));
  EXPECT_EQ(again.history("kept").size(), 4u);
}

TEST(Service, LocalRebuildAfterParamChange) {
  TempDir dir;
  {
    ChatService svc(sickle_options(dir.path()));
    ingest(svc);
  }
  auto opts = sickle_options(dir.path());
  opts.deps.zotero_transport = std::make_shared<ScriptedTransport>();
  ChatService offline(opts);
  offline.apply_chunking_params(300, 50);
  const auto r = offline.wait_ingest(offline.start_ingest(json{{"source", "local"}}));
  EXPECT_EQ(r.status, JobStatus::kDone);
  EXPECT_EQ(r.source, "local");
  EXPECT_FALSE(offline.index_status().stale);
}
