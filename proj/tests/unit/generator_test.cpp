#include <gtest/gtest.h>

#include <json.hpp>

#include "support.hpp"
#include "zoterag/error.hpp"
#include "zoterag/generator.hpp"

using namespace zoterag;
using namespace zoterag::testing;
using nlohmann::json;

namespace {

ScoredHit hit(const std::string& doc, std::size_t seq, const std::string& text,
              const std::string& filename, double score = 0.5) {
  VectorRecord r = make_record(VectorRecord::make_id(doc, seq),
                               EmbeddingVector::normalized({1, 0}), text, filename);
  r.chunk.doc_id = doc;
  r.chunk.seq = seq;
  return {r, score};
}

RetrievalResult result_of(std::vector<ScoredHit> hits) { return {std::move(hits), {}}; }

RetrievalResult chat_case_result() {
  const json c = json::parse(slurp(fixture("http/provider_chat/case.json")));
  std::vector<ScoredHit> hits;
  for (const auto& src : c["sources"]) {
    std::size_t seq = 0;
    for (const auto& ex : src["excerpts"]) {
      hits.push_back(hit(src["doc_id"], seq++, ex, src["filename"]));
    }
  }
  return result_of(hits);
}

GenConfig remote_cfg() {
  GenConfig g;
  g.base_url = "https://llm.fixture.test";
  g.api_key = "sk-fixture-77d0e13b95aa41c6";
  return g;
}

http::BackoffPolicy instant() {
  http::BackoffPolicy p;
  p.sleep = [](std::chrono::milliseconds) {};
  return p;
}

}  // namespace

TEST(Prompt, TemplateIsVersioned) {
  const auto t = PromptTemplate::builtin();
  EXPECT_EQ(t.version, "v1");
  EXPECT_NE(t.system_text.find("[1]"), std::string::npos);
  EXPECT_NE(t.system_text.find("SOURCES"), std::string::npos);
  EXPECT_NE(t.system_text.find("insufficient"), std::string::npos);
  EXPECT_NE(t.user_template.find("{sources}"), std::string::npos);
  EXPECT_THROW(PromptTemplate::parse("Version: v2\n=== system ===\nx\n=== user ===\nno slots"),
               Error);
}

TEST(Prompt, SameDocSharesOneReference) {
  const auto b = build_prompt("q", result_of({hit("A", 0, "one", "a.pdf"),
                                              hit("A", 1, "two", "a.pdf")}));
  ASSERT_EQ(b.source_index.size(), 1u);
  EXPECT_EQ(b.chunk_map.size(), 2u);
  EXPECT_EQ(b.chunk_map[1].ref_number, 1);
}

TEST(Prompt, FirstAppearanceNumbering) {
  const auto b = build_prompt("q", result_of({hit("A", 0, "x", "a.pdf"), hit("B", 0, "y", "b.pdf"),
                                              hit("A", 1, "z", "a.pdf")}));
  ASSERT_EQ(b.source_index.size(), 2u);
  EXPECT_EQ(b.source_index[0].doc_id, "A");
  EXPECT_EQ(b.source_index[0].ref_number, 1);
  EXPECT_EQ(b.source_index[1].doc_id, "B");
  EXPECT_EQ(b.source_index[1].ref_number, 2);
  EXPECT_EQ(b.chunk_map[2].ref_number, 1);
}

TEST(Prompt, SevenHitsTwoDocs) {
  std::vector<ScoredHit> hits;
  for (std::size_t i = 0; i < 7; ++i) {
    hits.push_back(i % 3 == 1 ? hit("B", i, "b" + std::to_string(i), "b.pdf")
                              : hit("A", i, "a" + std::to_string(i), "a.pdf"));
  }
  const auto b = build_prompt("q", result_of(hits));
  EXPECT_EQ(b.source_index.size(), 2u);
  EXPECT_EQ(b.chunk_map.size(), 7u);
}

TEST(Prompt, UserTextLayoutAndDeterminism) {
  const auto r = chat_case_result();
  const auto a = build_prompt("What do the sources say?", r);
  const auto b = build_prompt("What do the sources say?", r);
  EXPECT_EQ(a.user_text, b.user_text);
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_EQ(a.user_text,
            "SOURCES:\n\n[1] first.pdf\nAlpha excerpt one.\n\nAlpha excerpt two.\n\n\n"
            "[2] second.pdf\nBeta excerpt.\n\n\nQUESTION: What do the sources say?");
  EXPECT_NE(build_prompt("other", r).fingerprint(), a.fingerprint());
}

TEST(Prompt, PlaceholdersInsideExcerptsAreLeftAlone) {
  const auto b = build_prompt("Q?", result_of({hit("A", 0, "literal {question} here", "a.pdf")}));
  EXPECT_NE(b.user_text.find("literal {question} here"), std::string::npos);
  EXPECT_TRUE(b.user_text.ends_with("QUESTION: Q?"));
}

TEST(Generate, NoContextSkipsProvider) {
  ScriptedMockProvider p(json{{"default", "should not be used"}});
  const auto b = build_prompt("q", result_of({}));
  EXPECT_TRUE(b.no_context);
  EXPECT_EQ(generate_answer(p, b), kNoContextReply);
  EXPECT_EQ(p.calls(), 0u);
}

TEST(Generate, ScriptedByFingerprint) {
  const auto b = build_prompt("q", result_of({hit("A", 0, "x", "a.pdf")}));
  ScriptedMockProvider p(json{{"responses", {{b.fingerprint(), "X [1]."}}}, {"default", "D"}});
  EXPECT_EQ(generate_answer(p, b), "X [1].");
  const auto other = build_prompt("different", result_of({hit("A", 0, "x", "a.pdf")}));
  EXPECT_EQ(generate_answer(p, other), "D");
}

TEST(Generate, ExtractiveFallbackCitesEverySource) {
  ScriptedMockProvider p;
  const auto r = result_of({hit("A", 0, "alpha text", "a.pdf"), hit("B", 0, "beta text", "b.pdf")});
  const auto b = build_prompt("q", r);
  const std::string raw = generate_answer(p, b);
  EXPECT_NE(raw.find("[1]"), std::string::npos);
  EXPECT_NE(raw.find("[2]"), std::string::npos);
  EXPECT_TRUE(resolve_citations(raw, b, r).warnings.empty());
}

TEST(Generate, RemoteRecordedExchange) {
  auto t = std::make_shared<http::FixtureTransport>(fixture("http/provider_chat"));
  RemoteChatProvider p(remote_cfg(), t, instant());
  const json c = json::parse(slurp(fixture("http/provider_chat/case.json")));
  const auto b = build_prompt(c["question"].get<std::string>(), chat_case_result());
  EXPECT_EQ(p.request_body(b), slurp(fixture("http/provider_chat/001.request.body")));
  EXPECT_EQ(generate_answer(p, b), c["reply"].get<std::string>());
  const json body = json::parse(t->sent().at(0).body);
  EXPECT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["role"], "user");
  EXPECT_EQ(body["max_tokens"], 4000);
  EXPECT_EQ(body["temperature"], 0);
}

TEST(Generate, ContextOverflowSurfacesGuidance) {
  auto t = std::make_shared<http::FixtureTransport>(fixture("http/provider_chat_overflow"));
  RemoteChatProvider p(remote_cfg(), t, instant());
  try {
    generate_answer(p, build_prompt("q", chat_case_result()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kContextOverflow);
    EXPECT_NE(std::string(e.what()).find("lower k"), std::string::npos);
  }
}

TEST(Generate, ProviderErrors) {
  auto t = std::make_shared<http::FixtureTransport>(fixture("http/provider_errors"));
  RemoteChatProvider p(remote_cfg(), t, instant());
  try {
    generate_answer(p, build_prompt("q", chat_case_result()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProviderError);
  }
  auto s = std::make_shared<ScriptedTransport>();
  s->push(500, "oops");
  RemoteChatProvider p2(remote_cfg(), s, instant());
  EXPECT_THROW(generate_answer(p2, build_prompt("q", chat_case_result())), Error);
}

TEST(Citations, TwoSourcesResolved) {
  const auto r = result_of({hit("A", 0, "x", "fileA.pdf", 0.9), hit("B", 0, "y", "fileB.pdf", 0.8)});
  const auto b = build_prompt("q", r);
  const auto a = resolve_citations("A [1] B [2]", b, r);
  EXPECT_EQ(a.text, "A [1] B [2]");
  EXPECT_EQ(a.references, (std::vector<Reference>{{1, "fileA.pdf"}, {2, "fileB.pdf"}}));
  EXPECT_TRUE(a.warnings.empty());
  ASSERT_EQ(a.source_excerpts.size(), 2u);
  EXPECT_EQ(a.source_excerpts[0], (SourceExcerpt{"x", "fileA.pdf", 0.9}));
  EXPECT_EQ(a.all_relevant_sources, (std::vector<std::string>{"fileA.pdf", "fileB.pdf"}));
}

TEST(Citations, OutOfRangeWarns) {
  const auto r = result_of({hit("A", 0, "x", "a.pdf"), hit("B", 0, "y", "b.pdf")});
  const auto b = build_prompt("q", r);
  const auto a = resolve_citations("claim [9] and [1]", b, r);
  EXPECT_EQ(a.text, "claim [9] and [1]");
  EXPECT_EQ(a.warnings, (std::vector<std::string>{"unresolved citation [9]"}));
  EXPECT_EQ(resolve_citations("[0]", b, r).warnings,
            (std::vector<std::string>{"unresolved citation [0]"}));
}

TEST(Citations, NoMarkersStillListsSources) {
  const auto r = result_of({hit("A", 0, "x", "a.pdf"), hit("B", 0, "y", "b.pdf")});
  const auto b = build_prompt("q", r);
  const auto a = resolve_citations("plain answer", b, r);
  EXPECT_EQ(a.references.size(), 2u);
  EXPECT_EQ(a.warnings, (std::vector<std::string>{"answer contains no citations"}));
}

TEST(Citations, AllRelevantSourcesDeduplicated) {
  const auto r = result_of({hit("A", 0, "x", "a.pdf"), hit("B", 0, "y", "b.pdf"),
                            hit("A", 1, "z", "a.pdf")});
  const auto a = resolve_citations("[1][2]", build_prompt("q", r), r);
  EXPECT_EQ(a.all_relevant_sources, (std::vector<std::string>{"a.pdf", "b.pdf"}));
  EXPECT_EQ(a.source_excerpts.size(), 3u);
}

TEST(Citations, JsonRoundTrip) {
  const auto r = result_of({hit("A", 0, "x", "a.pdf")});
  const auto a = resolve_citations("[1] and [4]", build_prompt("q", r), r);
  EXPECT_EQ(answer_from_json(to_json(a)), a);
}

TEST(GenConfigTest, Validation) {
  GenConfig g = remote_cfg();
  EXPECT_NO_THROW(g.validate());
  g.max_tokens = 0;
  EXPECT_THROW(g.validate(), Error);
  EXPECT_EQ(gen_provider_from_string("scripted_mock"), GenProvider::kScriptedMock);
}
