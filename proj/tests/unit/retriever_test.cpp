#include <gtest/gtest.h>

#include "support.hpp"
#include "zoterag/error.hpp"
#include "zoterag/retriever.hpp"

using namespace zoterag;
using namespace zoterag::testing;

namespace {

EmbeddingVector vec(std::vector<float> v) { return EmbeddingVector::normalized(std::move(v)); }

ScoredHit hit(const std::string& id, EmbeddingVector v, double score) {
  return {make_record(id, std::move(v)), score};
}

std::vector<std::string> ids(const std::vector<ScoredHit>& hits) {
  std::vector<std::string> out;
  for (const auto& h : hits) out.push_back(h.record.record_id);
  return out;
}

// Store of hash-embedded texts so retrieve() can run end to end.
std::unique_ptr<VectorStore> text_store(const std::vector<std::string>& texts,
                                        std::size_t dim = 256) {
  StoreManifest m;
  m.dim = dim;
  m.embedder_id = "local_hash/" + std::to_string(dim);
  auto s = std::make_unique<VectorStore>(m);
  std::vector<VectorRecord> recs;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    recs.push_back(make_record("t" + std::to_string(i), hash_embed(texts[i], dim), texts[i]));
  }
  s->add_records(std::move(recs));
  return s;
}

}  // namespace

TEST(Compress, DisabledIsIdentity) {
  CompressionConfig c;
  c.enabled = false;
  std::vector<ScoredHit> hits = {hit("a", vec({1, 0}), 0.1), hit("b", vec({1, 0}), -0.5)};
  const auto r = compress(hits, c);
  EXPECT_EQ(ids(r.hits), (std::vector<std::string>{"a", "b"}));
  EXPECT_TRUE(r.dropped.empty());
}

TEST(Compress, RelevanceFilter) {
  const auto r = compress({hit("a", vec({1, 0}), 0.8), hit("b", vec({0, 1}), 0.1)}, {});
  EXPECT_EQ(ids(r.hits), (std::vector<std::string>{"a"}));
  ASSERT_EQ(r.dropped.size(), 1u);
  EXPECT_EQ(r.dropped[0], (DroppedHit{"b", "below_threshold"}));
}

TEST(Compress, RedundancyFilter) {
  const auto r = compress({hit("a", vec({1, 1}), 0.8), hit("b", vec({1, 1}), 0.7),
                           hit("c", vec({1, -1}), 0.6)},
                          {});
  EXPECT_EQ(ids(r.hits), (std::vector<std::string>{"a", "c"}));
  ASSERT_EQ(r.dropped.size(), 1u);
  EXPECT_EQ(r.dropped[0], (DroppedHit{"b", "redundant"}));
}

TEST(Compress, SubsequenceAndAccounting) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 200; ++i) {
    std::vector<ScoredHit> hits;
    const std::size_t n = rng() % 12;
    for (std::size_t j = 0; j < n; ++j) {
      auto v = random_unit(rng, 3);
      hits.push_back(hit("h" + std::to_string(j), v, (int(rng() % 200) - 100) / 100.0));
    }
    CompressionConfig c;
    c.min_query_similarity = -0.2;
    c.redundancy_ceiling = 0.8;
    const auto r = compress(hits, c);
    EXPECT_EQ(r.hits.size() + r.dropped.size(), hits.size());
    std::size_t pos = 0;
    for (const auto& h : r.hits) {
      while (pos < hits.size() && hits[pos].record.record_id != h.record.record_id) ++pos;
      ASSERT_LT(pos, hits.size()) << "not a subsequence";
      EXPECT_GE(h.score, c.min_query_similarity);
      ++pos;
    }
  }
}

TEST(Retrieve, DefaultsOnSmallStore) {
  auto store = text_store({"sickle cell anemia", "vector search", "zotero library"});
  LocalHashEmbedder e;
  RetrievalConfig cfg;
  const auto r = retrieve("sickle cell", cfg, *store, e);
  EXPECT_LE(r.hits.size(), 3u);
  ASSERT_FALSE(r.hits.empty());
  EXPECT_EQ(r.hits[0].record.record_id, "t0");
  for (const auto& h : r.hits) EXPECT_GE(h.score, cfg.compression.min_query_similarity);
}

TEST(Retrieve, EmptyStoreAndEmptyQuestion) {
  auto store = text_store({});
  LocalHashEmbedder e;
  EXPECT_TRUE(retrieve("anything", {}, *store, e).hits.empty());
  try {
    retrieve("  \n", {}, *store, e);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kEmptyQuestion);
  }
}

TEST(Retrieve, DuplicateChunkNotSelectedUnderMmr) {
  auto store = text_store({"sickle cell disease damages vessels",
                           "sickle cell disease damages vessels",
                           "sickle cell trait and malaria", "unrelated text about zotero"});
  LocalHashEmbedder e;
  RetrievalConfig cfg;
  cfg.k = 2;
  cfg.compression.enabled = false;
  const auto r = retrieve("sickle cell disease vessels", cfg, *store, e);
  EXPECT_EQ(ids(r.hits), (std::vector<std::string>{"t0", "t2"}));
}

TEST(Retrieve, WithoutCompressionEqualsStoreSearch) {
  std::mt19937_64 rng(31);
  const std::vector<std::string> words = {"cell", "blood", "vector", "pdf", "zotero", "mmr",
                                          "chunk", "overlap", "query", "model"};
  LocalHashEmbedder e(32);
  for (int i = 0; i < 60; ++i) {
    std::vector<std::string> texts;
    const std::size_t n = 1 + rng() % 40;
    for (std::size_t j = 0; j < n; ++j) {
      std::string t;
      for (int w = 0; w < 4; ++w) t += words[rng() % words.size()] + " ";
      texts.push_back(t);
    }
    auto store = text_store(texts, 32);
    const std::string question = words[rng() % words.size()] + " " + words[rng() % words.size()];
    const auto q = hash_embed(question, 32);
    for (SearchType st : {SearchType::kSimilarity, SearchType::kMmr,
                          SearchType::kSimilarityScoreThreshold}) {
      RetrievalConfig cfg;
      cfg.search_type = st;
      cfg.k = 1 + rng() % 8;
      cfg.fetch_k = cfg.k + rng() % 10;
      cfg.lambda = (rng() % 11) / 10.0;
      cfg.score_threshold = (int(rng() % 11) - 5) / 10.0;
      cfg.compression.enabled = false;
      const auto got = retrieve(question, cfg, *store, e);
      EXPECT_EQ(ids(got.hits), ids(search(*store, q, cfg)));
      std::vector<ScoredHit> bare;
      switch (st) {
        case SearchType::kSimilarity: bare = store->similarity_search(q, cfg.k); break;
        case SearchType::kMmr: bare = store->mmr_search(q, cfg.k, cfg.fetch_k, cfg.lambda); break;
        case SearchType::kSimilarityScoreThreshold:
          bare = store->threshold_search(q, cfg.k, cfg.score_threshold);
          break;
      }
      EXPECT_EQ(ids(got.hits), ids(bare));
    }
  }
}

TEST(Retrieve, Deterministic) {
  auto store = text_store({"alpha beta", "beta gamma", "gamma delta", "delta alpha"});
  LocalHashEmbedder e;
  const auto a = retrieve("alpha gamma", {}, *store, e);
  const auto b = retrieve("alpha gamma", {}, *store, e);
  EXPECT_EQ(ids(a.hits), ids(b.hits));
  EXPECT_EQ(a.dropped, b.dropped);
}

TEST(RetrievalConfigTest, Validation) {
  auto invalid = [](RetrievalConfig c) {
    try {
      c.validate();
    } catch (const Error& e) {
      return e.code() == ErrorCode::kInvalidParams;
    }
    return false;
  };
  RetrievalConfig c;
  EXPECT_NO_THROW(c.validate());
  c.k = 30;
  EXPECT_TRUE(invalid(c));
  c = {};
  c.k = 0;
  EXPECT_TRUE(invalid(c));
  c = {};
  c.lambda = -0.1;
  EXPECT_TRUE(invalid(c));
  c = {};
  c.score_threshold = 1.5;
  EXPECT_TRUE(invalid(c));
  c = {};
  c.compression.redundancy_ceiling = 0.2;
  EXPECT_TRUE(invalid(c));
  EXPECT_EQ(search_type_from_string("similarity_score_threshold"),
            SearchType::kSimilarityScoreThreshold);
  EXPECT_EQ(to_string(SearchType::kMmr), "mmr");
}
