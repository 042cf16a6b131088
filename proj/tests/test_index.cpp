#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "qvle/errors.hpp"
#include "qvle/index.hpp"
#include "qvle/metrics.hpp"
#include "qvle/rng.hpp"
#include "qvle/vec.hpp"

using namespace qvle;
using index::IndexSpec;
using index::Precision;
using index::QuantizedIndex;

namespace {

EmbeddingMatrix random_corpus(Rng& rng, std::size_t n, std::size_t d) {
  EmbeddingMatrix m = EmbeddingMatrix::zeros(0, d);
  for (std::size_t i = 0; i < n; ++i) {
    Vec v(d);
    for (auto& x : v) x = rng.gauss();
    char id[16];
    std::snprintf(id, sizeof id, "d%05zu", i);
    m.push_row(id, v);
  }
  return m;
}

}  // namespace

TEST_CASE("bytes_per_vector at dim 1024") {
  CHECK(index::bytes_per_vector({1024, Precision::F32}) == 4096);
  CHECK(index::bytes_per_vector({1024, Precision::F64}) == 8192);
  CHECK(index::bytes_per_vector({1024, Precision::Int8}) == 1028);
  CHECK(index::bytes_per_vector({1024, Precision::Binary}) == 128);
  CHECK(index::bytes_per_vector({10, Precision::Binary}) == 2);  // ceil(10/8)
}

TEST_CASE("searching with a stored vector returns it with score 1") {
  Rng rng(201);
  auto corpus = random_corpus(rng, 100, 32);
  for (Precision p : {Precision::F32, Precision::F64, Precision::Int8}) {
    auto idx = QuantizedIndex::build(corpus, {32, p});
    const auto hits = idx.search(corpus.row(7), 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].doc_id == "d00007");
    const double tol = p == Precision::Int8 ? 1e-3 : (p == Precision::F32 ? 1e-6 : 1e-12);
    CHECK(hits[0].score == doctest::Approx(1.0).epsilon(tol));
  }
}

TEST_CASE("binary index ranks an exact sign-pattern match first") {
  Rng rng(202);
  auto corpus = random_corpus(rng, 50, 64);
  auto idx = QuantizedIndex::build(corpus, {64, Precision::Binary});
  const auto hits = idx.search(corpus.row(3), 1);
  REQUIRE(hits.size() == 1);
  // score = dim - 2 * hamming = 64 for an identical sign pattern
  CHECK(hits[0].score == doctest::Approx(64.0));
}

TEST_CASE("f64 full-dimension search reproduces a naive cosine ranking") {
  Rng rng(203);
  auto corpus = random_corpus(rng, 200, 24);
  auto idx = QuantizedIndex::build(corpus, {24, Precision::F64});
  for (int t = 0; t < 10; ++t) {
    Vec q(24);
    for (auto& x : q) x = rng.gauss();
    const auto hits = idx.search(q, 15);

    std::vector<index::Hit> naive;
    const Vec qn = l2_normalize(q);
    for (std::size_t i = 0; i < corpus.rows; ++i) {
      const Vec row = l2_normalize(corpus.row(i));
      naive.push_back({corpus.ids[i], dot(qn, row)});
    }
    std::sort(naive.begin(), naive.end(), [](const auto& a, const auto& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.doc_id < b.doc_id;
    });
    REQUIRE(hits.size() == 15);
    for (std::size_t r = 0; r < hits.size(); ++r) {
      CHECK(hits[r].doc_id == naive[r].doc_id);
      CHECK(hits[r].score == doctest::Approx(naive[r].score).epsilon(1e-12));
    }
  }
}

TEST_CASE("equal-score hits break ties by ascending doc id") {
  EmbeddingMatrix m = EmbeddingMatrix::zeros(0, 2);
  m.push_row("z", Vec{1, 0});
  m.push_row("a", Vec{1, 0});
  m.push_row("m", Vec{1, 0});
  auto idx = QuantizedIndex::build(m, {2, Precision::F64});
  const auto hits = idx.search(Vec{1, 0}, 3);
  CHECK(hits[0].doc_id == "a");
  CHECK(hits[1].doc_id == "m");
  CHECK(hits[2].doc_id == "z");
}

TEST_CASE("save/load round trip preserves search results and file size equals storage_bytes") {
  Rng rng(204);
  auto corpus = random_corpus(rng, 64, 48);
  const std::string path = std::filesystem::temp_directory_path() / "qvle_idx_test.bin";
  for (Precision p : {Precision::F32, Precision::F64, Precision::Int8, Precision::Binary}) {
    auto idx = QuantizedIndex::build(corpus, {24, p});
    idx.save(path);
    CHECK(std::filesystem::file_size(path) == idx.storage_bytes());
    auto back = QuantizedIndex::load(path);
    CHECK(back.size() == idx.size());
    CHECK(back.full_dim() == idx.full_dim());
    Vec q(48);
    for (auto& x : q) x = rng.gauss();
    const auto h1 = idx.search(q, 10);
    const auto h2 = back.search(q, 10);
    REQUIRE(h1.size() == h2.size());
    for (std::size_t r = 0; r < h1.size(); ++r) {
      CHECK(h1[r].doc_id == h2[r].doc_id);
      CHECK(h1[r].score == h2[r].score);
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("empty index and dimension mismatches are rejected") {
  EmbeddingMatrix empty = EmbeddingMatrix::zeros(0, 8);
  auto idx0 = QuantizedIndex::build(empty, {8, Precision::F32});
  CHECK_THROWS_AS(idx0.search(Vec{1, 0, 0, 0, 0, 0, 0, 0}, 1), EmptyIndexError);
  CHECK_THROWS_AS(QuantizedIndex::build(empty, {16, Precision::F32}), BadDimsError);

  Rng rng(205);
  auto corpus = random_corpus(rng, 4, 8);
  auto idx = QuantizedIndex::build(corpus, {8, Precision::F32});
  CHECK_THROWS_AS(idx.search(Vec{1, 0, 0}, 2), DimMismatchError);
}

TEST_CASE("retrieval metrics on a hand-built run") {
  metrics::RetrievalRun run{
      {"q1", {{"a", 0.9}, {"b", 0.8}, {"c", 0.7}}},  // relevant at rank 1
      {"q2", {{"x", 0.9}, {"y", 0.8}, {"r", 0.7}}},  // relevant at rank 3
      {"q3", {{"u", 0.9}, {"v", 0.8}, {"w", 0.7}}},  // no relevant hit
  };
  metrics::Qrels qrels{{"q1", {"a"}}, {"q2", {"r"}}, {"q3", {"zzz"}}};

  CHECK(metrics::mrr_at_k(run, qrels, 10) == doctest::Approx((1.0 + 1.0 / 3.0 + 0.0) / 3.0));
  CHECK(metrics::mrr_at_k(run, qrels, 2) == doctest::Approx(1.0 / 3.0));  // q2 drops out at k=2
  CHECK(metrics::recall_at_k(run, qrels, 3) == doctest::Approx(2.0 / 3.0));
  // q2: DCG = 1/log2(3+1) = 0.5, IDCG = 1 -> ndcg 0.5; q1 -> 1; q3 -> 0
  CHECK(metrics::ndcg_at_k(run, qrels, 3) == doctest::Approx((1.0 + 0.5 + 0.0) / 3.0));

  // single-query spot value: relevant at rank 2 -> ndcg = 1/log2(3)
  metrics::RetrievalRun one{{"q", {{"a", 0.9}, {"r", 0.8}}}};
  metrics::Qrels qr{{"q", {"r"}}};
  CHECK(metrics::ndcg_at_k(one, qr, 10) == doctest::Approx(1.0 / std::log2(3.0)));
}

TEST_CASE("mrr and recall are non-decreasing in k") {
  Rng rng(206);
  auto corpus = random_corpus(rng, 100, 16);
  auto idx = QuantizedIndex::build(corpus, {16, Precision::F64});
  metrics::RetrievalRun run;
  metrics::Qrels qrels;
  for (int i = 0; i < 20; ++i) {
    Vec q(16);
    for (auto& x : q) x = rng.gauss();
    const std::string qid = "q" + std::to_string(i);
    run.push_back({qid, idx.search(q, 20)});
    qrels[qid] = {corpus.ids[rng.uniform_index(corpus.rows)]};
  }
  double prev_mrr = 0.0, prev_rec = 0.0;
  for (std::size_t k = 1; k <= 20; ++k) {
    const double m = metrics::mrr_at_k(run, qrels, k);
    const double r = metrics::recall_at_k(run, qrels, k);
    const double n = metrics::ndcg_at_k(run, qrels, k);
    CHECK(m >= prev_mrr - 1e-15);
    CHECK(r >= prev_rec - 1e-15);
    CHECK(m >= 0.0);
    CHECK(m <= 1.0 + 1e-15);
    CHECK(n >= 0.0);
    CHECK(n <= 1.0 + 1e-15);
    prev_mrr = m;
    prev_rec = r;
  }
}

TEST_CASE("metrics reject an empty run") {
  CHECK_THROWS_AS(metrics::mrr_at_k({}, {}, 10), EmptyBatchError);
  CHECK_THROWS_AS(metrics::recall_at_k({}, {}, 10), EmptyBatchError);
  CHECK_THROWS_AS(metrics::ndcg_at_k({}, {}, 10), EmptyBatchError);
}

TEST_CASE("run JSON round trip and qrels parsing") {
  metrics::RetrievalRun run{{"q1", {{"a", 0.5}, {"b", 0.25}}}, {"q2", {}}};
  const auto text = metrics::run_to_json(run);
  const auto back = metrics::run_from_json(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0].query_id == "q1");
  CHECK(back[0].hits[1].doc_id == "b");
  CHECK(back[0].hits[1].score == 0.25);
  CHECK(back[1].hits.empty());

  const auto qrels = metrics::qrels_from_jsonl(
      "{\"query\":\"q1\",\"pos\":[\"a\",\"b\"],\"neg\":[\"c\"]}\n"
      "{\"query\":\"q2\",\"pos\":[]}\n");
  CHECK(qrels.at("q1") == std::set<std::string>{"a", "b"});
  CHECK(qrels.at("q2").empty());
  CHECK_THROWS_AS(metrics::qrels_from_jsonl("not json\n"), ParseError);
}
