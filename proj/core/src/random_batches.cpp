#include "qvle/random_batches.hpp"

#include <string>

#include "qvle/vec.hpp"

namespace qvle::random_batches {

namespace {

using losses::ContrastiveBatch;
using losses::DistillBatch;
using losses::Stage;
using losses::StsBatch;

Vec random_row(Rng& rng, std::size_t d) {
  Vec v(d);
  for (auto& x : v) x = rng.gauss();
  return v;
}

std::size_t draw_size(Rng& rng, std::size_t max, std::size_t min = 1) {
  return min + rng.uniform_index(max - min + 1);
}

}  // namespace

ContrastiveBatch random_contrastive(Rng& rng, const BatchDims& dims, Stage stage) {
  const std::size_t n = draw_size(rng, dims.max_n, 2);
  const std::size_t d = draw_size(rng, dims.max_d, 4);
  EmbeddingMatrix q = EmbeddingMatrix::zeros(0, d);
  EmbeddingMatrix pos = EmbeddingMatrix::zeros(0, d);
  EmbeddingMatrix neg = EmbeddingMatrix::zeros(0, d);
  std::vector<std::size_t> offsets{0};
  for (std::size_t i = 0; i < n; ++i) {
    q.push_row("q" + std::to_string(i), random_row(rng, d));
    pos.push_row("p" + std::to_string(i), random_row(rng, d));
    const std::size_t k = rng.uniform_index(dims.max_k + 1);
    for (std::size_t j = 0; j < k; ++j)
      neg.push_row("n" + std::to_string(i) + "_" + std::to_string(j), random_row(rng, d));
    offsets.push_back(neg.rows);
  }
  const double tau = rng.uniform(0.3, 1.0);
  return ContrastiveBatch::make(std::move(q), std::move(pos), std::move(neg),
                                std::move(offsets), tau, stage);
}

ContrastiveBatch random_contrastive_with_duplicates(Rng& rng, const BatchDims& dims,
                                                    Stage stage) {
  ContrastiveBatch b = random_contrastive(rng, dims, stage);
  // Relabel some negatives as other queries' positives so identity masking
  // has something to bite on (ids only; vectors stay random).
  for (std::size_t i = 0; i < b.negatives.rows; ++i)
    if (rng.uniform() < 0.3) b.negatives.ids[i] = b.positives.ids[rng.uniform_index(b.size())];
  return b;
}

StsBatch random_sts(Rng& rng, const BatchDims& dims) {
  const std::size_t p = draw_size(rng, dims.max_n, 2);
  const std::size_t d = draw_size(rng, dims.max_d, 4);
  EmbeddingMatrix q = EmbeddingMatrix::zeros(0, d);
  EmbeddingMatrix doc = EmbeddingMatrix::zeros(0, d);
  std::vector<double> gold;
  for (std::size_t i = 0; i < p; ++i) {
    q.push_row("q" + std::to_string(i), random_row(rng, d));
    doc.push_row("d" + std::to_string(i), random_row(rng, d));
    // mostly distinct scores, occasional exact ties
    gold.push_back(rng.uniform() < 0.2 ? 0.5 : rng.uniform());
  }
  return StsBatch::make(std::move(q), std::move(doc), std::move(gold), rng.uniform(0.3, 1.0));
}

DistillBatch random_distill(Rng& rng, const BatchDims& dims) {
  const std::size_t n = draw_size(rng, dims.max_n, 2);
  const std::size_t d = draw_size(rng, dims.max_d, 4);
  EmbeddingMatrix q = EmbeddingMatrix::zeros(0, d);
  EmbeddingMatrix cand = EmbeddingMatrix::zeros(0, d);
  std::vector<std::size_t> offsets{0};
  std::vector<double> teacher;
  for (std::size_t i = 0; i < n; ++i) {
    q.push_row("q" + std::to_string(i), random_row(rng, d));
    const std::size_t k = 2 + rng.uniform_index(dims.max_k);
    for (std::size_t j = 0; j < k; ++j) {
      cand.push_row("c" + std::to_string(i) + "_" + std::to_string(j), random_row(rng, d));
      teacher.push_back(rng.uniform(-2.0, 2.0));
    }
    offsets.push_back(cand.rows);
  }
  return DistillBatch::make(std::move(q), std::move(cand), std::move(offsets),
                            std::move(teacher));
}

}  // namespace qvle::random_batches
