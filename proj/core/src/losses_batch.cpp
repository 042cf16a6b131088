#include "qvle/losses/batch.hpp"

#include "qvle/errors.hpp"
#include "qvle/vec.hpp"

namespace qvle::losses {

namespace {

void check_csr(std::size_t n, const std::vector<std::size_t>& offsets, std::size_t total,
               const char* what) {
  if (offsets.size() != n + 1 || offsets.front() != 0 || offsets.back() != total)
    throw Error(std::string(what) + ": bad CSR offsets");
  for (std::size_t i = 0; i < n; ++i)
    if (offsets[i] > offsets[i + 1]) throw Error(std::string(what) + ": offsets not monotone");
}

}  // namespace

ContrastiveBatch ContrastiveBatch::make(EmbeddingMatrix queries, EmbeddingMatrix positives,
                                        EmbeddingMatrix negatives,
                                        std::vector<std::size_t> neg_offsets, double temperature,
                                        Stage stage) {
  if (queries.rows == 0) throw EmptyBatchError();
  if (temperature <= 0.0) throw Error("temperature must be positive");
  if (positives.rows != queries.rows)
    throw Error("contrastive batch: positives row count != queries");
  if (positives.dim != queries.dim) throw DimMismatchError(positives.dim, queries.dim);
  if (negatives.rows > 0 && negatives.dim != queries.dim)
    throw DimMismatchError(negatives.dim, queries.dim);
  if (negatives.rows == 0) negatives.dim = queries.dim;
  check_csr(queries.rows, neg_offsets, negatives.rows, "contrastive batch");
  queries.check_invariants();
  positives.check_invariants();
  queries.normalize_rows();
  positives.normalize_rows();
  negatives.normalize_rows();
  return raw(std::move(queries), std::move(positives), std::move(negatives),
             std::move(neg_offsets), temperature, stage);
}

ContrastiveBatch ContrastiveBatch::raw(EmbeddingMatrix queries, EmbeddingMatrix positives,
                                       EmbeddingMatrix negatives,
                                       std::vector<std::size_t> neg_offsets, double temperature,
                                       Stage stage) {
  ContrastiveBatch b;
  b.queries = std::move(queries);
  b.positives = std::move(positives);
  b.negatives = std::move(negatives);
  b.neg_offsets = std::move(neg_offsets);
  b.temperature = temperature;
  b.stage = stage;
  return b;
}

StsBatch StsBatch::make(EmbeddingMatrix queries, EmbeddingMatrix documents,
                        std::vector<double> gold, double temperature) {
  if (queries.rows == 0) throw EmptyBatchError();
  if (temperature <= 0.0) throw Error("temperature must be positive");
  if (documents.rows != queries.rows || documents.dim != queries.dim)
    throw Error("sts batch: documents shape != queries");
  if (gold.size() != queries.rows) throw Error("sts batch: gold score count != pairs");
  if (!all_finite(gold)) throw NonFiniteError("sts gold scores");
  queries.normalize_rows();
  documents.normalize_rows();
  StsBatch b;
  b.queries = std::move(queries);
  b.documents = std::move(documents);
  b.gold = std::move(gold);
  b.temperature = temperature;
  return b;
}

DistillBatch DistillBatch::make(EmbeddingMatrix queries, EmbeddingMatrix candidates,
                                std::vector<std::size_t> cand_offsets,
                                std::vector<double> teacher_logits) {
  if (queries.rows == 0) throw EmptyBatchError();
  if (candidates.dim != queries.dim) throw DimMismatchError(candidates.dim, queries.dim);
  check_csr(queries.rows, cand_offsets, candidates.rows, "distill batch");
  if (teacher_logits.size() != candidates.rows)
    throw CandidateCountMismatchError("teacher logit count != candidate count");
  for (std::size_t i = 0; i < queries.rows; ++i)
    if (cand_offsets[i + 1] - cand_offsets[i] < 2)
      throw CandidateCountMismatchError("query " + queries.ids[i] + " has < 2 candidates");
  if (!all_finite(teacher_logits)) throw NonFiniteError("teacher logits");
  queries.normalize_rows();
  candidates.normalize_rows();
  DistillBatch b;
  b.queries = std::move(queries);
  b.candidates = std::move(candidates);
  b.cand_offsets = std::move(cand_offsets);
  b.teacher_logits = std::move(teacher_logits);
  return b;
}

std::vector<MatRef> embedding_refs(ContrastiveBatch& b) {
  return {{"queries", &b.queries}, {"positives", &b.positives}, {"negatives", &b.negatives}};
}

std::vector<MatRef> embedding_refs(StsBatch& b) {
  return {{"queries", &b.queries}, {"documents", &b.documents}};
}

std::vector<MatRef> embedding_refs(DistillBatch& b) {
  return {{"queries", &b.queries}, {"candidates", &b.candidates}};
}

}  // namespace qvle::losses
