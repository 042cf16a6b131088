#pragma once

#include <map>
#include <string>
#include <vector>

#include "qvle/embedding_matrix.hpp"

namespace qvle::losses {

enum class Stage { Stage1, Stage2 };

/// Aligned query / positive rows plus ragged hard negatives (CSR layout).
/// Rows are L2-normalized when built through make(); ids on positives and
/// negatives are document ids and drive identity masking.
struct ContrastiveBatch {
  EmbeddingMatrix queries;    // N x D
  EmbeddingMatrix positives;  // N x D, row i = positive document of query i
  EmbeddingMatrix negatives;  // total_negatives x D
  std::vector<std::size_t> neg_offsets;  // N + 1
  double temperature = 0.05;
  Stage stage = Stage::Stage1;

  std::size_t size() const { return queries.rows; }
  std::size_t dim() const { return queries.dim; }
  std::size_t negs_begin(std::size_t i) const { return neg_offsets[i]; }
  std::size_t negs_end(std::size_t i) const { return neg_offsets[i + 1]; }

  /// Validates invariants and L2-normalizes every row.
  static ContrastiveBatch make(EmbeddingMatrix queries, EmbeddingMatrix positives,
                               EmbeddingMatrix negatives, std::vector<std::size_t> neg_offsets,
                               double temperature, Stage stage = Stage::Stage1);

  /// Trusted rows taken as-is (used for quantized views of a batch, whose
  /// rows are deliberately not unit-norm).
  static ContrastiveBatch raw(EmbeddingMatrix queries, EmbeddingMatrix positives,
                              EmbeddingMatrix negatives, std::vector<std::size_t> neg_offsets,
                              double temperature, Stage stage);
};

/// (query, document, ground-truth score) triples for STS-style data.
struct StsBatch {
  EmbeddingMatrix queries;    // P x D
  EmbeddingMatrix documents;  // P x D
  std::vector<double> gold;   // P ground-truth similarity scores
  double temperature = 0.05;

  std::size_t size() const { return queries.rows; }

  static StsBatch make(EmbeddingMatrix queries, EmbeddingMatrix documents,
                       std::vector<double> gold, double temperature);
};

/// Per query: k+1 candidate embeddings plus precomputed teacher logits.
struct DistillBatch {
  EmbeddingMatrix queries;     // Nq x D
  EmbeddingMatrix candidates;  // total_candidates x D (CSR)
  std::vector<std::size_t> cand_offsets;  // Nq + 1
  std::vector<double> teacher_logits;     // aligned with candidates

  std::size_t size() const { return queries.rows; }

  static DistillBatch make(EmbeddingMatrix queries, EmbeddingMatrix candidates,
                           std::vector<std::size_t> cand_offsets,
                           std::vector<double> teacher_logits);
};

struct LossResult {
  double value = 0.0;
  std::map<std::string, EmbeddingMatrix> grads;  // input name -> same-shape gradient
  std::map<std::string, double> scalar_grads;    // e.g. quantization step sizes
  std::vector<std::string> warnings;
};

/// Named mutable views over every embedding matrix of a batch; shared by the
/// Matryoshka wrapper and the finite-difference checker.
struct MatRef {
  std::string key;
  EmbeddingMatrix* mat;
};

std::vector<MatRef> embedding_refs(ContrastiveBatch& b);
std::vector<MatRef> embedding_refs(StsBatch& b);
std::vector<MatRef> embedding_refs(DistillBatch& b);

}  // namespace qvle::losses
