#pragma once

#include "qvle/losses/batch.hpp"

namespace qvle::losses {

/// Similarity margin above the positive beyond which an in-batch term is
/// treated as a false negative and masked out.
inline constexpr double kFalseNegativeMargin = 0.1;

/// All pairwise similarities entering the contrastive partition function.
/// qq/dd/qd are N x N row-major; diagonal entries are unused.
struct Sims {
  std::vector<double> pos;   // N: s(q_i, d_i+)
  std::vector<double> hard;  // CSR aligned with batch negatives
  std::vector<double> qq, dd, qd;
};

Sims compute_sims(const ContrastiveBatch& b);

/// Binary masks, one per contrast term.  m = 0 iff the term's similarity
/// exceeds s(q_i, d_i+) + 0.1 or the contrasted document is d_i+ by id.
struct MaskMatrix {
  std::size_t n = 0;
  std::vector<std::uint8_t> hard;  // CSR
  std::vector<std::uint8_t> qq, dd, qd;
};

MaskMatrix compute_mask(const ContrastiveBatch& b, const Sims& sims);

/// InfoNCE over positives, hard negatives and the three in-batch term groups;
/// Stage2 drops the query-query and document-document groups.
LossResult retrieval_infonce(const ContrastiveBatch& b);

/// Same loss with a caller-supplied mask instead of one recomputed from the
/// batch.  Gradient checking uses this to hold the mask fixed while rows are
/// perturbed: the analytic gradient treats the mask as locally constant, and
/// quantized (binary) similarities tie with the margin threshold exactly, so
/// a recomputed mask could flip under an epsilon perturbation.
LossResult retrieval_infonce_masked(const ContrastiveBatch& b, const MaskMatrix& mask);

/// Per-query softmax cross-entropy over the positive and that query's
/// explicit negatives only; no in-batch terms, no masking.
LossResult classification_loss(const ContrastiveBatch& b);

/// CoSent ranking loss over ordered pair-pairs with strictly greater
/// ground-truth score.
LossResult cosent_loss(const StsBatch& b);

/// Cross-entropy from the teacher softmax (over precomputed logits) to the
/// student softmax over cosine scores; gradients w.r.t. student rows only.
LossResult distill_loss(const DistillBatch& b, double tau_student = 1.0,
                        double tau_teacher = 1.0);

}  // namespace qvle::losses
