#pragma once

#include <cstdint>

#include "qvle/losses/batch.hpp"
#include "qvle/rng.hpp"

namespace qvle::random_batches {

/// Small seeded batches for gradient checking and self-tests.  Temperatures
/// are drawn from [0.3, 1.0]: sharp temperatures blow up the loss curvature
/// and drown central finite differences in truncation error.
struct BatchDims {
  std::size_t max_n = 8;
  std::size_t max_d = 32;
  std::size_t max_k = 4;
};

losses::ContrastiveBatch random_contrastive(Rng& rng, const BatchDims& dims,
                                            losses::Stage stage);

/// Contrastive batch where some negatives share ids with other queries'
/// positives, exercising the identity mask.
losses::ContrastiveBatch random_contrastive_with_duplicates(Rng& rng, const BatchDims& dims,
                                                            losses::Stage stage);

losses::StsBatch random_sts(Rng& rng, const BatchDims& dims);

losses::DistillBatch random_distill(Rng& rng, const BatchDims& dims);

}  // namespace qvle::random_batches
