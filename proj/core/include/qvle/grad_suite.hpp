#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qvle::grad_suite {

struct FamilyResult {
  std::string family;
  std::size_t batches = 0;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool ok() const { return max_rel_err <= tolerance; }
};

/// Seeded finite-difference verification of every loss family's analytic
/// gradient: the contrastive losses (both stages), classification, CoSent,
/// distillation, the Matryoshka wrapper around each, and the
/// quantization-aware loss (row gradients via the straight-through
/// surrogates, plus the step-size gradient).
std::vector<FamilyResult> run(std::uint64_t seed, std::size_t batches_per_family);

}  // namespace qvle::grad_suite
