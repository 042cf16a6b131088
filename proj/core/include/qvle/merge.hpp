#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qvle/vec.hpp"

namespace qvle::merge {

/// Abstract checkpoint: named float64 arrays.  The manifest (names and per-
/// name lengths) must agree across merge inputs.
struct ParamSet {
  std::map<std::string, Vec> params;

  bool same_manifest(const ParamSet& other) const;
};

/// output = sum_i w_i * input_i per name, elementwise.  Weights are
/// normalized to sum 1 internally; each must be >= 0 and the sum positive.
/// Throws ManifestMismatchError / NonFiniteError / EmptyBatchError.
ParamSet merge_checkpoints(const std::vector<ParamSet>& inputs,
                           const std::vector<double>& weights);

struct GridSearchResult {
  ParamSet best;
  std::vector<double> weights;
  double objective = 0.0;
};

/// Argmax of objective over candidate weight vectors; ties keep the first
/// candidate encountered.
GridSearchResult grid_search_merge(const std::vector<ParamSet>& inputs,
                                   const std::vector<std::vector<double>>& candidates,
                                   const std::function<double(const ParamSet&)>& objective);

/// Binary checkpoint file: magic, then named little-endian f64 sections.
void save_paramset(const std::string& path, const ParamSet& ps);
ParamSet load_paramset(const std::string& path);

}  // namespace qvle::merge
