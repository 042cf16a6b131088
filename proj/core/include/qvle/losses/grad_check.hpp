#pragma once

#include <algorithm>
#include <functional>

#include "qvle/errors.hpp"
#include "qvle/losses/batch.hpp"

namespace qvle::losses {

/// Central finite differences over every embedding component vs the analytic
/// gradient.  Returns max over components of |g_fd - g_an| / max(1, |g_fd|).
///
/// When `value_fn` is given, the finite differences are taken of it instead
/// of the loss itself; STE-based quantized losses pass the differentiable
/// surrogate whose exact gradient the straight-through convention defines.
template <class BatchT>
double grad_check(const std::function<LossResult(const BatchT&)>& loss, const BatchT& batch,
                  double eps,
                  const std::function<double(const BatchT&)>& value_fn = nullptr) {
  if (eps < 1e-7 || eps > 1e-4) throw Error("grad_check eps outside [1e-7, 1e-4]");
  const LossResult analytic = loss(batch);
  auto value_at = [&](const BatchT& b) { return value_fn ? value_fn(b) : loss(b).value; };

  double max_err = 0.0;
  BatchT work = batch;
  auto refs = embedding_refs(work);
  for (const auto& ref : refs) {
    const EmbeddingMatrix& g = analytic.grads.at(ref.key);
    for (std::size_t c = 0; c < ref.mat->data.size(); ++c) {
      const double saved = ref.mat->data[c];
      ref.mat->data[c] = saved + eps;
      const double up = value_at(work);
      ref.mat->data[c] = saved - eps;
      const double down = value_at(work);
      ref.mat->data[c] = saved;
      const double fd = (up - down) / (2.0 * eps);
      const double err = std::abs(fd - g.data[c]) / std::max(1.0, std::abs(fd));
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

}  // namespace qvle::losses
