#pragma once

#include <functional>

#include "qvle/errors.hpp"
#include "qvle/losses/batch.hpp"
#include "qvle/vec.hpp"

namespace qvle::losses {

/// Evaluates `inner` on each Matryoshka prefix of the batch (truncate to d
/// leading components, re-L2-normalize) and averages.  Gradients of the
/// re-normalized truncation are chain-ruled back to the full-dimension rows.
template <class BatchT>
LossResult mrl_wrap(const std::function<LossResult(const BatchT&)>& inner, const BatchT& batch,
                    const std::vector<std::size_t>& dims) {
  BatchT probe = batch;
  const auto full_refs = embedding_refs(probe);
  const std::size_t full_dim = full_refs.front().mat->dim;

  if (dims.empty()) throw BadDimsError("empty prefix list");
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (dims[k] < 1 || dims[k] > full_dim)
      throw BadDimsError("prefix " + std::to_string(dims[k]) + " outside [1, D]");
    if (k > 0 && dims[k] <= dims[k - 1]) throw BadDimsError("prefixes must be strictly ascending");
  }
  if (dims.back() != full_dim) throw BadDimsError("largest prefix must equal D");

  LossResult out;
  for (const auto& ref : full_refs) {
    out.grads[ref.key] = EmbeddingMatrix::zeros(ref.mat->rows, ref.mat->dim);
    out.grads[ref.key].ids = ref.mat->ids;
  }

  for (std::size_t d : dims) {
    BatchT truncated = batch;
    auto refs = embedding_refs(truncated);
    // Pre-normalization truncated norms, per matrix per row.
    std::vector<std::vector<double>> tnorms(refs.size());
    for (std::size_t m = 0; m < refs.size(); ++m) {
      EmbeddingMatrix& mat = *refs[m].mat;
      EmbeddingMatrix cut = EmbeddingMatrix::zeros(mat.rows, d);
      cut.ids = mat.ids;
      tnorms[m].resize(mat.rows);
      for (std::size_t r = 0; r < mat.rows; ++r) {
        auto src = mat.row(r);
        auto dst = cut.row(r);
        std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(d), dst.begin());
        tnorms[m][r] = l2_normalize_inplace(dst);
      }
      mat = std::move(cut);
    }

    LossResult part = inner(truncated);
    out.value += part.value;
    for (const auto& w : part.warnings) out.warnings.push_back(w);
    for (const auto& [key, sg] : part.scalar_grads) out.scalar_grads[key] += sg;

    // Chain rule through u = t/||t||:  dL/dt = (g - (u.g) u) / ||t||.
    for (std::size_t m = 0; m < refs.size(); ++m) {
      const EmbeddingMatrix& unit = *refs[m].mat;
      const EmbeddingMatrix& g = part.grads.at(refs[m].key);
      EmbeddingMatrix& acc = out.grads[refs[m].key];
      for (std::size_t r = 0; r < unit.rows; ++r) {
        const auto u = unit.row(r);
        const auto gu = g.row(r);
        const double ug = dot(u, gu);
        auto full = acc.row(r);
        const double inv = 1.0 / tnorms[m][r];
        for (std::size_t j = 0; j < d; ++j) full[j] += (gu[j] - ug * u[j]) * inv;
      }
    }
  }

  const double scale = 1.0 / static_cast<double>(dims.size());
  out.value *= scale;
  for (auto& [key, g] : out.grads)
    for (auto& v : g.data) v *= scale;
  for (auto& [key, sg] : out.scalar_grads) sg *= scale;
  return out;
}

}  // namespace qvle::losses
