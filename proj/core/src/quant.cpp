#include "qvle/quant.hpp"

#include <cmath>

#include "qvle/errors.hpp"

namespace qvle::quant {

using losses::ContrastiveBatch;
using losses::LossResult;

namespace {

double round_half_away(double x) { return std::round(x); }

void check_config(double delta, int qn, int qp) {
  if (delta <= 0.0) throw Error("quantization step size must be positive");
  if (!(qn < 0 && 0 < qp)) throw Error("clip bounds must satisfy qn < 0 < qp");
}

}  // namespace

Vec QuantizedVector::dequantize() const {
  Vec out(dim);
  if (mode == QuantMode::Int8) {
    for (std::size_t j = 0; j < dim; ++j) out[j] = codes[j] * delta;
  } else {
    for (std::size_t j = 0; j < dim; ++j)
      out[j] = ((bits[j / 8] >> (j % 8)) & 1) ? 1.0 : -1.0;
  }
  return out;
}

LsqForward lsq_forward(std::span<const double> v, double delta, int qn, int qp) {
  check_config(delta, qn, qp);
  LsqForward out;
  out.vhat.resize(v.size());
  out.codes.resize(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double q = round_half_away(v[j] / delta);
    const int code = static_cast<int>(std::max<double>(qn, std::min<double>(qp, q)));
    out.codes[j] = code;
    out.vhat[j] = code * delta;
  }
  return out;
}

LsqGrad lsq_grad(std::span<const double> v, double delta, int qn, int qp,
                 std::span<const double> upstream) {
  check_config(delta, qn, qp);
  if (upstream.size() != v.size()) throw DimMismatchError(upstream.size(), v.size());
  LsqGrad out;
  out.grad_v.assign(v.size(), 0.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(v.size()) * qp);
  double gd = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double x = v[j] / delta;
    if (x < qn) {
      gd += upstream[j] * qn;
    } else if (x > qp) {
      gd += upstream[j] * qp;
    } else {
      out.grad_v[j] = upstream[j];
      gd += upstream[j] * (round_half_away(x) - x);
    }
  }
  out.grad_delta = gd * scale;
  return out;
}

QuantizedVector quantize_binary(std::span<const double> v) {
  if (l2_norm(v) < 1e-30) throw ZeroVectorError();
  QuantizedVector out;
  out.mode = QuantMode::Binary;
  out.dim = v.size();
  out.bits.assign((v.size() + 7) / 8, 0);
  for (std::size_t j = 0; j < v.size(); ++j)
    if (v[j] >= 0.0) out.bits[j / 8] |= static_cast<std::uint8_t>(1u << (j % 8));
  return out;
}

QuantizedVector quantize_int8(std::span<const double> v, double delta, int qn, int qp) {
  const LsqForward fwd = lsq_forward(v, delta, qn, qp);
  QuantizedVector out;
  out.mode = QuantMode::Int8;
  out.dim = v.size();
  out.delta = delta;
  out.codes.resize(v.size());
  for (std::size_t j = 0; j < v.size(); ++j)
    out.codes[j] = static_cast<std::int8_t>(fwd.codes[j]);
  return out;
}

std::size_t hamming(const QuantizedVector& a, const QuantizedVector& b) {
  if (a.dim != b.dim) throw DimMismatchError(a.dim, b.dim);
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    std::uint8_t x = a.bits[i] ^ b.bits[i];
    // Mask tail bits of the final byte.
    if (i + 1 == a.bits.size() && a.dim % 8 != 0)
      x &= static_cast<std::uint8_t>((1u << (a.dim % 8)) - 1);
    count += static_cast<std::size_t>(__builtin_popcount(x));
  }
  return count;
}

double delta_init(const EmbeddingMatrix& m, int qp) {
  if (m.data.empty()) throw EmptyBatchError();
  double mean_abs = 0.0;
  for (double v : m.data) mean_abs += std::abs(v);
  mean_abs /= static_cast<double>(m.data.size());
  return 2.0 * mean_abs / std::sqrt(static_cast<double>(qp));
}

namespace {

EmbeddingMatrix quantize_matrix(const EmbeddingMatrix& m, const QuantConfig& cfg) {
  EmbeddingMatrix out = m;
  for (std::size_t r = 0; r < m.rows; ++r) {
    auto row = out.row(r);
    if (cfg.mode == QuantMode::Int8) {
      const LsqForward fwd = lsq_forward(m.row(r), cfg.delta, cfg.qn, cfg.qp);
      std::copy(fwd.vhat.begin(), fwd.vhat.end(), row.begin());
    } else {
      for (auto& v : row) v = v >= 0.0 ? 1.0 : -1.0;
    }
  }
  return out;
}

EmbeddingMatrix surrogate_matrix(const EmbeddingMatrix& eval, const EmbeddingMatrix& base,
                                 const QuantConfig& cfg, double delta_eval) {
  EmbeddingMatrix out = eval;
  for (std::size_t r = 0; r < eval.rows; ++r) {
    Vec s = cfg.mode == QuantMode::Int8
                ? lsq_surrogate(eval.row(r), base.row(r), delta_eval, cfg.delta, cfg.qn, cfg.qp)
                : binary_surrogate(eval.row(r), base.row(r));
    std::copy(s.begin(), s.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace

ContrastiveBatch quantize_batch(const ContrastiveBatch& b, const QuantConfig& cfg) {
  return ContrastiveBatch::raw(quantize_matrix(b.queries, cfg), quantize_matrix(b.positives, cfg),
                               quantize_matrix(b.negatives, cfg), b.neg_offsets, b.temperature,
                               b.stage);
}

Vec lsq_surrogate(std::span<const double> v, std::span<const double> base, double delta,
                  double delta_base, int qn, int qp) {
  check_config(delta_base, qn, qp);
  Vec out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double x = base[j] / delta_base;
    if (x < qn) {
      out[j] = qn * delta;
    } else if (x > qp) {
      out[j] = qp * delta;
    } else {
      // vhat = v + (round(v/d) - v/d) * d, with the rounding decision frozen
      // at the base point: affine in both v and delta.
      const double r = round_half_away(x) - x;
      out[j] = v[j] + r * delta;
    }
  }
  return out;
}

Vec binary_surrogate(std::span<const double> v, std::span<const double> base) {
  Vec out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double sign = base[j] >= 0.0 ? 1.0 : -1.0;
    const bool pass = std::abs(base[j]) <= 1.0;
    out[j] = sign + (pass ? v[j] - base[j] : 0.0);
  }
  return out;
}

ContrastiveBatch surrogate_batch(const ContrastiveBatch& eval, const ContrastiveBatch& base,
                                 const QuantConfig& cfg, double delta_eval) {
  return ContrastiveBatch::raw(
      surrogate_matrix(eval.queries, base.queries, cfg, delta_eval),
      surrogate_matrix(eval.positives, base.positives, cfg, delta_eval),
      surrogate_matrix(eval.negatives, base.negatives, cfg, delta_eval), eval.neg_offsets,
      eval.temperature, eval.stage);
}

LossResult qat_loss(const std::function<LossResult(const ContrastiveBatch&)>& inner,
                    const ContrastiveBatch& batch, const std::vector<QuantConfig>& configs) {
  LossResult full = inner(batch);
  const double nbranches = 1.0 + static_cast<double>(configs.size());

  LossResult out;
  out.value = full.value;
  out.grads = full.grads;
  out.warnings = full.warnings;

  for (std::size_t c = 0; c < configs.size(); ++c) {
    const QuantConfig& cfg = configs[c];
    const ContrastiveBatch qb = quantize_batch(batch, cfg);
    LossResult part = inner(qb);
    out.value += part.value;
    for (const auto& w : part.warnings) out.warnings.push_back(w);

    double grad_delta = 0.0;
    ContrastiveBatch work = batch;  // original rows, for the STE masks
    auto base_refs = embedding_refs(work);
    for (const auto& ref : base_refs) {
      const EmbeddingMatrix& upstream = part.grads.at(ref.key);
      EmbeddingMatrix& acc = out.grads.at(ref.key);
      for (std::size_t r = 0; r < ref.mat->rows; ++r) {
        const auto v = ref.mat->row(r);
        const auto up = upstream.row(r);
        auto g = acc.row(r);
        if (cfg.mode == QuantMode::Int8) {
          const LsqGrad lg = lsq_grad(v, cfg.delta, cfg.qn, cfg.qp, up);
          for (std::size_t j = 0; j < v.size(); ++j) g[j] += lg.grad_v[j];
          grad_delta += lg.grad_delta;
        } else {
          for (std::size_t j = 0; j < v.size(); ++j)
            if (std::abs(v[j]) <= 1.0) g[j] += up[j];
        }
      }
    }
    if (cfg.mode == QuantMode::Int8)
      out.scalar_grads["delta[" + std::to_string(c) + "]"] = grad_delta / nbranches;
  }

  out.value /= nbranches;
  for (auto& [key, g] : out.grads)
    for (auto& v : g.data) v /= nbranches;
  return out;
}

}  // namespace qvle::quant
