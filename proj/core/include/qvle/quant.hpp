#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "qvle/losses/batch.hpp"
#include "qvle/vec.hpp"

namespace qvle::quant {

enum class QuantMode { Int8, Binary };

/// Step size and clip bounds for simulated quantization during training.
/// Binary ignores delta and uses codes in {-1, +1}.
struct QuantConfig {
  QuantMode mode = QuantMode::Int8;
  double delta = 0.0;  // learnable step size, Int8 only
  int qn = -128;
  int qp = 127;
};

struct QuantizedVector {
  QuantMode mode = QuantMode::Int8;
  std::size_t dim = 0;
  std::vector<std::int8_t> codes;  // Int8 payload
  std::vector<std::uint8_t> bits;  // Binary payload, ceil(dim/8) bytes
  double delta = 0.0;

  Vec dequantize() const;
};

struct LsqForward {
  Vec vhat;                // quantize-dequantize of v
  std::vector<int> codes;  // clip(round(v / delta), qn, qp)
};

/// codes_j = clip(round(v_j / delta), qn, qp); vhat_j = codes_j * delta.
/// Rounding is half-away-from-zero.
LsqForward lsq_forward(std::span<const double> v, double delta, int qn, int qp);

struct LsqGrad {
  Vec grad_v;            // straight-through: upstream inside the clip range, else 0
  double grad_delta = 0.0;  // LSQ step-size gradient, scaled by 1/sqrt(dim * qp)
};

LsqGrad lsq_grad(std::span<const double> v, double delta, int qn, int qp,
                 std::span<const double> upstream);

/// Sign bits; ties at 0 quantize to +1. Throws ZeroVectorError on zero input.
QuantizedVector quantize_binary(std::span<const double> v);

QuantizedVector quantize_int8(std::span<const double> v, double delta, int qn = -128,
                              int qp = 127);

std::size_t hamming(const QuantizedVector& a, const QuantizedVector& b);

/// LSQ convention: 2 * mean(|v|) / sqrt(qp) over the batch.
double delta_init(const EmbeddingMatrix& m, int qp = 127);

/// Replaces every embedding row with its quantized counterpart; the result
/// deliberately bypasses row re-normalization.
losses::ContrastiveBatch quantize_batch(const losses::ContrastiveBatch& b,
                                        const QuantConfig& cfg);

/// Affine linearization of the quantizer around `base`: the differentiable
/// function whose exact gradient the straight-through backward implements.
/// Finite-difference verification of the quantized losses goes through this.
Vec lsq_surrogate(std::span<const double> v, std::span<const double> base, double delta,
                  double delta_base, int qn, int qp);
Vec binary_surrogate(std::span<const double> v, std::span<const double> base);

losses::ContrastiveBatch surrogate_batch(const losses::ContrastiveBatch& eval,
                                         const losses::ContrastiveBatch& base,
                                         const QuantConfig& cfg, double delta_eval);

/// Mean of the inner loss over the full-precision batch and one quantized
/// view per config.  Row gradients flow back through the STE; the step-size
/// gradient of Int8 configs is accumulated under scalar key "delta[i]".
losses::LossResult qat_loss(
    const std::function<losses::LossResult(const losses::ContrastiveBatch&)>& inner,
    const losses::ContrastiveBatch& batch, const std::vector<QuantConfig>& configs);

}  // namespace qvle::quant
