#include "qvle/grad_suite.hpp"

#include <algorithm>
#include <cmath>

#include "qvle/losses/grad_check.hpp"
#include "qvle/losses/losses.hpp"
#include "qvle/losses/mrl.hpp"
#include "qvle/quant.hpp"
#include "qvle/random_batches.hpp"

namespace qvle::grad_suite {

namespace {

using losses::ContrastiveBatch;
using losses::DistillBatch;
using losses::LossResult;
using losses::Stage;
using losses::StsBatch;
using random_batches::BatchDims;

constexpr double kEps = 1e-5;
constexpr double kLossTol = 1e-6;
constexpr double kDeltaTol = 1e-4;

std::vector<std::size_t> mrl_dims(std::size_t full) {
  std::vector<std::size_t> dims{std::max<std::size_t>(1, full / 4),
                                std::max<std::size_t>(1, full / 2), full};
  dims.erase(std::unique(dims.begin(), dims.end()), dims.end());
  return dims;
}

template <class BatchT, class MakeBatch, class MakeLoss>
FamilyResult check_family(const std::string& name, std::uint64_t seed, std::size_t batches,
                          MakeBatch make_batch, MakeLoss make_loss) {
  Rng rng(seed);
  FamilyResult res{name, batches, 0.0, kLossTol};
  for (std::size_t i = 0; i < batches; ++i) {
    BatchT b = make_batch(rng);
    std::function<LossResult(const BatchT&)> loss = make_loss(rng, b);
    res.max_rel_err = std::max(res.max_rel_err, losses::grad_check<BatchT>(loss, b, kEps));
  }
  return res;
}

// Copy of the Matryoshka wrapper's truncation: prefix to d, re-normalize.
ContrastiveBatch truncate_batch(const ContrastiveBatch& b, std::size_t d) {
  auto cut = [d](const EmbeddingMatrix& m) {
    EmbeddingMatrix out = EmbeddingMatrix::zeros(m.rows, d);
    out.ids = m.ids;
    for (std::size_t r = 0; r < m.rows; ++r) {
      auto src = m.row(r);
      auto dst = out.row(r);
      std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(d), dst.begin());
      l2_normalize_inplace(dst);
    }
    return out;
  };
  return ContrastiveBatch::raw(cut(b.queries), cut(b.positives), cut(b.negatives),
                               b.neg_offsets, b.temperature, b.stage);
}

// Finite differences of a masked loss are only valid while the mask stays
// put; in-batch similarities can sit within an epsilon of the false-negative
// threshold, so the FD oracle evaluates with masks frozen at the base point
// (which is exactly the function the analytic gradient differentiates).
FamilyResult check_infonce(const std::string& name, std::uint64_t seed, std::size_t batches,
                           Stage stage, bool use_mrl) {
  Rng rng(seed);
  FamilyResult res{name, batches, 0.0, kLossTol};
  const BatchDims bd;
  for (std::size_t i = 0; i < batches; ++i) {
    ContrastiveBatch base = rng.uniform() < 0.5
                                ? random_batches::random_contrastive(rng, bd, stage)
                                : random_batches::random_contrastive_with_duplicates(rng, bd, stage);
    const std::vector<std::size_t> dims =
        use_mrl ? mrl_dims(base.dim()) : std::vector<std::size_t>{base.dim()};

    std::vector<losses::MaskMatrix> masks;
    for (std::size_t d : dims) {
      const ContrastiveBatch tb = truncate_batch(base, d);
      masks.push_back(losses::compute_mask(tb, losses::compute_sims(tb)));
    }

    std::function<LossResult(const ContrastiveBatch&)> loss =
        use_mrl ? std::function<LossResult(const ContrastiveBatch&)>(
                      [dims](const ContrastiveBatch& b) {
                        return losses::mrl_wrap<ContrastiveBatch>(losses::retrieval_infonce, b,
                                                                  dims);
                      })
                : std::function<LossResult(const ContrastiveBatch&)>(losses::retrieval_infonce);
    std::function<double(const ContrastiveBatch&)> value =
        [&dims, &masks](const ContrastiveBatch& b) {
          double total = 0.0;
          for (std::size_t k = 0; k < dims.size(); ++k)
            total += losses::retrieval_infonce_masked(truncate_batch(b, dims[k]), masks[k]).value;
          return total / static_cast<double>(dims.size());
        };
    res.max_rel_err =
        std::max(res.max_rel_err, losses::grad_check<ContrastiveBatch>(loss, base, kEps, value));
  }
  return res;
}

std::vector<quant::QuantConfig> qat_configs(const ContrastiveBatch& b) {
  quant::QuantConfig int8;
  int8.mode = quant::QuantMode::Int8;
  int8.delta = quant::delta_init(b.queries);
  quant::QuantConfig bin;
  bin.mode = quant::QuantMode::Binary;
  return {int8, bin};
}

// Masks of each quantized branch, frozen at the base point.  Binary-branch
// similarities are exact multiples of 1/dim, so they routinely tie with the
// false-negative threshold and a recomputed mask would flip under the FD
// perturbation; the analytic gradient is the gradient at fixed masks.
std::vector<losses::MaskMatrix> branch_masks(const ContrastiveBatch& base,
                                             const std::vector<quant::QuantConfig>& cfgs) {
  std::vector<losses::MaskMatrix> masks;
  masks.push_back(losses::compute_mask(base, losses::compute_sims(base)));
  for (const auto& cfg : cfgs) {
    const ContrastiveBatch qb = quant::quantize_batch(base, cfg);
    masks.push_back(losses::compute_mask(qb, losses::compute_sims(qb)));
  }
  return masks;
}

double qat_surrogate_value(const ContrastiveBatch& eval, const ContrastiveBatch& base,
                           const std::vector<quant::QuantConfig>& cfgs,
                           const std::vector<losses::MaskMatrix>& masks, double int8_delta) {
  double total = losses::retrieval_infonce_masked(eval, masks[0]).value;
  for (std::size_t c = 0; c < cfgs.size(); ++c) {
    const double d = cfgs[c].mode == quant::QuantMode::Int8 ? int8_delta : 0.0;
    total += losses::retrieval_infonce_masked(quant::surrogate_batch(eval, base, cfgs[c], d),
                                              masks[c + 1])
                 .value;
  }
  return total / (1.0 + static_cast<double>(cfgs.size()));
}

FamilyResult check_qat_rows(std::uint64_t seed, std::size_t batches) {
  Rng rng(seed);
  FamilyResult res{"qat_loss[int8+binary] rows", batches, 0.0, kLossTol};
  const BatchDims dims;
  for (std::size_t i = 0; i < batches; ++i) {
    ContrastiveBatch base = random_batches::random_contrastive(rng, dims, Stage::Stage1);
    const auto cfgs = qat_configs(base);
    const auto masks = branch_masks(base, cfgs);
    std::function<LossResult(const ContrastiveBatch&)> loss =
        [&cfgs](const ContrastiveBatch& b) {
          return quant::qat_loss(losses::retrieval_infonce, b, cfgs);
        };
    std::function<double(const ContrastiveBatch&)> value =
        [&cfgs, &base, &masks](const ContrastiveBatch& b) {
          return qat_surrogate_value(b, base, cfgs, masks, cfgs[0].delta);
        };
    res.max_rel_err =
        std::max(res.max_rel_err, losses::grad_check<ContrastiveBatch>(loss, base, kEps, value));
  }
  return res;
}

FamilyResult check_qat_delta(std::uint64_t seed, std::size_t batches) {
  Rng rng(seed);
  FamilyResult res{"qat_loss lsq delta grad", batches, 0.0, kDeltaTol};
  const BatchDims dims;
  for (std::size_t i = 0; i < batches; ++i) {
    ContrastiveBatch base = random_batches::random_contrastive(rng, dims, Stage::Stage1);
    const auto cfgs = qat_configs(base);
    const auto masks = branch_masks(base, cfgs);
    const LossResult analytic = quant::qat_loss(losses::retrieval_infonce, base, cfgs);
    const double g = analytic.scalar_grads.at("delta[0]");

    const double d0 = cfgs[0].delta;
    const double eps = 1e-6 * d0;
    const double up = qat_surrogate_value(base, base, cfgs, masks, d0 + eps);
    const double down = qat_surrogate_value(base, base, cfgs, masks, d0 - eps);
    // The analytic step-size gradient carries the 1/sqrt(dim * qp) scale.
    const double scale =
        1.0 / std::sqrt(static_cast<double>(base.dim()) * static_cast<double>(cfgs[0].qp));
    const double fd = (up - down) / (2.0 * eps) * scale;
    const double err = std::abs(fd - g) / std::max(1.0, std::abs(fd));
    res.max_rel_err = std::max(res.max_rel_err, err);
  }
  return res;
}

}  // namespace

std::vector<FamilyResult> run(std::uint64_t seed, std::size_t batches) {
  const BatchDims dims;
  std::vector<FamilyResult> out;

  auto contrastive_maker = [&dims](Stage stage) {
    return [&dims, stage](Rng& rng) {
      // alternate plain and duplicate-id batches so identity masking is hit
      return rng.uniform() < 0.5
                 ? random_batches::random_contrastive(rng, dims, stage)
                 : random_batches::random_contrastive_with_duplicates(rng, dims, stage);
    };
  };

  out.push_back(check_infonce("retrieval_infonce stage1", seed + 1, batches, Stage::Stage1,
                              /*use_mrl=*/false));
  out.push_back(check_infonce("retrieval_infonce stage2", seed + 2, batches, Stage::Stage2,
                              /*use_mrl=*/false));
  out.push_back(check_family<ContrastiveBatch>(
      "classification_loss", seed + 3, batches, contrastive_maker(Stage::Stage1),
      [](Rng&, const ContrastiveBatch&) { return losses::classification_loss; }));
  out.push_back(check_family<StsBatch>(
      "cosent_loss", seed + 4, batches,
      [&dims](Rng& rng) { return random_batches::random_sts(rng, dims); },
      [](Rng&, const StsBatch&) { return losses::cosent_loss; }));
  out.push_back(check_family<DistillBatch>(
      "distill_loss", seed + 5, batches,
      [&dims](Rng& rng) { return random_batches::random_distill(rng, dims); },
      [](Rng& rng, const DistillBatch&) {
        const double ts = rng.uniform(0.3, 1.0);
        const double tt = rng.uniform(0.3, 1.0);
        return [ts, tt](const DistillBatch& b) { return losses::distill_loss(b, ts, tt); };
      }));

  out.push_back(check_infonce("mrl(retrieval_infonce)", seed + 6, batches, Stage::Stage1,
                              /*use_mrl=*/true));
  out.push_back(check_family<ContrastiveBatch>(
      "mrl(classification_loss)", seed + 7, batches, contrastive_maker(Stage::Stage1),
      [](Rng&, const ContrastiveBatch& b) {
        const auto d = mrl_dims(b.dim());
        return [d](const ContrastiveBatch& x) {
          return losses::mrl_wrap<ContrastiveBatch>(losses::classification_loss, x, d);
        };
      }));
  out.push_back(check_family<StsBatch>(
      "mrl(cosent_loss)", seed + 8, batches,
      [&dims](Rng& rng) { return random_batches::random_sts(rng, dims); },
      [](Rng&, const StsBatch& b) {
        const auto d = mrl_dims(b.queries.dim);
        return [d](const StsBatch& x) {
          return losses::mrl_wrap<StsBatch>(losses::cosent_loss, x, d);
        };
      }));
  out.push_back(check_family<DistillBatch>(
      "mrl(distill_loss)", seed + 9, batches,
      [&dims](Rng& rng) { return random_batches::random_distill(rng, dims); },
      [](Rng&, const DistillBatch& b) {
        const auto d = mrl_dims(b.queries.dim);
        return [d](const DistillBatch& x) {
          return losses::mrl_wrap<DistillBatch>(
              [](const DistillBatch& y) { return losses::distill_loss(y, 0.7, 0.9); }, x, d);
        };
      }));

  out.push_back(check_qat_rows(seed + 10, batches));
  out.push_back(check_qat_delta(seed + 11, batches));
  return out;
}

}  // namespace qvle::grad_suite
