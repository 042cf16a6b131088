#include "qvle/synth.hpp"

#include <cmath>
#include <cstdio>

#include "qvle/errors.hpp"
#include "qvle/rng.hpp"
#include "qvle/vec.hpp"

namespace qvle::synth {

namespace {

std::string padded_id(char prefix, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%c%07zu", prefix, i);
  return buf;
}

Vec random_unit(Rng& rng, std::size_t dim) {
  Vec v(dim);
  for (auto& x : v) x = rng.gauss();
  return l2_normalize(v);
}

// Perturb a unit vector by `noise` along a fresh random unit direction, then
// re-normalize.  noise=0 returns the input unchanged (no RNG consumption
// asymmetry matters: we still draw to keep streams aligned across noise
// settings is NOT required, so skip drawing when noise == 0).
Vec perturb(Rng& rng, const Vec& base, double noise) {
  if (noise == 0.0) return base;
  Vec dir = random_unit(rng, base.size());
  Vec out(base.size());
  for (std::size_t j = 0; j < base.size(); ++j) out[j] = base[j] + noise * dir[j];
  return l2_normalize(out);
}

}  // namespace

SynthCorpus synth_corpus(const SynthConfig& cfg) {
  if (cfg.clusters == 0 || cfg.n_docs == 0 || cfg.n_queries == 0) throw EmptyBatchError();
  if (cfg.clusters > cfg.dim)
    throw InfeasibleSeparationError(std::to_string(cfg.clusters) + " orthogonal clusters need dim >= " +
                                    std::to_string(cfg.clusters) + ", got " +
                                    std::to_string(cfg.dim));
  if (cfg.clusters > cfg.n_docs)
    throw InfeasibleSeparationError("more clusters than documents");
  if (!(cfg.noise >= 0.0) || !std::isfinite(cfg.noise))
    throw NonFiniteError("noise");

  Rng rng(cfg.seed);

  // Orthonormal centers via Gram-Schmidt on Gaussian draws.
  std::vector<Vec> centers;
  centers.reserve(cfg.clusters);
  for (std::size_t c = 0; c < cfg.clusters; ++c) {
    Vec v(cfg.dim);
    for (;;) {
      for (auto& x : v) x = rng.gauss();
      for (const auto& u : centers) {
        const double proj = dot(v, u);
        for (std::size_t j = 0; j < cfg.dim; ++j) v[j] -= proj * u[j];
      }
      if (l2_norm(v) > 1e-6) break;  // numerically degenerate draw; retry
    }
    centers.push_back(l2_normalize(v));
  }

  SynthCorpus out;
  out.docs = EmbeddingMatrix::zeros(0, cfg.dim);
  out.queries = EmbeddingMatrix::zeros(0, cfg.dim);

  for (std::size_t i = 0; i < cfg.n_docs; ++i) {
    const Vec& center = centers[i % cfg.clusters];
    out.docs.push_row(padded_id('d', i), perturb(rng, center, cfg.noise));
  }
  for (std::size_t i = 0; i < cfg.n_queries; ++i) {
    const std::size_t pos = rng.uniform_index(cfg.n_docs);
    Vec base(out.docs.row(pos).begin(), out.docs.row(pos).end());
    out.queries.push_row(padded_id('q', i), perturb(rng, base, cfg.noise));
    out.relevance.push_back({out.queries.ids[i], {out.docs.ids[pos]}, {}, {}});
  }
  return out;
}

}  // namespace qvle::synth
