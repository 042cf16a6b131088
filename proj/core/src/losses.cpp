#include "qvle/losses/losses.hpp"

#include <cmath>

#include "qvle/errors.hpp"
#include "qvle/vec.hpp"

namespace qvle::losses {

namespace {

double cos_rows(const EmbeddingMatrix& a, std::size_t i, const EmbeddingMatrix& b,
                std::size_t j) {
  return cosine_similarity(a.row(i), b.row(j)).value;
}

LossResult empty_result(const ContrastiveBatch& b) {
  LossResult res;
  res.grads["queries"] = EmbeddingMatrix::zeros(b.queries.rows, b.queries.dim);
  res.grads["queries"].ids = b.queries.ids;
  res.grads["positives"] = EmbeddingMatrix::zeros(b.positives.rows, b.positives.dim);
  res.grads["positives"].ids = b.positives.ids;
  res.grads["negatives"] = EmbeddingMatrix::zeros(b.negatives.rows, b.negatives.dim);
  res.grads["negatives"].ids = b.negatives.ids;
  return res;
}

}  // namespace

Sims compute_sims(const ContrastiveBatch& b) {
  const std::size_t n = b.size();
  Sims s;
  s.pos.resize(n);
  s.hard.resize(b.negatives.rows);
  s.qq.assign(n * n, 0.0);
  s.dd.assign(n * n, 0.0);
  s.qd.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    s.pos[i] = cos_rows(b.queries, i, b.positives, i);
    for (std::size_t k = b.negs_begin(i); k < b.negs_end(i); ++k)
      s.hard[k] = cos_rows(b.queries, i, b.negatives, k);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      s.qq[i * n + j] = cos_rows(b.queries, i, b.queries, j);
      s.dd[i * n + j] = cos_rows(b.positives, i, b.positives, j);
      s.qd[i * n + j] = cos_rows(b.queries, i, b.positives, j);
    }
  }
  return s;
}

MaskMatrix compute_mask(const ContrastiveBatch& b, const Sims& sims) {
  const std::size_t n = b.size();
  MaskMatrix m;
  m.n = n;
  m.hard.assign(b.negatives.rows, 1);
  m.qq.assign(n * n, 1);
  m.dd.assign(n * n, 1);
  m.qd.assign(n * n, 1);
  auto masked = [&](double s, double s_pos, bool same_doc) {
    return s > s_pos + kFalseNegativeMargin || same_doc;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const double sp = sims.pos[i];
    const std::string& pos_id = b.positives.ids[i];
    for (std::size_t k = b.negs_begin(i); k < b.negs_end(i); ++k)
      if (masked(sims.hard[k], sp, b.negatives.ids[k] == pos_id)) m.hard[k] = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const bool same_doc = b.positives.ids[j] == pos_id;
      if (masked(sims.qq[i * n + j], sp, false)) m.qq[i * n + j] = 0;
      if (masked(sims.dd[i * n + j], sp, same_doc)) m.dd[i * n + j] = 0;
      if (masked(sims.qd[i * n + j], sp, same_doc)) m.qd[i * n + j] = 0;
    }
  }
  return m;
}

LossResult retrieval_infonce(const ContrastiveBatch& b) {
  const Sims sims = compute_sims(b);
  return retrieval_infonce_masked(b, compute_mask(b, sims));
}

LossResult retrieval_infonce_masked(const ContrastiveBatch& b, const MaskMatrix& mask) {
  const std::size_t n = b.size();
  if (n == 0) throw EmptyBatchError();
  const double tau = b.temperature;
  const Sims sims = compute_sims(b);
  const bool in_batch_qq_dd = b.stage == Stage::Stage1;

  LossResult res = empty_result(b);
  auto& gq = res.grads["queries"];
  auto& gp = res.grads["positives"];
  auto& gn = res.grads["negatives"];

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double spos = sims.pos[i];
    double z = std::exp(spos / tau);
    for (std::size_t k = b.negs_begin(i); k < b.negs_end(i); ++k)
      if (mask.hard[k]) z += std::exp(sims.hard[k] / tau);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (in_batch_qq_dd) {
        if (mask.qq[i * n + j]) z += std::exp(sims.qq[i * n + j] / tau);
        if (mask.dd[i * n + j]) z += std::exp(sims.dd[i * n + j] / tau);
      }
      if (mask.qd[i * n + j]) z += std::exp(sims.qd[i * n + j] / tau);
    }
    total += spos / tau - std::log(z);

    // d value / d s for every term; masks are locally constant.
    const double c = 1.0 / (static_cast<double>(n) * tau);
    const double w_pos = std::exp(spos / tau) / z;
    add_cosine_grad(b.queries.row(i), b.positives.row(i), c * (w_pos - 1.0), gq.row(i),
                    gp.row(i));
    for (std::size_t k = b.negs_begin(i); k < b.negs_end(i); ++k) {
      if (!mask.hard[k]) continue;
      const double w = std::exp(sims.hard[k] / tau) / z;
      add_cosine_grad(b.queries.row(i), b.negatives.row(k), c * w, gq.row(i), gn.row(k));
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (in_batch_qq_dd) {
        if (mask.qq[i * n + j]) {
          const double w = std::exp(sims.qq[i * n + j] / tau) / z;
          add_cosine_grad(b.queries.row(i), b.queries.row(j), c * w, gq.row(i), gq.row(j));
        }
        if (mask.dd[i * n + j]) {
          const double w = std::exp(sims.dd[i * n + j] / tau) / z;
          add_cosine_grad(b.positives.row(i), b.positives.row(j), c * w, gp.row(i), gp.row(j));
        }
      }
      if (mask.qd[i * n + j]) {
        const double w = std::exp(sims.qd[i * n + j] / tau) / z;
        add_cosine_grad(b.queries.row(i), b.positives.row(j), c * w, gq.row(i), gp.row(j));
      }
    }
  }
  res.value = -total / static_cast<double>(n);
  return res;
}

LossResult classification_loss(const ContrastiveBatch& b) {
  const std::size_t n = b.size();
  if (n == 0) throw EmptyBatchError();
  const double tau = b.temperature;

  LossResult res = empty_result(b);
  auto& gq = res.grads["queries"];
  auto& gp = res.grads["positives"];
  auto& gn = res.grads["negatives"];

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t nneg = b.negs_end(i) - b.negs_begin(i);
    if (nneg == 0)
      res.warnings.push_back("query " + b.queries.ids[i] +
                             " has no explicit negatives; loss contribution is 0");
    const double z_pos = cos_rows(b.queries, i, b.positives, i) / tau;
    double z = std::exp(z_pos);
    for (std::size_t k = b.negs_begin(i); k < b.negs_end(i); ++k)
      z += std::exp(cos_rows(b.queries, i, b.negatives, k) / tau);
    total += std::log(z) - z_pos;

    const double c = 1.0 / (static_cast<double>(n) * tau);
    const double w_pos = std::exp(z_pos) / z;
    add_cosine_grad(b.queries.row(i), b.positives.row(i), c * (w_pos - 1.0), gq.row(i),
                    gp.row(i));
    for (std::size_t k = b.negs_begin(i); k < b.negs_end(i); ++k) {
      const double w = std::exp(cos_rows(b.queries, i, b.negatives, k) / tau) / z;
      add_cosine_grad(b.queries.row(i), b.negatives.row(k), c * w, gq.row(i), gn.row(k));
    }
  }
  res.value = total / static_cast<double>(n);
  return res;
}

LossResult cosent_loss(const StsBatch& b) {
  const std::size_t p = b.size();
  const double tau = b.temperature;

  LossResult res;
  res.grads["queries"] = EmbeddingMatrix::zeros(p, b.queries.dim);
  res.grads["documents"] = EmbeddingMatrix::zeros(p, b.documents.dim);
  res.grads["queries"].ids = b.queries.ids;
  res.grads["documents"].ids = b.documents.ids;

  std::vector<double> cosv(p);
  for (std::size_t k = 0; k < p; ++k)
    cosv[k] = cosine_similarity(b.queries.row(k), b.documents.row(k)).value;

  // T = sum over ordered pair-pairs with strictly greater gold score.
  double t = 0.0;
  for (std::size_t hi = 0; hi < p; ++hi)
    for (std::size_t lo = 0; lo < p; ++lo)
      if (b.gold[hi] > b.gold[lo]) t += std::exp((cosv[lo] - cosv[hi]) / tau);
  res.value = std::log1p(t);

  std::vector<double> dcos(p, 0.0);
  const double denom = 1.0 + t;
  for (std::size_t hi = 0; hi < p; ++hi) {
    for (std::size_t lo = 0; lo < p; ++lo) {
      if (!(b.gold[hi] > b.gold[lo])) continue;
      const double e = std::exp((cosv[lo] - cosv[hi]) / tau) / (denom * tau);
      dcos[lo] += e;
      dcos[hi] -= e;
    }
  }
  for (std::size_t k = 0; k < p; ++k) {
    if (dcos[k] == 0.0) continue;
    add_cosine_grad(b.queries.row(k), b.documents.row(k), dcos[k],
                    res.grads["queries"].row(k), res.grads["documents"].row(k));
  }
  return res;
}

LossResult distill_loss(const DistillBatch& b, double tau_student, double tau_teacher) {
  const std::size_t nq = b.size();
  if (tau_student <= 0.0 || tau_teacher <= 0.0) throw Error("temperature must be positive");

  LossResult res;
  res.grads["queries"] = EmbeddingMatrix::zeros(nq, b.queries.dim);
  res.grads["candidates"] = EmbeddingMatrix::zeros(b.candidates.rows, b.candidates.dim);
  res.grads["queries"].ids = b.queries.ids;
  res.grads["candidates"].ids = b.candidates.ids;
  auto& gq = res.grads["queries"];
  auto& gc = res.grads["candidates"];

  double total = 0.0;
  for (std::size_t i = 0; i < nq; ++i) {
    const std::size_t lo = b.cand_offsets[i];
    const std::size_t hi = b.cand_offsets[i + 1];
    const std::size_t k = hi - lo;

    // Teacher softmax over precomputed logits (stable).
    std::vector<double> pt(k);
    double mx = b.teacher_logits[lo] / tau_teacher;
    for (std::size_t c = 1; c < k; ++c)
      mx = std::max(mx, b.teacher_logits[lo + c] / tau_teacher);
    double zt = 0.0;
    for (std::size_t c = 0; c < k; ++c)
      zt += pt[c] = std::exp(b.teacher_logits[lo + c] / tau_teacher - mx);
    for (auto& v : pt) v /= zt;

    // Student softmax over cosine scores.
    std::vector<double> zs(k), ps(k);
    double mz = -1e300;
    for (std::size_t c = 0; c < k; ++c) {
      zs[c] = cos_rows(b.queries, i, b.candidates, lo + c) / tau_student;
      mz = std::max(mz, zs[c]);
    }
    double z = 0.0;
    for (std::size_t c = 0; c < k; ++c) z += ps[c] = std::exp(zs[c] - mz);
    const double lse = mz + std::log(z);
    for (auto& v : ps) v /= z;

    for (std::size_t c = 0; c < k; ++c) total += pt[c] * (lse - zs[c]);

    const double scale = 1.0 / (static_cast<double>(nq) * tau_student);
    for (std::size_t c = 0; c < k; ++c) {
      const double coeff = scale * (ps[c] - pt[c]);
      add_cosine_grad(b.queries.row(i), b.candidates.row(lo + c), coeff, gq.row(i),
                      gc.row(lo + c));
    }
  }
  res.value = total / static_cast<double>(nq);
  return res;
}

}  // namespace qvle::losses
