#include "qvle/vec.hpp"

#include <cmath>

#include "qvle/errors.hpp"

namespace qvle {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimMismatchError(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Vec l2_normalize(std::span<const double> v) {
  const double n = l2_norm(v);
  if (n < 1e-30) throw ZeroVectorError();
  Vec out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

double l2_normalize_inplace(std::span<double> v) {
  const double n = l2_norm(v);
  if (n < 1e-30) throw ZeroVectorError();
  for (double& x : v) x /= n;
  return n;
}

SimilarityScore cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimMismatchError(a.size(), b.size());
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na < 1e-30 || nb < 1e-30) throw ZeroVectorError();
  return SimilarityScore{dot(a, b) / (na * nb)};
}

void add_cosine_grad(std::span<const double> a, std::span<const double> b, double coeff,
                     std::span<double> grad_a, std::span<double> grad_b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  const double ab = dot(a, b);
  const double inv = 1.0 / (na * nb);
  const double s = ab * inv;
  // d cos/d a = b/(|a||b|) - cos * a/|a|^2, symmetrically for b.
  const double ia2 = 1.0 / (na * na);
  const double ib2 = 1.0 / (nb * nb);
  for (std::size_t j = 0; j < a.size(); ++j) {
    grad_a[j] += coeff * (b[j] * inv - s * a[j] * ia2);
    grad_b[j] += coeff * (a[j] * inv - s * b[j] * ib2);
  }
}

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace qvle
