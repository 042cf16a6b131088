#pragma once

#include <span>
#include <vector>

namespace qvle {

using Vec = std::vector<double>;

/// Cosine similarity value, always in [-1, 1] up to rounding.
struct SimilarityScore {
  double value = 0.0;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

/// Returns v / ||v||.  Throws ZeroVectorError if ||v|| < 1e-30.
Vec l2_normalize(std::span<const double> v);

/// In-place variant; returns the norm that was divided out.
double l2_normalize_inplace(std::span<double> v);

/// cos(a, b) = <a,b> / (||a|| ||b||).  Throws DimMismatchError / ZeroVectorError.
SimilarityScore cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Accumulates coeff * d cos(a,b)/d a into grad_a and coeff * d cos(a,b)/d b
/// into grad_b.  Valid for arbitrary nonzero a, b (not just unit vectors).
void add_cosine_grad(std::span<const double> a, std::span<const double> b, double coeff,
                     std::span<double> grad_a, std::span<double> grad_b);

bool all_finite(std::span<const double> v);

}  // namespace qvle
