#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace qvle {

/// Row-major N x D matrix of float64 components with one opaque id per row.
/// The universal currency of the toolkit.
struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> data;      // rows * dim, row-major
  std::vector<std::string> ids;  // rows entries, unique

  static EmbeddingMatrix zeros(std::size_t rows, std::size_t dim);

  std::span<double> row(std::size_t i) { return {data.data() + i * dim, dim}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }

  void push_row(const std::string& id, std::span<const double> v);

  /// Throws on shape/id/finiteness invariant violations.
  void check_invariants() const;

  /// Divides every row by its L2 norm.  Throws ZeroVectorError.
  void normalize_rows();
};

}  // namespace qvle
