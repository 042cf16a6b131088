#include "qvle/embedding_matrix.hpp"

#include <unordered_set>

#include "qvle/errors.hpp"
#include "qvle/vec.hpp"

namespace qvle {

EmbeddingMatrix EmbeddingMatrix::zeros(std::size_t rows, std::size_t dim) {
  EmbeddingMatrix m;
  m.rows = rows;
  m.dim = dim;
  m.data.assign(rows * dim, 0.0);
  m.ids.resize(rows);
  return m;
}

void EmbeddingMatrix::push_row(const std::string& id, std::span<const double> v) {
  if (rows == 0 && dim == 0) dim = v.size();
  if (v.size() != dim) throw DimMismatchError(v.size(), dim);
  data.insert(data.end(), v.begin(), v.end());
  ids.push_back(id);
  ++rows;
}

void EmbeddingMatrix::check_invariants() const {
  if (data.size() != rows * dim)
    throw Error("embedding matrix: data length != rows * dim");
  if (ids.size() != rows) throw Error("embedding matrix: ids length != rows");
  std::unordered_set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second) throw DuplicateIdError(id);
  if (!all_finite(data)) throw NonFiniteError("embedding matrix");
}

void EmbeddingMatrix::normalize_rows() {
  for (std::size_t i = 0; i < rows; ++i) l2_normalize_inplace(row(i));
}

}  // namespace qvle
