#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qvle/embedding_matrix.hpp"

namespace qvle::index {

enum class Precision { F32, F64, Int8, Binary };

Precision precision_from_string(const std::string& s);
std::string precision_to_string(Precision p);

/// One (prefix dimension, precision) operating point.
struct IndexSpec {
  std::size_t dim = 0;
  Precision precision = Precision::F32;
};

/// Payload bytes per stored vector: F32 4d, F64 8d, Int8 d+4, Binary ceil(d/8).
std::size_t bytes_per_vector(const IndexSpec& spec);

struct Hit {
  std::string doc_id;
  double score = 0.0;
};

/// Exhaustive exact-search store over truncated, re-normalized, encoded rows.
/// Immutable after build; searches may run concurrently.
class QuantizedIndex {
 public:
  static QuantizedIndex build(const EmbeddingMatrix& emb, const IndexSpec& spec);

  /// Query carries the full original dimension; truncation to spec.dim and
  /// re-normalization happen internally.  Ties break by ascending doc id.
  std::vector<Hit> search(std::span<const double> query, std::size_t top_k) const;

  const IndexSpec& spec() const { return spec_; }
  std::size_t size() const { return ids_.size(); }
  std::size_t full_dim() const { return full_dim_; }
  const std::vector<std::string>& ids() const { return ids_; }

  /// Payload only: count * bytes_per_vector(spec).
  std::size_t payload_bytes() const;
  /// Header + id table; see save() for the exact layout.
  std::size_t metadata_bytes() const;
  /// payload_bytes() + metadata_bytes(); equals the serialized file size.
  std::size_t storage_bytes() const { return payload_bytes() + metadata_bytes(); }

  void save(const std::string& path) const;
  static QuantizedIndex load(const std::string& path);

 private:
  IndexSpec spec_;
  std::size_t full_dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> f32_;
  std::vector<double> f64_;
  std::vector<std::int8_t> codes_;
  std::vector<float> scales_;       // Int8: per-vector max-abs scale
  std::vector<std::uint8_t> bits_;  // Binary: packed rows, ceil(dim/8) each
  std::vector<double> norms_;       // derived acceleration data, not serialized
};

}  // namespace qvle::index
