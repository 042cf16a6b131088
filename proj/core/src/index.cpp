#include "qvle/index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "qvle/errors.hpp"
#include "qvle/io_util.hpp"
#include "qvle/vec.hpp"

namespace qvle::index {

namespace {

constexpr char kMagic[4] = {'Q', 'V', 'L', 'I'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& buf, T value) {
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  buf.append(raw, sizeof(T));
}

template <typename T>
T take(const std::string& buf, std::size_t& off) {
  if (off + sizeof(T) > buf.size()) throw IoError("truncated index file");
  T value;
  std::memcpy(&value, buf.data() + off, sizeof(T));
  off += sizeof(T);
  return value;
}

// Unrolled dot products with four independent accumulator chains.  The
// summation order is fixed (s0+s1)+(s2+s3), so results stay deterministic
// while the chains break the serial FP dependency in the hot loop.
template <typename T>
double dot_rows(const T* a, const double* q, std::size_t d) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t j = 0;
  for (; j + 4 <= d; j += 4) {
    s0 += static_cast<double>(a[j]) * q[j];
    s1 += static_cast<double>(a[j + 1]) * q[j + 1];
    s2 += static_cast<double>(a[j + 2]) * q[j + 2];
    s3 += static_cast<double>(a[j + 3]) * q[j + 3];
  }
  for (; j < d; ++j) s0 += static_cast<double>(a[j]) * q[j];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace

Precision precision_from_string(const std::string& s) {
  if (s == "f32") return Precision::F32;
  if (s == "f64") return Precision::F64;
  if (s == "int8" || s == "i8") return Precision::Int8;
  if (s == "binary" || s == "bit") return Precision::Binary;
  throw Error("unknown precision: " + s);
}

std::string precision_to_string(Precision p) {
  switch (p) {
    case Precision::F32: return "f32";
    case Precision::F64: return "f64";
    case Precision::Int8: return "int8";
    case Precision::Binary: return "binary";
  }
  return "?";
}

std::size_t bytes_per_vector(const IndexSpec& spec) {
  switch (spec.precision) {
    case Precision::F32: return 4 * spec.dim;
    case Precision::F64: return 8 * spec.dim;
    case Precision::Int8: return spec.dim + 4;
    case Precision::Binary: return (spec.dim + 7) / 8;
  }
  return 0;
}

QuantizedIndex QuantizedIndex::build(const EmbeddingMatrix& emb, const IndexSpec& spec) {
  if (spec.dim < 1 || spec.dim > emb.dim)
    throw BadDimsError("index dim " + std::to_string(spec.dim) + " vs embedding dim " +
                       std::to_string(emb.dim));
  QuantizedIndex idx;
  idx.spec_ = spec;
  idx.full_dim_ = emb.dim;
  idx.ids_ = emb.ids;
  const std::size_t n = emb.rows;
  const std::size_t d = spec.dim;

  Vec row(d);
  switch (spec.precision) {
    case Precision::F32: idx.f32_.reserve(n * d); break;
    case Precision::F64: idx.f64_.reserve(n * d); break;
    case Precision::Int8:
      idx.codes_.reserve(n * d);
      idx.scales_.reserve(n);
      break;
    case Precision::Binary: idx.bits_.assign(n * ((d + 7) / 8), 0); break;
  }
  idx.norms_.assign(n, 0.0);

  for (std::size_t r = 0; r < n; ++r) {
    const auto src = emb.row(r);
    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(d), row.begin());
    l2_normalize_inplace(row);
    switch (spec.precision) {
      case Precision::F32: {
        double s = 0.0;
        for (double v : row) {
          const float f = static_cast<float>(v);
          idx.f32_.push_back(f);
          s += static_cast<double>(f) * static_cast<double>(f);
        }
        idx.norms_[r] = std::sqrt(s);
        break;
      }
      case Precision::F64: {
        idx.f64_.insert(idx.f64_.end(), row.begin(), row.end());
        idx.norms_[r] = l2_norm(row);
        break;
      }
      case Precision::Int8: {
        double maxabs = 0.0;
        for (double v : row) maxabs = std::max(maxabs, std::abs(v));
        const float scale = static_cast<float>(maxabs / 127.0);
        idx.scales_.push_back(scale);
        double s = 0.0;
        for (double v : row) {
          const double q = scale > 0.0f ? std::round(v / scale) : 0.0;
          const auto code = static_cast<std::int8_t>(std::max(-127.0, std::min(127.0, q)));
          idx.codes_.push_back(code);
          s += static_cast<double>(code) * static_cast<double>(code);
        }
        idx.norms_[r] = std::sqrt(s);
        break;
      }
      case Precision::Binary: {
        std::uint8_t* dst = idx.bits_.data() + r * ((d + 7) / 8);
        for (std::size_t j = 0; j < d; ++j)
          if (row[j] >= 0.0) dst[j / 8] |= static_cast<std::uint8_t>(1u << (j % 8));
        break;
      }
    }
  }
  return idx;
}

std::vector<Hit> QuantizedIndex::search(std::span<const double> query, std::size_t top_k) const {
  const std::size_t n = ids_.size();
  if (n == 0) throw EmptyIndexError();
  if (query.size() != full_dim_) throw DimMismatchError(query.size(), full_dim_);
  const std::size_t d = spec_.dim;

  Vec q(query.begin(), query.begin() + static_cast<std::ptrdiff_t>(d));
  l2_normalize_inplace(q);

  std::vector<double> scores(n);
  switch (spec_.precision) {
    case Precision::F64: {
      const double qn = l2_norm(q);
      for (std::size_t r = 0; r < n; ++r)
        scores[r] = dot_rows(f64_.data() + r * d, q.data(), d) / (norms_[r] * qn);
      break;
    }
    case Precision::F32: {
      const double qn = l2_norm(q);
      for (std::size_t r = 0; r < n; ++r)
        scores[r] = dot_rows(f32_.data() + r * d, q.data(), d) / (norms_[r] * qn);
      break;
    }
    case Precision::Int8: {
      const double qn = l2_norm(q);
      for (std::size_t r = 0; r < n; ++r) {
        const double s = dot_rows(codes_.data() + r * d, q.data(), d);
        // Per-vector scale cancels out of the cosine.
        scores[r] = norms_[r] > 0.0 ? s / (norms_[r] * qn) : 0.0;
      }
      break;
    }
    case Precision::Binary: {
      const std::size_t bpr = (d + 7) / 8;
      std::vector<std::uint8_t> qbits(bpr, 0);
      for (std::size_t j = 0; j < d; ++j)
        if (q[j] >= 0.0) qbits[j / 8] |= static_cast<std::uint8_t>(1u << (j % 8));
      // both operands zero-pad the bits above dim, so no tail masking is
      // needed: padding bits always XOR to zero
      for (std::size_t r = 0; r < n; ++r) {
        const std::uint8_t* row = bits_.data() + r * bpr;
        std::size_t ham = 0;
        std::size_t bidx = 0;
        for (; bidx + 8 <= bpr; bidx += 8) {
          std::uint64_t x;
          std::memcpy(&x, row + bidx, 8);
          std::uint64_t y;
          std::memcpy(&y, qbits.data() + bidx, 8);
          ham += static_cast<std::size_t>(__builtin_popcountll(x ^ y));
        }
        for (; bidx < bpr; ++bidx)
          ham += static_cast<std::size_t>(__builtin_popcount(row[bidx] ^ qbits[bidx]));
        // dot of the two +-1 vectors: dim - 2 * hamming.
        scores[r] = static_cast<double>(d) - 2.0 * static_cast<double>(ham);
      }
      break;
    }
  }

  const std::size_t keep = std::min(top_k, n);
  std::vector<std::uint32_t> order(n);
  for (std::size_t r = 0; r < n; ++r) order[r] = static_cast<std::uint32_t>(r);
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids_[a] < ids_[b];
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                    better);
  std::vector<Hit> hits(keep);
  for (std::size_t r = 0; r < keep; ++r) hits[r] = {ids_[order[r]], scores[order[r]]};
  return hits;
}

std::size_t QuantizedIndex::payload_bytes() const {
  return ids_.size() * bytes_per_vector(spec_);
}

std::size_t QuantizedIndex::metadata_bytes() const {
  // magic + version + full_dim + dim + precision + count + id table
  std::size_t m = 4 + 4 + 4 + 4 + 1 + 8;
  for (const auto& id : ids_) m += 4 + id.size();
  return m;
}

void QuantizedIndex::save(const std::string& path) const {
  std::string buf;
  buf.reserve(storage_bytes());
  buf.append(kMagic, 4);
  put<std::uint32_t>(buf, kVersion);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(full_dim_));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(spec_.dim));
  put<std::uint8_t>(buf, static_cast<std::uint8_t>(spec_.precision));
  put<std::uint64_t>(buf, ids_.size());
  for (const auto& id : ids_) {
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(id.size()));
    buf.append(id);
  }
  const std::size_t n = ids_.size();
  const std::size_t d = spec_.dim;
  switch (spec_.precision) {
    case Precision::F32:
      buf.append(reinterpret_cast<const char*>(f32_.data()), n * d * 4);
      break;
    case Precision::F64:
      buf.append(reinterpret_cast<const char*>(f64_.data()), n * d * 8);
      break;
    case Precision::Int8:
      for (std::size_t r = 0; r < n; ++r) {
        buf.append(reinterpret_cast<const char*>(codes_.data() + r * d), d);
        put<float>(buf, scales_[r]);
      }
      break;
    case Precision::Binary:
      buf.append(reinterpret_cast<const char*>(bits_.data()), n * ((d + 7) / 8));
      break;
  }
  atomic_write(path, buf);
}

QuantizedIndex QuantizedIndex::load(const std::string& path) {
  const std::string buf = read_file(path);
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
    throw IoError(path + ": bad index magic");
  std::size_t off = 4;
  if (take<std::uint32_t>(buf, off) != kVersion) throw IoError("unsupported index version");

  QuantizedIndex idx;
  idx.full_dim_ = take<std::uint32_t>(buf, off);
  idx.spec_.dim = take<std::uint32_t>(buf, off);
  idx.spec_.precision = static_cast<Precision>(take<std::uint8_t>(buf, off));
  const auto count = take<std::uint64_t>(buf, off);
  idx.ids_.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = take<std::uint32_t>(buf, off);
    if (off + len > buf.size()) throw IoError("truncated index id table");
    idx.ids_.emplace_back(buf.data() + off, len);
    off += len;
  }
  const std::size_t n = count;
  const std::size_t d = idx.spec_.dim;
  idx.norms_.assign(n, 0.0);
  switch (idx.spec_.precision) {
    case Precision::F32:
      idx.f32_.resize(n * d);
      for (auto& v : idx.f32_) v = take<float>(buf, off);
      for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double v = idx.f32_[r * d + j];
          s += v * v;
        }
        idx.norms_[r] = std::sqrt(s);
      }
      break;
    case Precision::F64:
      idx.f64_.resize(n * d);
      for (auto& v : idx.f64_) v = take<double>(buf, off);
      for (std::size_t r = 0; r < n; ++r)
        idx.norms_[r] = l2_norm({idx.f64_.data() + r * d, d});
      break;
    case Precision::Int8:
      idx.codes_.resize(n * d);
      idx.scales_.resize(n);
      for (std::size_t r = 0; r < n; ++r) {
        if (off + d > buf.size()) throw IoError("truncated index codes");
        std::memcpy(idx.codes_.data() + r * d, buf.data() + off, d);
        off += d;
        idx.scales_[r] = take<float>(buf, off);
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double c = idx.codes_[r * d + j];
          s += c * c;
        }
        idx.norms_[r] = std::sqrt(s);
      }
      break;
    case Precision::Binary: {
      const std::size_t bpr = (d + 7) / 8;
      if (off + n * bpr > buf.size()) throw IoError("truncated index bits");
      idx.bits_.resize(n * bpr);
      std::memcpy(idx.bits_.data(), buf.data() + off, n * bpr);
      off += n * bpr;
      break;
    }
  }
  return idx;
}

}  // namespace qvle::index
