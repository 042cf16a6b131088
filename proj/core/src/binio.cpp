#include "qvle/binio.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "qvle/errors.hpp"
#include "qvle/io_util.hpp"

namespace qvle {

namespace {

constexpr char kMagic[4] = {'Q', 'V', 'L', 'E'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& buf, T value) {
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  buf.append(raw, sizeof(T));
}

template <typename T>
T take(const std::string& buf, std::size_t& off) {
  if (off + sizeof(T) > buf.size()) throw IoError("truncated embedding file");
  T value;
  std::memcpy(&value, buf.data() + off, sizeof(T));
  off += sizeof(T);
  return value;
}

std::int8_t quantize_i8(double v, double delta) {
  const double q = std::round(v / delta);
  return static_cast<std::int8_t>(std::max(-128.0, std::min(127.0, q)));
}

}  // namespace

Dtype dtype_from_string(const std::string& s) {
  if (s == "f32") return Dtype::F32;
  if (s == "f64") return Dtype::F64;
  if (s == "int8" || s == "i8") return Dtype::I8;
  if (s == "binary" || s == "bit") return Dtype::Bit;
  throw Error("unknown dtype: " + s);
}

std::string dtype_to_string(Dtype d) {
  switch (d) {
    case Dtype::F32: return "f32";
    case Dtype::F64: return "f64";
    case Dtype::I8: return "int8";
    case Dtype::Bit: return "binary";
  }
  return "?";
}

void save_embeddings(const std::string& path, const EmbeddingMatrix& m, Dtype dtype,
                     double delta) {
  if (dtype == Dtype::I8 && delta <= 0.0)
    throw Error("i8 embedding file needs a positive step size");

  std::string buf;
  buf.append(kMagic, 4);
  put<std::uint32_t>(buf, kVersion);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(m.dim));
  put<std::uint8_t>(buf, static_cast<std::uint8_t>(dtype));
  put<std::uint64_t>(buf, m.rows);
  for (const auto& id : m.ids) {
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(id.size()));
    buf.append(id);
  }
  switch (dtype) {
    case Dtype::F32:
      for (double v : m.data) put<float>(buf, static_cast<float>(v));
      break;
    case Dtype::F64:
      for (double v : m.data) put<double>(buf, v);
      break;
    case Dtype::I8:
      for (double v : m.data) put<std::int8_t>(buf, quantize_i8(v, delta));
      put<double>(buf, delta);
      break;
    case Dtype::Bit: {
      const std::size_t bpr = (m.dim + 7) / 8;
      for (std::size_t r = 0; r < m.rows; ++r) {
        std::string row(bpr, '\0');
        const auto v = m.row(r);
        for (std::size_t j = 0; j < m.dim; ++j)
          if (v[j] >= 0.0) row[j / 8] |= static_cast<char>(1u << (j % 8));
        buf.append(row);
      }
      break;
    }
  }
  atomic_write(path, buf);
}

LoadedEmbeddings load_embeddings(const std::string& path) {
  const std::string buf = read_file(path);
  std::size_t off = 0;
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
    throw IoError(path + ": bad magic");
  off = 4;
  const auto version = take<std::uint32_t>(buf, off);
  if (version != kVersion) throw IoError(path + ": unsupported version");
  const auto dim = take<std::uint32_t>(buf, off);
  const auto dtype = static_cast<Dtype>(take<std::uint8_t>(buf, off));
  const auto count = take<std::uint64_t>(buf, off);

  LoadedEmbeddings out;
  out.dtype = dtype;
  out.matrix.rows = count;
  out.matrix.dim = dim;
  out.matrix.ids.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = take<std::uint32_t>(buf, off);
    if (off + len > buf.size()) throw IoError("truncated id table");
    out.matrix.ids.emplace_back(buf.data() + off, len);
    off += len;
  }
  out.matrix.data.resize(count * dim);
  switch (dtype) {
    case Dtype::F32:
      for (auto& v : out.matrix.data) v = take<float>(buf, off);
      break;
    case Dtype::F64:
      for (auto& v : out.matrix.data) v = take<double>(buf, off);
      break;
    case Dtype::I8: {
      std::vector<std::int8_t> codes(count * dim);
      for (auto& c : codes) c = take<std::int8_t>(buf, off);
      out.delta = take<double>(buf, off);
      for (std::size_t i = 0; i < codes.size(); ++i)
        out.matrix.data[i] = codes[i] * out.delta;
      break;
    }
    case Dtype::Bit: {
      const std::size_t bpr = (dim + 7) / 8;
      for (std::uint64_t r = 0; r < count; ++r) {
        if (off + bpr > buf.size()) throw IoError("truncated bit rows");
        for (std::uint32_t j = 0; j < dim; ++j) {
          const bool bit = (buf[off + j / 8] >> (j % 8)) & 1;
          out.matrix.data[r * dim + j] = bit ? 1.0 : -1.0;
        }
        off += bpr;
      }
      break;
    }
  }
  out.matrix.check_invariants();
  return out;
}

}  // namespace qvle
