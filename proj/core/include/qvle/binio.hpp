#pragma once

#include <cstdint>
#include <string>

#include "qvle/embedding_matrix.hpp"

namespace qvle {

/// On-disk component type of the embedding binary format (magic "QVLE").
enum class Dtype : std::uint8_t { F32 = 0, F64 = 1, I8 = 2, Bit = 3 };

Dtype dtype_from_string(const std::string& s);
std::string dtype_to_string(Dtype d);

/// Layout: magic "QVLE", u32 version=1, u32 dim, u8 dtype, u64 count;
/// count length-prefixed UTF-8 ids (u32 length each); row data little-endian.
/// I8 rows are followed by one trailing f64 step size; Bit rows are packed
/// sign bits, ceil(dim/8) bytes per row.
void save_embeddings(const std::string& path, const EmbeddingMatrix& m, Dtype dtype,
                     double delta = 0.0);

struct LoadedEmbeddings {
  EmbeddingMatrix matrix;  // dequantized to f64 (i8: codes * delta; bit: +-1)
  Dtype dtype = Dtype::F64;
  double delta = 0.0;  // only meaningful for I8
};

LoadedEmbeddings load_embeddings(const std::string& path);

}  // namespace qvle
