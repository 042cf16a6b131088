#pragma once

#include <string>

namespace qvle {

/// Writes content to path via a temp file in the same directory plus rename,
/// so readers never observe a partially written file.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace qvle
