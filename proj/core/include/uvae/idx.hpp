#pragma once

#include <string>

#include "uvae/tensor.hpp"

namespace uvae {

/// Big-endian IDX reader (unsigned-byte payloads). Rank-1 files (label
/// vectors) come back as raw values; higher ranks (image stacks) are
/// rescaled to [0,1] by dividing by 255. Malformed files raise ParseError
/// with the offending byte offset.
Tensor load_idx(const std::string& path);

/// Writer for unsigned-byte IDX files; values must be integers in [0,255].
void write_idx(const std::string& path, const Tensor& values);

} // namespace uvae
