#pragma once

#include <string>

#include "uvae/tensor.hpp"

namespace uvae {

/// Binary (P5) 8-bit graymap; values are probabilities in [0,1] mapped to
/// round(255*p). Byte-deterministic.
void write_pgm(const std::string& path, std::size_t height, std::size_t width,
               const Tensor& values01);

} // namespace uvae
