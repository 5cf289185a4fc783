#pragma once

#include <cstdint>

#include "uvae/tensor.hpp"

namespace uvae {

/// Glyph-rendered digit images standing in for a real handwritten-digit
/// archive: a 5x7 bitmap font upscaled onto a 28x28 canvas with per-sample
/// placement jitter, intensity variation, smoothing and pixel noise.
/// `images` is N x 28 x 28 with integer values 0..255 (ready to write as
/// an IDX file); `labels` is N unsigned-byte class ids.
struct DigitSet {
    Tensor images;
    Tensor labels;
};

DigitSet generate_synthetic_digits(std::size_t count, std::uint64_t seed);

} // namespace uvae
