#include "uvae/digits.hpp"

#include <cmath>

#include "uvae/rng.hpp"

namespace uvae {

namespace {

// 5x7 bitmap font, one row string per scanline.
const char* kFont[10][7] = {
    {"01110", "10001", "10011", "10101", "11001", "10001", "01110"},  // 0
    {"00100", "01100", "00100", "00100", "00100", "00100", "01110"},  // 1
    {"01110", "10001", "00001", "00010", "00100", "01000", "11111"},  // 2
    {"11111", "00010", "00100", "00010", "00001", "10001", "01110"},  // 3
    {"00010", "00110", "01010", "10010", "11111", "00010", "00010"},  // 4
    {"11111", "10000", "11110", "00001", "00001", "10001", "01110"},  // 5
    {"00110", "01000", "10000", "11110", "10001", "10001", "01110"},  // 6
    {"11111", "00001", "00010", "00100", "01000", "01000", "01000"},  // 7
    {"01110", "10001", "10001", "01110", "10001", "10001", "01110"},  // 8
    {"01110", "10001", "10001", "01111", "00001", "00010", "01100"},  // 9
};

constexpr std::size_t kSide = 28;
constexpr std::size_t kScale = 3;  // glyph covers 15x21

} // namespace

DigitSet generate_synthetic_digits(std::size_t count, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "digits"));
    DigitSet out;
    out.images = Tensor::zeros({count, kSide, kSide});
    out.labels = Tensor::zeros({count});

    std::vector<double> canvas(kSide * kSide);
    std::vector<double> blurred(kSide * kSide);
    for (std::size_t n = 0; n < count; ++n) {
        std::size_t digit = static_cast<std::size_t>(rng.uniform01() * 10.0);
        if (digit > 9) digit = 9;
        out.labels[n] = static_cast<double>(digit);

        std::fill(canvas.begin(), canvas.end(), 0.0);
        double intensity = rng.uniform(0.65, 1.0);
        std::size_t dx = static_cast<std::size_t>(rng.uniform(2.0, 11.0));
        std::size_t dy = static_cast<std::size_t>(rng.uniform(2.0, 6.0));
        for (std::size_t r = 0; r < 7; ++r) {
            for (std::size_t c = 0; c < 5; ++c) {
                if (kFont[digit][r][c] != '1') continue;
                for (std::size_t sr = 0; sr < kScale; ++sr) {
                    for (std::size_t sc = 0; sc < kScale; ++sc) {
                        std::size_t row = dy + r * kScale + sr;
                        std::size_t col = dx + c * kScale + sc;
                        if (row < kSide && col < kSide) {
                            canvas[row * kSide + col] = intensity;
                        }
                    }
                }
            }
        }
        // 3x3 box blur softens the block edges.
        for (std::size_t r = 0; r < kSide; ++r) {
            for (std::size_t c = 0; c < kSide; ++c) {
                double acc = 0.0;
                int cnt = 0;
                for (int rr = -1; rr <= 1; ++rr) {
                    for (int cc = -1; cc <= 1; ++cc) {
                        int r2 = static_cast<int>(r) + rr;
                        int c2 = static_cast<int>(c) + cc;
                        if (r2 < 0 || c2 < 0 || r2 >= static_cast<int>(kSide) ||
                            c2 >= static_cast<int>(kSide)) {
                            continue;
                        }
                        acc += canvas[static_cast<std::size_t>(r2) * kSide +
                                      static_cast<std::size_t>(c2)];
                        ++cnt;
                    }
                }
                blurred[r * kSide + c] = acc / cnt;
            }
        }
        for (std::size_t i = 0; i < kSide * kSide; ++i) {
            double v = blurred[i] + 0.03 * rng.normal();
            v = std::min(std::max(v, 0.0), 1.0);
            out.images[n * kSide * kSide + i] = std::floor(v * 255.0 + 0.5);
        }
    }
    return out;
}

} // namespace uvae
