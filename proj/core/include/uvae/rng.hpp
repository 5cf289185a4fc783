#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "uvae/tensor.hpp"

namespace uvae {

/// Deterministic random stream. The engine is the standard-mandated
/// mt19937_64 sequence and every distribution transform is written out
/// explicitly, so identical seeds give identical draws on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t next_u64() {
        ++count_;
        return engine_();
    }

    /// Uniform in the open interval (0, 1).
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via the Box-Muller cosine branch (two raw draws).
    double normal();

    /// Standard Gumbel, -log(-log(U)).
    double gumbel();

    Tensor normal_vec(std::size_t n);
    Tensor gumbel_vec(std::size_t n);
    Tensor uniform_vec(std::size_t n, double lo, double hi);

    std::uint64_t seed() const { return seed_; }
    /// Count of raw 64-bit draws consumed so far; replaying a stream to this
    /// position reproduces the next draw exactly.
    std::uint64_t position() const { return count_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::uint64_t count_ = 0;
};

/// Stable sub-stream seed for a named purpose (init, data, batching, ...).
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

enum class NoiseKind { Normal, Gumbel, Uniform };

/// A recorded batch of noise values together with the stream coordinates
/// that produced it, so any sample can be replayed.
struct NoiseDraw {
    Tensor values;
    NoiseKind kind = NoiseKind::Normal;
    std::uint64_t seed = 0;
    std::uint64_t begin = 0;
    std::uint64_t end = 0;
};

NoiseDraw draw_normal(Rng& rng, std::size_t n);
NoiseDraw draw_gumbel(Rng& rng, std::size_t n);
NoiseDraw draw_uniform(Rng& rng, std::size_t n, double lo, double hi);

/// An all-zeros "draw" (the noiseless point of a reparameterized sampler).
NoiseDraw zero_noise(std::size_t n);

} // namespace uvae
