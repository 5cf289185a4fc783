#include "uvae/rng.hpp"

#include <cmath>

namespace uvae {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
} // namespace

double Rng::normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double Rng::gumbel() { return -std::log(-std::log(uniform01())); }

Tensor Rng::normal_vec(std::size_t n) {
    Tensor t = Tensor::zeros({n});
    for (std::size_t i = 0; i < n; ++i) t[i] = normal();
    return t;
}

Tensor Rng::gumbel_vec(std::size_t n) {
    Tensor t = Tensor::zeros({n});
    for (std::size_t i = 0; i < n; ++i) t[i] = gumbel();
    return t;
}

Tensor Rng::uniform_vec(std::size_t n, double lo, double hi) {
    Tensor t = Tensor::zeros({n});
    for (std::size_t i = 0; i < n; ++i) t[i] = uniform(lo, hi);
    return t;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    // FNV-1a over the tag, mixed with the base through splitmix64.
    std::uint64_t h = 14695981039346656037ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return splitmix64(base ^ h);
}

namespace {
NoiseDraw record(Rng& rng, NoiseKind kind, std::uint64_t begin, Tensor values) {
    NoiseDraw d;
    d.values = std::move(values);
    d.kind = kind;
    d.seed = rng.seed();
    d.begin = begin;
    d.end = rng.position();
    return d;
}
} // namespace

NoiseDraw draw_normal(Rng& rng, std::size_t n) {
    std::uint64_t begin = rng.position();
    return record(rng, NoiseKind::Normal, begin, rng.normal_vec(n));
}

NoiseDraw draw_gumbel(Rng& rng, std::size_t n) {
    std::uint64_t begin = rng.position();
    return record(rng, NoiseKind::Gumbel, begin, rng.gumbel_vec(n));
}

NoiseDraw draw_uniform(Rng& rng, std::size_t n, double lo, double hi) {
    std::uint64_t begin = rng.position();
    return record(rng, NoiseKind::Uniform, begin, rng.uniform_vec(n, lo, hi));
}

NoiseDraw zero_noise(std::size_t n) {
    NoiseDraw d;
    d.values = Tensor::zeros({n});
    d.kind = NoiseKind::Normal;
    return d;
}

} // namespace uvae
