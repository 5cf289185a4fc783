#pragma once

#include <cstddef>

#include "uvae/rng.hpp"
#include "uvae/tape.hpp"
#include "uvae/tensor.hpp"

namespace uvae {

enum class Family : unsigned char {
    DiagGaussian,
    LogisticNormal,
    UniformBox,
    SimplexUniform,
    Concrete,
    Bernoulli,
};

const char* family_name(Family family);
Family family_from_string(const std::string& name);

/// Probability floor applied inside logs of categorical-style masses, so
/// one-hot targets stay finite.
inline constexpr double kProbFloor = 1e-9;

/// A parameterized distribution as a plain value.
///
/// DiagGaussian / LogisticNormal carry (mean, log_var); for the logistic
/// normal these parameterize the pre-softmax Gaussian, with the mean head
/// already mapped to the simplex. UniformBox carries per-coordinate bounds.
/// SimplexUniform is the flat Dirichlet on K coordinates. Concrete carries
/// logits plus temperature; Bernoulli carries logits.
struct DistSpec {
    Family family = Family::DiagGaussian;
    Tensor mean;
    Tensor log_var;
    Tensor lo, hi;
    std::size_t dim = 0;
    Tensor logits;
    double temperature = 1.0;

    static DistSpec diag_gaussian(Tensor mean, Tensor log_var);
    static DistSpec logistic_normal(Tensor mean_simplex, Tensor log_var);
    static DistSpec uniform_box(Tensor lo, Tensor hi);
    static DistSpec simplex_uniform(std::size_t k);
    static DistSpec concrete(Tensor logits, double temperature);
    static DistSpec bernoulli(Tensor logits);

    std::size_t event_size() const;
};

/// Exact log-density at `value`. UniformBox returns -inf outside its box;
/// simplex families reject values off the (appropriately open or closed)
/// simplex as a contract violation.
double log_density(const DistSpec& dist, const Tensor& value);

/// Reparameterized sample: mean + sqrt(var)*eps for the Gaussian, the
/// softmax of the same for the logistic normal, softmax((logits+g)/tau)
/// for the concrete. Bernoulli returns its mean (the relaxed sample the
/// real-valued log-density accepts). UniformBox maps uniform noise onto
/// the box.
Tensor rsample(const DistSpec& dist, const NoiseDraw& noise);

/// Distribution mean in the sense the training loop uses: the Gaussian mean
/// head, the logistic-normal simplex mean head, softmax(logits) for the
/// concrete, sigmoid(logits) for the Bernoulli.
Tensor dist_mean(const DistSpec& dist);

/// sum_i p_i log(p_i / q_i) with 0 log 0 = 0 and q floored at kProbFloor.
double kl_categorical(const Tensor& p, const Tensor& q);

/// Number of noise values rsample consumes for this family.
std::size_t noise_size(const DistSpec& dist);
NoiseKind noise_kind_for(Family family);

// ---------------------------------------------------------------------------
// Tape-level mirror, used inside objective graphs. Parameters are Vars so
// gradients flow into the networks that produced them; values may be graph
// nodes too (reparameterized samples).

struct DistVars {
    Family family = Family::DiagGaussian;
    Var mean;
    Var log_var;
    Var logits;
    double temperature = 1.0;
    double lo = 0.0, hi = 0.0;  // uniform box, one bound pair for all coords
    std::size_t dim = 0;

    /// Snapshot of the current parameter values as a plain DistSpec.
    DistSpec freeze(const Tape& tape) const;
};

Var log_density_g(Tape& tape, const DistVars& dist, Var value);
Var rsample_g(Tape& tape, const DistVars& dist, const NoiseDraw& noise);
Var dist_mean_g(Tape& tape, const DistVars& dist);

/// Graph KL(p || q) with constant target p and floored q.
Var kl_categorical_g(Tape& tape, const Tensor& p, Var q);

/// log-volume term of a uniform box with identical per-coordinate bounds:
/// -dim * log(hi - lo).
double uniform_box_log_volume(std::size_t dim, double lo, double hi);

} // namespace uvae
