#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uvae/distributions.hpp"
#include "uvae/param_set.hpp"
#include "uvae/rng.hpp"

namespace uvae {

/// Dimensions, layer stacks and head choices for the three conditional
/// networks (observation encoder -> composition, composition+observation
/// -> nuisance, composition+nuisance -> observation) and the optional
/// auxiliary nuisance-from-composition network.
struct ModelConfig {
    std::size_t x_dim = 0;
    std::size_t y_dim = 0;
    std::size_t z_dim = 1;

    std::vector<std::size_t> hidden_y{5};
    std::vector<std::size_t> hidden_z{5};
    std::vector<std::size_t> hidden_x{20};
    std::vector<std::size_t> hidden_aux{5};

    Activation act_y = Activation::Tanh;
    Activation act_z = Activation::Tanh;
    Activation act_x = Activation::Tanh;
    Activation act_aux = Activation::Tanh;

    Family y_family = Family::LogisticNormal;  // or Concrete
    Family x_family = Family::DiagGaussian;    // or Bernoulli
    Activation x_output = Activation::Identity;  // mean-head nonlinearity (softplus for
                                                 // non-negative signals)

    double z_lo = -1.5;
    double z_hi = 1.5;
    double concrete_tau = 0.5;
    bool use_aux = false;
    std::optional<double> fixed_x_log_var;  // set to freeze the decoder variance head
    double gamma = 10.0;                    // half-width of the flat observation prior

    double z_width() const { return z_hi - z_lo; }
    void validate() const;
};

/// Margin keeping sampled nuisance values strictly inside the prior box.
inline constexpr double kZClampMargin = 1e-6;
/// Lower bound on the nuisance standard deviation head.
inline constexpr double kZStdFloor = 1e-6;

/// Glorot-uniform weights, zero biases, drawn in a fixed network order.
ParamSet init_params(const ModelConfig& config, std::uint64_t seed);

/// Rebuild the theta/phi partition from parameter names (decoder names carry
/// the "decoder_x/" prefix). Used after deserialization.
void assign_partitions(ParamSet& params);

// Graph forward passes; parameters stay symbolic so objectives can
// differentiate through them.
DistVars encode_y_g(Tape& tape, const ModelConfig& config, const ParamVars& params, Var x);
DistVars encode_z_g(Tape& tape, const ModelConfig& config, const ParamVars& params, Var x, Var y);
DistVars decode_x_g(Tape& tape, const ModelConfig& config, const ParamVars& params, Var y, Var z);
DistVars aux_z_g(Tape& tape, const ModelConfig& config, const ParamVars& params, Var y);

// Plain forward passes returning parameterized distributions as values.
DistSpec encode_y(const ModelConfig& config, const ParamSet& params, const Tensor& x);
DistSpec encode_z(const ModelConfig& config, const ParamSet& params, const Tensor& x,
                  const Tensor& y);
DistSpec decode_x(const ModelConfig& config, const ParamSet& params, const Tensor& y,
                  const Tensor& z);
DistSpec aux_z(const ModelConfig& config, const ParamSet& params, const Tensor& y);

enum class GenerateMode : unsigned char { Mean, Sample };

/// Observation generated from a composition and nuisance: the decoder mean,
/// or a reparameterized draw using `noise`.
Tensor generate_conditional(const ModelConfig& config, const ParamSet& params, const Tensor& y,
                            const Tensor& z, GenerateMode mode, Rng& noise);

/// Nuisance inferred for an observation; when `y` is null it is first drawn
/// from the composition encoder. `use_mean` suppresses the sampling noise
/// (posterior mean), which analysis paths use for determinism.
Tensor infer_nuisance(const ModelConfig& config, const ParamSet& params, const Tensor& x,
                      const Tensor* y, Rng& noise, bool use_mean = false);

/// Sampled nuisance values are pulled into the open prior box before any
/// uniform log-density is evaluated.
Var clamp_z(Var z, const ModelConfig& config);

} // namespace uvae
