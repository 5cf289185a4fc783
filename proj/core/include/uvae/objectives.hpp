#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uvae/model.hpp"

namespace uvae {

/// Weights of the four objective blocks: forward bound, forward
/// discriminative loss, reverse bound, reverse discriminative loss.
/// Zeroing the reverse weights recovers the forward-only ablation.
struct ObjectiveCoefficients {
    double alpha_f = 1.0;
    double alpha_f_d = 1.0;
    double alpha_r = 0.01;
    double alpha_r_d = 1.0;
    void validate() const;
};

/// How the unfeatured-label bound treats the nuisance: drawn from its prior,
/// taken from the dataset pair, or drawn from the auxiliary network.
enum class UnfeaturedVariant : unsigned char { LatentZ, ObservedZ, AuxZ };

UnfeaturedVariant variant_from_string(const std::string& name);
const char* variant_to_string(UnfeaturedVariant variant);

struct NoiseProvenance {
    std::uint64_t seed = 0;
    std::uint64_t begin = 0;
    std::uint64_t end = 0;
};

/// A single-batch bound estimate with its per-term breakdown. The value is
/// exactly the sum of the breakdown entries.
struct ElboEstimate {
    double value = 0.0;
    std::vector<std::pair<std::string, double>> breakdown;
    NoiseProvenance noise;
};

/// Graph form: named term nodes plus their sum.
struct TermVars {
    std::vector<std::pair<std::string, Var>> terms;
    Var total;
};

// Graph builders. Each draws its own noise from `rng` in a fixed order
// (documented next to the implementation) and averages over `sample_count`
// independent draws.
TermVars elbo_forward_labeled_g(Tape& tape, const ModelConfig& config, const ParamVars& params,
                                const Tensor& x, const Tensor& y, Rng& rng, int sample_count = 1);
TermVars elbo_forward_unlabeled_g(Tape& tape, const ModelConfig& config, const ParamVars& params,
                                  const Tensor& x, Rng& rng, int sample_count = 1);
TermVars elbo_reverse_labeled_g(Tape& tape, const ModelConfig& config, const ParamVars& params,
                                const Tensor& x, const Tensor& y, Rng& rng, int sample_count = 1);
TermVars elbo_reverse_unfeatured_g(Tape& tape, const ModelConfig& config, const ParamVars& params,
                                   const Tensor& y, const Tensor* z_observed,
                                   UnfeaturedVariant variant, Rng& rng, int sample_count = 1);
Var aux_consistency_kl_g(Tape& tape, const ModelConfig& config, const ParamVars& params,
                         const Tensor& y, int sample_count, Rng& rng);

struct DiscriminativeVars {
    Var loss_y;
    Var loss_x;
};

/// KL(y || mean of q(y|x)) and ||mean of p(x|y,z) - x||^2 with z from the
/// prior. `z_prior` lets the caller share one prior draw across terms, as
/// the training loop does.
DiscriminativeVars discriminative_losses_g(Tape& tape, const ModelConfig& config,
                                           const ParamVars& params, const Tensor& x,
                                           const Tensor& y, const NoiseDraw& z_prior);

// Value-level operations.
ElboEstimate elbo_forward_labeled(const ModelConfig& config, const ParamSet& params,
                                  const Tensor& x, const Tensor& y, Rng& rng,
                                  int sample_count = 1);
ElboEstimate elbo_forward_unlabeled(const ModelConfig& config, const ParamSet& params,
                                    const Tensor& x, Rng& rng, int sample_count = 1);
ElboEstimate elbo_reverse_labeled(const ModelConfig& config, const ParamSet& params,
                                  const Tensor& x, const Tensor& y, Rng& rng,
                                  int sample_count = 1);
ElboEstimate elbo_reverse_unfeatured(const ModelConfig& config, const ParamSet& params,
                                     const Tensor& y, const Tensor* z_observed,
                                     UnfeaturedVariant variant, Rng& rng, int sample_count = 1);
double aux_consistency_kl(const ModelConfig& config, const ParamSet& params, const Tensor& y,
                          int sample_count, Rng& rng);
std::pair<double, double> discriminative_losses(const ModelConfig& config, const ParamSet& params,
                                                const Tensor& x, const Tensor& y, Rng& rng);

/// One training batch: labeled pairs, bare observations, unfeatured labels
/// (optionally with an observed nuisance).
struct MiniBatch {
    struct UnfeaturedItem {
        Tensor y;
        std::optional<Tensor> z;
    };
    std::vector<std::pair<Tensor, Tensor>> labeled;
    std::vector<Tensor> unlabeled_x;
    std::vector<UnfeaturedItem> unfeatured;
    bool empty() const { return labeled.empty() && unlabeled_x.empty() && unfeatured.empty(); }
};

/// Per-kind means recorded alongside the combined objective.
struct ObjectiveMetrics {
    double j = 0.0;
    double elbo_fxy = 0.0;
    double elbo_fx = 0.0;
    double elbo_rxy = 0.0;
    double elbo_ry = 0.0;
    double loss_y = 0.0;
    double loss_x = 0.0;
    std::size_t n_labeled = 0;
    std::size_t n_unlabeled = 0;
    std::size_t n_unfeatured = 0;
    bool empty_batch_warning = false;
};

struct TotalObjectiveVars {
    Var j;
    ObjectiveMetrics metrics;
};

/// alpha_f*(sum fwd bounds) - alpha_f_d*(mean loss_y) + alpha_r*(sum rev
/// bounds) - alpha_r_d*(mean loss_x), accumulated per sample in the training
/// loop's order with one Monte Carlo draw per item. The labeled reverse
/// bound shares its prior draw with the discriminative reconstruction.
/// Terms with a zero coefficient are skipped entirely.
TotalObjectiveVars total_objective_g(Tape& tape, const ModelConfig& config,
                                     const ParamVars& params, const MiniBatch& batch,
                                     const ObjectiveCoefficients& coeffs,
                                     UnfeaturedVariant variant, Rng& rng);

double total_objective(const ModelConfig& config, const ParamSet& params, const MiniBatch& batch,
                       const ObjectiveCoefficients& coeffs, UnfeaturedVariant variant, Rng& rng,
                       ObjectiveMetrics* metrics_out = nullptr);

} // namespace uvae
