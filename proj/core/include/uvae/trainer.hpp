#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "uvae/objectives.hpp"

namespace uvae {

/// Adam moment accumulators plus the clip bounds applied to raw gradients
/// before the moments see them.
struct OptimizerState {
    ParamSet m;
    ParamSet v;
    std::size_t step = 0;
    double learning_rate = 0.003;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-4;
    double clip_lo = -1.0;
    double clip_hi = 1.0;
};

OptimizerState make_optimizer_state(const ParamSet& params, double learning_rate);

/// One Adam step on already-negated gradients: each component is clipped
/// into [clip_lo, clip_hi] first, then folded into the bias-corrected
/// moments; the increment is -lr * m_hat / (sqrt(v_hat) + eps).
std::pair<OptimizerState, ParamSet> adam_update(const OptimizerState& state,
                                                const ParamSet& grads);

struct TrainConfig {
    std::size_t batch_size = 100;
    std::size_t epochs = 100;
    double learning_rate = 0.003;
    ObjectiveCoefficients coeffs;
    UnfeaturedVariant variant = UnfeaturedVariant::ObservedZ;
    std::uint64_t seed = 1;
    std::size_t log_every = 1;        // record metrics every N steps
    std::size_t checkpoint_every = 0; // 0 disables intermediate checkpoints
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-4;
    double clip_lo = -1.0;
    double clip_hi = 1.0;
    double divergence_ceiling = 1e12;
    void validate() const;
};

struct StepResult {
    ParamSet params;
    OptimizerState state;
    ObjectiveMetrics metrics;
};

/// Builds the combined objective on the batch, backpropagates, negates,
/// clips, and applies Adam. Aborts with NumericError on non-finite
/// gradients.
StepResult train_step(const ModelConfig& model, const MiniBatch& batch, const ParamSet& params,
                      const OptimizerState& state, const ObjectiveCoefficients& coeffs,
                      UnfeaturedVariant variant, Rng& rng);

struct MetricRow {
    std::size_t step = 0;
    std::size_t epoch = 0;
    ObjectiveMetrics metrics;
};

struct TrainResult {
    ParamSet params;
    std::vector<MetricRow> log;
};

using CheckpointSink = std::function<void(std::size_t step, const ParamSet&)>;

/// Epoch-shuffled training over the dataset splits. Every batch draws
/// batch_size items from each non-empty sub-collection, cycling and
/// reshuffling the smaller ones; an epoch is one pass over the labeled
/// collection (or the first non-empty one). Aborts if the objective goes
/// non-finite or exceeds the divergence ceiling for 10 consecutive logs.
TrainResult run_training(const ModelConfig& model, const TrainConfig& config,
                         const struct Dataset& data, const CheckpointSink& checkpoint = {});

/// CSV header shared by the metric log writers.
inline constexpr const char* kMetricCsvHeader =
    "step,epoch,J,elbo_fxy,elbo_fx,elbo_rxy,elbo_ry,loss_y,loss_x";

std::string metric_row_to_csv(const MetricRow& row);

} // namespace uvae
