#include "uvae/trainer.hpp"

#include <cmath>
#include <cstdio>

#include "uvae/data.hpp"
#include "uvae/errors.hpp"

namespace uvae {

void TrainConfig::validate() const {
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (epochs == 0) throw ConfigError("epochs must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (log_every == 0) throw ConfigError("log_every must be positive");
    if (!(clip_lo < clip_hi)) throw ConfigError("clip bounds require lo < hi");
    coeffs.validate();
}

OptimizerState make_optimizer_state(const ParamSet& params, double learning_rate) {
    OptimizerState state;
    state.learning_rate = learning_rate;
    for (const auto& [name, value] : params.values) {
        state.m.insert(name, Tensor::zeros(value.shape), params.partition.at(name));
        state.v.insert(name, Tensor::zeros(value.shape), params.partition.at(name));
    }
    return state;
}

std::pair<OptimizerState, ParamSet> adam_update(const OptimizerState& state,
                                                const ParamSet& grads) {
    OptimizerState next = state;
    next.step = state.step + 1;
    double t = static_cast<double>(next.step);
    double bc1 = 1.0 - std::pow(next.beta1, t);
    double bc2 = 1.0 - std::pow(next.beta2, t);

    ParamSet increment;
    for (const auto& [name, g] : grads.values) {
        if (!g.all_finite()) {
            throw NumericError("adam_update: non-finite gradient for parameter '" + name + "'");
        }
        Tensor& m = next.m.values.at(name);
        Tensor& v = next.v.values.at(name);
        Tensor inc = Tensor::zeros(g.shape);
        for (std::size_t i = 0; i < g.size(); ++i) {
            // Clip the raw component before it reaches the moments.
            double gi = std::min(std::max(g[i], state.clip_lo), state.clip_hi);
            m[i] = next.beta1 * m[i] + (1.0 - next.beta1) * gi;
            v[i] = next.beta2 * v[i] + (1.0 - next.beta2) * gi * gi;
            double m_hat = m[i] / bc1;
            double v_hat = v[i] / bc2;
            inc[i] = -state.learning_rate * m_hat / (std::sqrt(v_hat) + state.eps_adam);
        }
        increment.insert(name, std::move(inc), grads.partition.at(name));
    }
    return {std::move(next), std::move(increment)};
}

StepResult train_step(const ModelConfig& model, const MiniBatch& batch, const ParamSet& params,
                      const OptimizerState& state, const ObjectiveCoefficients& coeffs,
                      UnfeaturedVariant variant, Rng& rng) {
    Tape tape;
    ParamVars vars = bind_params(tape, params);
    TotalObjectiveVars total = total_objective_g(tape, model, vars, batch, coeffs, variant, rng);

    StepResult result;
    result.metrics = total.metrics;

    bool constant_objective = batch.empty() || (coeffs.alpha_f == 0.0 && coeffs.alpha_f_d == 0.0 &&
                                                coeffs.alpha_r == 0.0 && coeffs.alpha_r_d == 0.0);
    if (constant_objective) {
        // Zero gradient: parameters must come through bit-identical.
        result.params = params;
        result.state = state;
        result.state.step = state.step + 1;
        return result;
    }

    tape.backward(total.j);
    ParamSet grads = collect_gradients(tape, vars, params);
    // Ascent on the objective: the optimizer consumes -dJ/dp.
    for (auto& [name, g] : grads.values) {
        for (double& v : g.data) v = -v;
    }
    auto [next_state, increment] = adam_update(state, grads);
    result.state = std::move(next_state);
    result.params = params;
    for (auto& [name, p] : result.params.values) {
        const Tensor& inc = increment.values.at(name);
        for (std::size_t i = 0; i < p.size(); ++i) p[i] += inc[i];
    }
    return result;
}

std::string metric_row_to_csv(const MetricRow& row) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                  row.step, row.epoch, row.metrics.j, row.metrics.elbo_fxy, row.metrics.elbo_fx,
                  row.metrics.elbo_rxy, row.metrics.elbo_ry, row.metrics.loss_y,
                  row.metrics.loss_x);
    return std::string(buf);
}

TrainResult run_training(const ModelConfig& model, const TrainConfig& config, const Dataset& data,
                         const CheckpointSink& checkpoint) {
    config.validate();
    if (data.labeled.empty() && data.unlabeled_x.empty() && data.unfeatured.empty()) {
        throw ContractError("run_training: all dataset sub-collections are empty");
    }

    ParamSet params = init_params(model, config.seed);
    OptimizerState state = make_optimizer_state(params, config.learning_rate);
    state.beta1 = config.beta1;
    state.beta2 = config.beta2;
    state.eps_adam = config.eps_adam;
    state.clip_lo = config.clip_lo;
    state.clip_hi = config.clip_hi;

    Batcher batcher(data, config.batch_size, derive_seed(config.seed, "batcher"));
    Rng noise(derive_seed(config.seed, "noise"));

    TrainResult result;
    std::size_t step = 0;
    std::size_t divergent_logs = 0;
    std::size_t per_epoch = batcher.batches_per_epoch();

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        for (std::size_t b = 0; b < per_epoch; ++b) {
            MiniBatch batch = batcher.next_batch();
            StepResult sr =
                train_step(model, batch, params, state, config.coeffs, config.variant, noise);
            params = std::move(sr.params);
            state = std::move(sr.state);
            ++step;

            if (step % config.log_every == 0) {
                result.log.push_back(MetricRow{step, epoch, sr.metrics});
                if (!std::isfinite(sr.metrics.j)) {
                    throw NumericError("training diverged: non-finite objective at step " +
                                       std::to_string(step));
                }
                divergent_logs =
                    std::abs(sr.metrics.j) > config.divergence_ceiling ? divergent_logs + 1 : 0;
                if (divergent_logs >= 10) {
                    throw NumericError("training diverged: |J| above ceiling for 10 consecutive "
                                       "logs, last step " +
                                       std::to_string(step));
                }
            }
            if (config.checkpoint_every != 0 && checkpoint && step % config.checkpoint_every == 0) {
                checkpoint(step, params);
            }
        }
    }
    result.params = std::move(params);
    return result;
}

} // namespace uvae
