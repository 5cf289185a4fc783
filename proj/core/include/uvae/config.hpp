#pragma once

#include <string>

#include "uvae/data.hpp"
#include "uvae/eval.hpp"
#include "uvae/model.hpp"
#include "uvae/trainer.hpp"

namespace uvae {

struct DataConfig {
    MixtureSpec mixture;
    double corner_radius = 0.15;
    SplitCounts counts;
    bool standardize = true;
};

struct EvalConfig {
    std::size_t grid_columns = 8;
    ZPolicy z_policy = ZPolicy::DatasetMean;
};

/// One experiment run: a single seed feeding data generation, weight
/// initialization, batching and sampling noise, plus the four config
/// sections a run file carries.
struct ExperimentConfig {
    std::uint64_t seed = 1;
    ModelConfig model;
    TrainConfig train;
    DataConfig data;
    EvalConfig eval;

    void validate() const;
};

/// Strict parse: unknown fields are a ConfigError naming the field.
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json_text(const ExperimentConfig& config);

/// Dotted-path override, e.g. ("train.learning_rate", "0.003").
void apply_override(ExperimentConfig& config, const std::string& dotted_key,
                    const std::string& value);

/// One line per config field, for --help output.
std::string config_field_docs();

} // namespace uvae
