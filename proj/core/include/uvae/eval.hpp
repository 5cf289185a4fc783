#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "uvae/data.hpp"
#include "uvae/model.hpp"

namespace uvae {

/// Named scalars plus a per-item breakdown, with config/seed provenance.
struct MetricReport {
    std::map<std::string, double> metrics;
    std::vector<std::map<std::string, double>> per_item;
    std::string config_summary;
    std::uint64_t seed = 0;
};

void save_metric_report(const std::string& path, const MetricReport& report);

/// Mean kl_categorical(truth || prediction) over paired lists.
double composition_kl(const std::vector<Tensor>& pred, const std::vector<Tensor>& truth);

enum class ZPolicy : unsigned char { PriorMean, DatasetMean };
ZPolicy z_policy_from_string(const std::string& name);

/// Mean of the nuisance posterior over the labeled pairs (the conditioning
/// rule generation uses when a dataset is available).
Tensor dataset_mean_z(const ModelConfig& config, const ParamSet& params, const Dataset& data);

struct EndmemberReport {
    std::vector<double> per_endmember;
    double mean = 0.0;
};

/// L2 error between decoder means at the simplex corners and the true
/// signatures, in original (de-standardized) units.
EndmemberReport endmember_error(const ModelConfig& config, const ParamSet& params,
                                const std::vector<Tensor>& true_signatures,
                                const StandardizationRecord& standardization, ZPolicy z_policy,
                                const Dataset* data_for_z);

/// Rows of decoder outputs conditioned on each one-hot, written as a binary
/// PGM grid (rows x columns of side x side tiles).
void digit_grid(const ModelConfig& config, const ParamSet& params, const Tensor& z_condition,
                GenerateMode mode, std::size_t columns, std::uint64_t seed,
                const std::string& path);

struct NuisanceReport {
    struct ConfigStats {
        std::size_t config_id = 0;
        double median = 0.0;
        double mad = 0.0;
        std::size_t count = 0;
    };
    struct ItemStats {
        std::size_t row = 0;
        std::size_t config_id = 0;
        double z = 0.0;
        bool flagged = false;
        bool truth_corrupted = false;
        double pc1 = 0.0, pc2 = 0.0, pc3 = 0.0;
    };
    std::vector<ConfigStats> per_config;
    std::vector<ItemStats> items;
};

/// Posterior-mean nuisance per row (first coordinate), grouped by
/// acquisition configuration: medians, MADs, 5-MAD outlier flags, and the
/// top-3 principal-component projection of the raw spectra.
NuisanceReport nuisance_analysis(const ModelConfig& config, const ParamSet& params,
                                 const SampleTable& table,
                                 const StandardizationRecord& standardization);

MetricReport nuisance_to_metric_report(const NuisanceReport& report);

/// Predictor over raw (original-unit) observations.
using Predictor = std::function<Tensor(const Tensor&)>;
/// Trains on a dataset and returns a predictor; everything the runner does
/// with standardization is its own business.
using TrainRunner = std::function<Predictor(const Dataset&)>;

struct LpoOptions {
    std::size_t unfeatured_count = 200;
    ZPrior z_prior;
    std::uint64_t seed = 1;
};

/// Grouped leave-p-out: the runner sees only train-group rows (labeled and
/// unlabeled alike); composition KL is scored on the held-out groups.
MetricReport grouped_leave_p_out(const SampleTable& table, const std::set<std::size_t>& train_groups,
                                 const std::set<std::size_t>& eval_groups,
                                 const TrainRunner& runner, const LpoOptions& options);

} // namespace uvae
