#include "uvae/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "uvae/errors.hpp"
#include "uvae/linalg.hpp"
#include "uvae/pgm.hpp"

namespace uvae {

using nlohmann::json;

void save_metric_report(const std::string& path, const MetricReport& report) {
    json j;
    j["metrics"] = report.metrics;
    json items = json::array();
    for (const auto& item : report.per_item) items.push_back(item);
    j["per_item"] = items;
    if (!report.config_summary.empty()) {
        j["config"] = json::parse(report.config_summary, nullptr, false);
        if (j["config"].is_discarded()) j["config"] = report.config_summary;
    } else {
        j["config"] = json::object();
    }
    j["seed"] = report.seed;
    std::ofstream os(path);
    if (!os) throw NumericError("cannot open for writing: " + path);
    os << j.dump(2) << "\n";
}

double composition_kl(const std::vector<Tensor>& pred, const std::vector<Tensor>& truth) {
    if (pred.size() != truth.size()) throw ContractError("composition_kl: length mismatch");
    if (pred.empty()) throw ContractError("composition_kl: empty lists");
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        total += kl_categorical(truth[i], pred[i]);
    }
    return total / static_cast<double>(pred.size());
}

ZPolicy z_policy_from_string(const std::string& name) {
    if (name == "prior_mean") return ZPolicy::PriorMean;
    if (name == "dataset_mean") return ZPolicy::DatasetMean;
    throw ConfigError("unknown z policy: " + name);
}

Tensor dataset_mean_z(const ModelConfig& config, const ParamSet& params, const Dataset& data) {
    if (data.labeled.empty()) throw ContractError("dataset_mean_z: no labeled pairs");
    Tensor acc = Tensor::zeros({config.z_dim});
    for (const auto& [x, y] : data.labeled) {
        Tensor m = dist_mean(encode_z(config, params, x, y));
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += m[i];
    }
    for (double& v : acc.data) v /= static_cast<double>(data.labeled.size());
    return acc;
}

EndmemberReport endmember_error(const ModelConfig& config, const ParamSet& params,
                                const std::vector<Tensor>& true_signatures,
                                const StandardizationRecord& standardization, ZPolicy z_policy,
                                const Dataset* data_for_z) {
    if (true_signatures.size() != config.y_dim) {
        throw ContractError("endmember_error: signature count != y_dim");
    }
    Tensor z_cond;
    if (z_policy == ZPolicy::DatasetMean) {
        if (data_for_z == nullptr) {
            throw ContractError("endmember_error: dataset_mean policy needs a dataset");
        }
        z_cond = dataset_mean_z(config, params, *data_for_z);
    } else {
        z_cond = Tensor::full({config.z_dim}, 0.5 * (config.z_lo + config.z_hi));
    }

    EndmemberReport report;
    Rng unused(0);
    for (std::size_t k = 0; k < config.y_dim; ++k) {
        Tensor corner = Tensor::zeros({config.y_dim});
        corner[k] = 1.0;
        Tensor x_bar = generate_conditional(config, params, corner, z_cond, GenerateMode::Mean,
                                            unused);
        if (standardization.applied) x_bar = standardization.invert(x_bar);
        double err = 0.0;
        for (std::size_t c = 0; c < x_bar.size(); ++c) {
            double d = x_bar[c] - true_signatures[k][c];
            err += d * d;
        }
        report.per_endmember.push_back(std::sqrt(err));
        report.mean += report.per_endmember.back();
    }
    report.mean /= static_cast<double>(config.y_dim);
    return report;
}

void digit_grid(const ModelConfig& config, const ParamSet& params, const Tensor& z_condition,
                GenerateMode mode, std::size_t columns, std::uint64_t seed,
                const std::string& path) {
    std::size_t side = static_cast<std::size_t>(std::lround(std::sqrt(
        static_cast<double>(config.x_dim))));
    if (side * side != config.x_dim) {
        throw ContractError("digit_grid: x_dim is not a square image");
    }
    if (columns == 0) throw ContractError("digit_grid: columns must be positive");
    std::size_t rows = config.y_dim;
    Tensor grid = Tensor::zeros({rows * side, columns * side});
    Rng rng(seed);
    for (std::size_t k = 0; k < rows; ++k) {
        Tensor one_hot = Tensor::zeros({config.y_dim});
        one_hot[k] = 1.0;
        for (std::size_t col = 0; col < columns; ++col) {
            Tensor img = generate_conditional(config, params, one_hot, z_condition, mode, rng);
            for (std::size_t r = 0; r < side; ++r) {
                for (std::size_t c = 0; c < side; ++c) {
                    double v = std::min(std::max(img[r * side + c], 0.0), 1.0);
                    grid.data[(k * side + r) * (columns * side) + col * side + c] = v;
                }
            }
        }
    }
    write_pgm(path, rows * side, columns * side, grid);
}

namespace {

double median_of(std::vector<double> values) {
    if (values.empty()) throw ContractError("median of empty set");
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

} // namespace

NuisanceReport nuisance_analysis(const ModelConfig& config, const ParamSet& params,
                                 const SampleTable& table,
                                 const StandardizationRecord& standardization) {
    if (table.rows.empty()) throw ContractError("nuisance_analysis: empty table");
    NuisanceReport report;
    Rng rng(0);

    std::map<std::size_t, std::vector<double>> by_config;
    std::vector<Tensor> raw_rows;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const SampleRow& row = table.rows[i];
        Tensor x = standardization.applied ? standardization.apply(row.x) : row.x;
        Tensor z = infer_nuisance(config, params, x, &row.abundance, rng, /*use_mean=*/true);
        NuisanceReport::ItemStats item;
        item.row = i;
        item.config_id = row.config_id;
        item.z = z[0];
        item.truth_corrupted = row.corrupted;
        report.items.push_back(item);
        by_config[row.config_id].push_back(z[0]);
        raw_rows.push_back(row.x);
    }

    std::map<std::size_t, std::pair<double, double>> stats;  // config -> (median, mad)
    for (const auto& [cfg, zs] : by_config) {
        double med = median_of(zs);
        std::vector<double> dev;
        dev.reserve(zs.size());
        for (double z : zs) dev.push_back(std::abs(z - med));
        double mad = median_of(dev);
        stats[cfg] = {med, mad};
        report.per_config.push_back(NuisanceReport::ConfigStats{cfg, med, mad, zs.size()});
    }

    std::vector<Tensor> projected = pca_project(raw_rows, 3);
    for (std::size_t i = 0; i < report.items.size(); ++i) {
        auto& item = report.items[i];
        auto [med, mad] = stats.at(item.config_id);
        item.flagged = std::abs(item.z - med) > 5.0 * mad;
        item.pc1 = projected[i].size() > 0 ? projected[i][0] : 0.0;
        item.pc2 = projected[i].size() > 1 ? projected[i][1] : 0.0;
        item.pc3 = projected[i].size() > 2 ? projected[i][2] : 0.0;
    }
    return report;
}

MetricReport nuisance_to_metric_report(const NuisanceReport& report) {
    MetricReport out;
    for (const auto& cfg : report.per_config) {
        std::string base = "config_" + std::to_string(cfg.config_id);
        out.metrics[base + "_median"] = cfg.median;
        out.metrics[base + "_mad"] = cfg.mad;
        out.metrics[base + "_count"] = static_cast<double>(cfg.count);
    }
    std::size_t flagged = 0;
    for (const auto& item : report.items) {
        std::map<std::string, double> row;
        row["row"] = static_cast<double>(item.row);
        row["config"] = static_cast<double>(item.config_id);
        row["z"] = item.z;
        row["flagged"] = item.flagged ? 1.0 : 0.0;
        row["truth_corrupted"] = item.truth_corrupted ? 1.0 : 0.0;
        row["pc1"] = item.pc1;
        row["pc2"] = item.pc2;
        row["pc3"] = item.pc3;
        out.per_item.push_back(std::move(row));
        if (item.flagged) ++flagged;
    }
    out.metrics["flagged_count"] = static_cast<double>(flagged);
    return out;
}

MetricReport grouped_leave_p_out(const SampleTable& table,
                                 const std::set<std::size_t>& train_groups,
                                 const std::set<std::size_t>& eval_groups,
                                 const TrainRunner& runner, const LpoOptions& options) {
    for (std::size_t g : train_groups) {
        if (eval_groups.count(g)) {
            throw ContractError("grouped_leave_p_out: train and eval groups overlap (group " +
                                std::to_string(g) + ")");
        }
    }

    Dataset train;
    std::size_t n_train = 0, n_eval = 0;
    for (const SampleRow& row : table.rows) {
        if (train_groups.count(row.group_id)) {
            train.labeled.push_back({row.x, row.abundance});
            train.unlabeled_x.push_back(row.x);
            ++n_train;
        } else if (eval_groups.count(row.group_id)) {
            ++n_eval;
        }
    }
    if (n_train == 0 || n_eval == 0) {
        throw ContractError("grouped_leave_p_out: empty train or eval selection");
    }
    Rng rng(derive_seed(options.seed, "lpo_unfeatured"));
    for (std::size_t i = 0; i < options.unfeatured_count; ++i) {
        Dataset::UnfeaturedItem item;
        DistSpec simplex = DistSpec::simplex_uniform(table.spec.endmembers);
        item.y = rsample(simplex, draw_uniform(rng, table.spec.endmembers, 0.0, 1.0));
        if (options.z_prior.attach) {
            item.z = rng.uniform_vec(options.z_prior.dim, options.z_prior.lo, options.z_prior.hi);
        }
        train.unfeatured.push_back(std::move(item));
    }

    Predictor predict = runner(train);

    std::vector<Tensor> preds, truths;
    MetricReport report;
    for (const SampleRow& row : table.rows) {
        if (!eval_groups.count(row.group_id)) continue;
        Tensor y_hat = predict(row.x);
        double kl = kl_categorical(row.abundance, y_hat);
        std::map<std::string, double> item;
        item["group"] = static_cast<double>(row.group_id);
        item["kl"] = kl;
        report.per_item.push_back(std::move(item));
        preds.push_back(std::move(y_hat));
        truths.push_back(row.abundance);
    }
    report.metrics["kl"] = composition_kl(preds, truths);
    report.metrics["n_train"] = static_cast<double>(n_train);
    report.metrics["n_eval"] = static_cast<double>(n_eval);
    report.metrics["train_eval_disjoint"] = 1.0;
    report.seed = options.seed;
    return report;
}

} // namespace uvae
