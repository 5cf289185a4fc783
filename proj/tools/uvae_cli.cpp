#include "uvae_cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"
#include "uvae/config.hpp"
#include "uvae/csv.hpp"
#include "uvae/digits.hpp"
#include "uvae/errors.hpp"
#include "uvae/idx.hpp"
#include "uvae/pls.hpp"
#include "uvae/sha256.hpp"

namespace uvae::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string iso_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

/// Run bookkeeping: inputs, outputs with content digests, timestamps.
class Manifest {
public:
    Manifest(std::string command, std::string out_dir)
        : command_(std::move(command)), out_dir_(std::move(out_dir)), started_(iso_now()) {}

    void set_config(const std::string& path, const ExperimentConfig& config) {
        config_path_ = path;
        resolved_config_ = config_to_json_text(config);
        seed_ = config.seed;
    }
    void add_input(const std::string& path) { inputs_.push_back(path); }
    void add_output(const std::string& path) { outputs_.push_back(path); }

    void write() const {
        json j;
        j["command"] = command_;
        j["config_path"] = config_path_;
        if (!resolved_config_.empty()) j["config"] = json::parse(resolved_config_);
        j["seed"] = seed_;
        j["inputs"] = inputs_;
        json outs = json::array();
        for (const std::string& path : outputs_) {
            json o;
            o["path"] = path;
            o["sha256"] = sha256_file(path);
            o["bytes"] = fs::file_size(path);
            outs.push_back(o);
        }
        j["outputs"] = outs;
        j["started_at"] = started_;
        j["finished_at"] = iso_now();
        std::ofstream os(out_dir_ + "/manifest.json");
        if (!os) throw NumericError("cannot write manifest in " + out_dir_);
        os << j.dump(2) << "\n";
    }

private:
    std::string command_, out_dir_, config_path_, resolved_config_, started_;
    std::uint64_t seed_ = 0;
    std::vector<std::string> inputs_, outputs_;
};

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed_flag;
    std::string ablation;
    std::vector<std::string> extras;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true) {
    auto* c = cmd->add_option("--config", opts.config_path, "experiment config JSON");
    if (config_required) c->required();
    cmd->add_option("--seed", opts.seed_flag,
                    "seed override (precedence: flag > UVAE_SEED > config)");
    cmd->add_option("--ablation", opts.ablation, "named ablation: m2 (zero alpha_r)");
    cmd->allow_extras();
    cmd->footer("Config fields (override with --<section>.<field> <value>):\n" +
                config_field_docs());
}

ExperimentConfig resolve_config(const CLI::App* cmd, CommonOpts& opts) {
    ExperimentConfig config =
        opts.config_path.empty() ? ExperimentConfig{} : load_config(opts.config_path);
    opts.extras = cmd->remaining();
    for (std::size_t i = 0; i < opts.extras.size(); ++i) {
        std::string key = opts.extras[i];
        if (key.rfind("--", 0) != 0 || key.find('.') == std::string::npos) {
            throw ConfigError("unrecognized argument: " + key);
        }
        if (i + 1 >= opts.extras.size()) throw ConfigError("missing value for " + key);
        apply_override(config, key.substr(2), opts.extras[++i]);
    }
    if (const char* env = std::getenv("UVAE_SEED")) {
        config.seed = static_cast<std::uint64_t>(std::stoull(env));
    }
    if (opts.seed_flag) config.seed = *opts.seed_flag;
    config.train.seed = config.seed;
    if (opts.ablation == "m2") {
        config.train.coeffs.alpha_r = 0.0;
    } else if (!opts.ablation.empty()) {
        throw ConfigError("unknown ablation: " + opts.ablation);
    }
    config.validate();
    return config;
}

ZPrior z_prior_for(const ExperimentConfig& config) {
    ZPrior zp;
    zp.dim = config.model.z_dim;
    zp.lo = config.model.z_lo;
    zp.hi = config.model.z_hi;
    zp.attach = config.train.variant == UnfeaturedVariant::ObservedZ;
    return zp;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& log) {
    std::ofstream os(path);
    if (!os) throw NumericError("cannot open for writing: " + path);
    os << kMetricCsvHeader << "\n";
    for (const MetricRow& row : log) os << metric_row_to_csv(row) << "\n";
}

/// Validation rows (x plus true composition) from the labeled.csv layout.
std::vector<std::pair<Tensor, Tensor>> read_pair_csv(const std::string& path, std::size_t x_dim,
                                                     std::size_t y_dim) {
    CsvTable t = read_csv(path);
    if (t.header.size() != x_dim + y_dim) {
        throw ParseError("pair csv width mismatch in " + path, 0);
    }
    std::vector<std::pair<Tensor, Tensor>> rows;
    for (const auto& row : t.rows) {
        Tensor x = Tensor::zeros({x_dim});
        Tensor y = Tensor::zeros({y_dim});
        std::copy(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(x_dim), x.data.begin());
        std::copy(row.begin() + static_cast<std::ptrdiff_t>(x_dim), row.end(), y.data.begin());
        rows.push_back({std::move(x), std::move(y)});
    }
    return rows;
}

int cmd_synth(const CommonOpts& opts_in, const CLI::App* cmd, const std::string& out) {
    CommonOpts opts = opts_in;
    ExperimentConfig config = resolve_config(cmd, opts);
    fs::create_directories(out);
    Manifest manifest("synth", out);
    manifest.set_config(opts.config_path, config);

    SampleTable table = generate_synthetic_mixtures(config.data.mixture, config.seed);
    SplitResult split = make_simplex_split(table, config.data.corner_radius, config.data.counts,
                                           config.seed, z_prior_for(config));
    DatasetMeta meta;
    meta.seed = config.seed;
    meta.spec = table.spec;
    meta.has_spec = true;
    meta.labeled_rows = split.labeled_rows;
    meta.unlabeled_rows = split.unlabeled_rows;
    meta.x_dim = config.data.mixture.channels;
    meta.y_dim = config.data.mixture.endmembers;
    meta.z_dim = config.model.z_dim;
    if (config.data.standardize) {
        meta.standardization = standardize(split.dataset);
        if (!meta.standardization.zero_variance_channels.empty()) {
            std::cerr << "warning: " << meta.standardization.zero_variance_channels.size()
                      << " zero-variance channels kept at scale 1\n";
        }
    }
    split.dataset.validate(config.model.z_lo, config.model.z_hi);
    save_dataset(out, split.dataset, meta);
    save_sample_table(out + "/samples.csv", table);
    for (const char* f : {"/labeled.csv", "/unlabeled.csv", "/unfeatured.csv", "/meta.json",
                          "/samples.csv"}) {
        manifest.add_output(out + f);
    }
    manifest.write();
    std::cout << "synth: " << table.rows.size() << " rows, " << split.dataset.labeled.size()
              << " labeled / " << split.dataset.unlabeled_x.size() << " unlabeled / "
              << split.dataset.unfeatured.size() << " unfeatured -> " << out << "\n";
    return 0;
}

int cmd_train(const CommonOpts& opts_in, const CLI::App* cmd, const std::string& data_dir,
              const std::string& out) {
    CommonOpts opts = opts_in;
    ExperimentConfig config = resolve_config(cmd, opts);
    fs::create_directories(out);
    Manifest manifest("train", out);
    manifest.set_config(opts.config_path, config);
    manifest.add_input(data_dir);

    DatasetMeta meta;
    Dataset data = load_dataset(data_dir, &meta);
    if (meta.x_dim != config.model.x_dim || meta.y_dim != config.model.y_dim) {
        throw ConfigError("model dims (" + std::to_string(config.model.x_dim) + "," +
                          std::to_string(config.model.y_dim) + ") do not match dataset (" +
                          std::to_string(meta.x_dim) + "," + std::to_string(meta.y_dim) + ")");
    }
    CheckpointSink sink;
    if (config.train.checkpoint_every != 0) {
        sink = [&](std::size_t step, const ParamSet& params) {
            save_param_set(out + "/checkpoint_" + std::to_string(step) + ".bin", params);
        };
    }
    TrainResult result = run_training(config.model, config.train, data, sink);
    save_param_set(out + "/checkpoint.bin", result.params);
    write_metrics_csv(out + "/metrics.csv", result.log);
    {
        std::ofstream os(out + "/model.json");
        json full = json::parse(config_to_json_text(config));
        os << full["model"].dump(2) << "\n";
    }
    manifest.add_output(out + "/checkpoint.bin");
    manifest.add_output(out + "/metrics.csv");
    manifest.add_output(out + "/model.json");
    manifest.write();
    double last_j = result.log.empty() ? 0.0 : result.log.back().metrics.j;
    std::cout << "train: " << result.log.size() << " logged steps, final J " << last_j << " -> "
              << out << "\n";
    return 0;
}

/// Composition predictions for raw observations through the standardization
/// recorded with the dataset.
Predictor model_predictor(const ExperimentConfig& config, const ParamSet& params,
                          const StandardizationRecord& standardization) {
    ModelConfig model = config.model;
    StandardizationRecord rec = standardization;
    ParamSet p = params;
    return [model, rec, p](const Tensor& x_raw) {
        Tensor x = rec.applied ? rec.apply(x_raw) : x_raw;
        return dist_mean(encode_y(model, p, x));
    };
}

int cmd_eval(const CommonOpts& opts_in, const CLI::App* cmd, const std::string& data_dir,
             const std::string& checkpoint, const std::string& out, const std::string& grid_path,
             const std::string& grid_mode, bool nuisance) {
    CommonOpts opts = opts_in;
    ExperimentConfig config = resolve_config(cmd, opts);
    fs::create_directories(out);
    Manifest manifest("eval", out);
    manifest.set_config(opts.config_path, config);
    manifest.add_input(data_dir);
    manifest.add_input(checkpoint);

    DatasetMeta meta;
    Dataset data = load_dataset(data_dir, &meta);
    ParamSet params = load_param_set(checkpoint);
    assign_partitions(params);
    Predictor predict = model_predictor(config, params, meta.standardization);

    MetricReport report;
    report.config_summary = config_to_json_text(config);
    report.seed = config.seed;

    std::vector<Tensor> preds, truths;
    std::string val_path = data_dir + "/val.csv";
    if (fs::exists(val_path)) {
        for (const auto& [x, y] : read_pair_csv(val_path, meta.x_dim, meta.y_dim)) {
            preds.push_back(predict(x));
            truths.push_back(y);
        }
        report.metrics["val_rows"] = static_cast<double>(preds.size());
    } else if (fs::exists(data_dir + "/samples.csv")) {
        SampleTable table = load_sample_table(data_dir + "/samples.csv");
        std::set<std::size_t> train_rows(meta.labeled_rows.begin(), meta.labeled_rows.end());
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            if (train_rows.count(i) || table.rows[i].corrupted) continue;
            preds.push_back(predict(table.rows[i].x));
            truths.push_back(table.rows[i].abundance);
        }
        report.metrics["holdout_rows"] = static_cast<double>(preds.size());
    } else {
        throw ConfigError("eval: no val.csv or samples.csv next to the dataset");
    }
    report.metrics["composition_kl"] = composition_kl(preds, truths);

    save_metric_report(out + "/metrics.json", report);
    manifest.add_output(out + "/metrics.json");

    if (!grid_path.empty()) {
        Tensor z_cond = config.eval.z_policy == ZPolicy::DatasetMean
                            ? dataset_mean_z(config.model, params, data)
                            : Tensor::full({config.model.z_dim},
                                           0.5 * (config.model.z_lo + config.model.z_hi));
        GenerateMode mode = grid_mode == "sample" ? GenerateMode::Sample : GenerateMode::Mean;
        digit_grid(config.model, params, z_cond, mode, config.eval.grid_columns, config.seed,
                   out + "/" + grid_path);
        manifest.add_output(out + "/" + grid_path);
    }
    if (nuisance) {
        SampleTable table = load_sample_table(data_dir + "/samples.csv");
        NuisanceReport nr = nuisance_analysis(config.model, params, table, meta.standardization);
        MetricReport nm = nuisance_to_metric_report(nr);
        nm.config_summary = report.config_summary;
        nm.seed = config.seed;
        save_metric_report(out + "/nuisance.json", nm);
        std::vector<std::vector<double>> flagged;
        for (const auto& item : nr.items) {
            if (!item.flagged) continue;
            flagged.push_back({static_cast<double>(item.row), static_cast<double>(item.config_id),
                               item.z, item.pc1, item.pc2, item.pc3});
        }
        write_csv(out + "/flagged.csv", {"row", "config", "z", "pc1", "pc2", "pc3"}, flagged);
        manifest.add_output(out + "/nuisance.json");
        manifest.add_output(out + "/flagged.csv");
    }
    manifest.write();
    std::cout << "eval: composition_kl " << report.metrics["composition_kl"] << " -> " << out
              << "\n";
    return 0;
}

int cmd_unmix(const CommonOpts& opts_in, const CLI::App* cmd, const std::string& data_dir,
              const std::string& checkpoint, const std::string& out) {
    CommonOpts opts = opts_in;
    ExperimentConfig config = resolve_config(cmd, opts);
    fs::create_directories(out);
    Manifest manifest("unmix", out);
    manifest.set_config(opts.config_path, config);
    manifest.add_input(data_dir);
    manifest.add_input(checkpoint);

    DatasetMeta meta;
    Dataset data = load_dataset(data_dir, &meta);
    if (!meta.has_spec) throw ConfigError("unmix: dataset has no mixture spec with signatures");
    ParamSet params = load_param_set(checkpoint);
    assign_partitions(params);

    EndmemberReport er = endmember_error(config.model, params, meta.spec.signatures,
                                         meta.standardization, config.eval.z_policy,
                                         data.labeled.empty() ? nullptr : &data);
    json j;
    j["per_endmember"] = er.per_endmember;
    j["mean_error"] = er.mean;
    j["z_policy"] =
        config.eval.z_policy == ZPolicy::DatasetMean ? "dataset_mean" : "prior_mean";
    j["seed"] = config.seed;
    std::ofstream os(out + "/endmembers.json");
    os << j.dump(2) << "\n";
    manifest.add_output(out + "/endmembers.json");
    manifest.write();
    std::cout << "unmix: mean endmember error " << er.mean << " -> " << out << "\n";
    return 0;
}

int cmd_baseline(const CommonOpts& opts_in, const CLI::App* cmd, const std::string& data_dir,
                 const std::string& out, std::size_t components) {
    CommonOpts opts = opts_in;
    ExperimentConfig config = resolve_config(cmd, opts);
    fs::create_directories(out);
    Manifest manifest("baseline", out);
    manifest.set_config(opts.config_path, config);
    manifest.add_input(data_dir);

    DatasetMeta meta;
    Dataset data = load_dataset(data_dir, &meta);
    if (data.labeled.empty()) throw ConfigError("baseline: dataset has no labeled pairs");
    std::size_t n = data.labeled.size(), p = meta.x_dim, q = meta.y_dim;
    Tensor x = Tensor::zeros({n, p});
    Tensor y = Tensor::zeros({n, q});
    for (std::size_t i = 0; i < n; ++i) {
        std::copy(data.labeled[i].first.data.begin(), data.labeled[i].first.data.end(),
                  x.data.begin() + static_cast<std::ptrdiff_t>(i * p));
        std::copy(data.labeled[i].second.data.begin(), data.labeled[i].second.data.end(),
                  y.data.begin() + static_cast<std::ptrdiff_t>(i * q));
    }
    PlsModel model = pls_fit(x, y, components);

    SampleTable table = load_sample_table(data_dir + "/samples.csv");
    std::set<std::size_t> train_rows(meta.labeled_rows.begin(), meta.labeled_rows.end());
    std::vector<Tensor> preds, truths;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (train_rows.count(i) || table.rows[i].corrupted) continue;
        Tensor xe = meta.standardization.applied ? meta.standardization.apply(table.rows[i].x)
                                                 : table.rows[i].x;
        Tensor row = Tensor::zeros({1, p});
        std::copy(xe.data.begin(), xe.data.end(), row.data.begin());
        Tensor y_hat = project_rows_to_simplex(pls_predict(model, row));
        preds.push_back(Tensor::vector(y_hat.data));
        truths.push_back(table.rows[i].abundance);
    }
    MetricReport report;
    report.metrics["composition_kl"] = composition_kl(preds, truths);
    report.metrics["components"] = static_cast<double>(components);
    report.metrics["holdout_rows"] = static_cast<double>(preds.size());
    report.config_summary = config_to_json_text(config);
    report.seed = config.seed;
    save_metric_report(out + "/pls.json", report);
    manifest.add_output(out + "/pls.json");
    manifest.write();
    std::cout << "baseline: composition_kl " << report.metrics["composition_kl"] << " -> " << out
              << "\n";
    return 0;
}

int cmd_mnist_prep(const CommonOpts& opts_in, const CLI::App* cmd, const std::string& out,
                   const std::string& images_path, const std::string& labels_path,
                   std::size_t synthetic, std::size_t synthetic_val,
                   const std::string& digits_arg) {
    CommonOpts opts = opts_in;
    ExperimentConfig config = resolve_config(cmd, opts);
    fs::create_directories(out);
    Manifest manifest("mnist-prep", out);
    manifest.set_config(opts.config_path, config);

    std::string train_images = images_path, train_labels = labels_path;
    std::string val_images, val_labels;
    if (synthetic > 0) {
        // Stand-in digit archive written and re-read through the IDX codec.
        DigitSet train_set = generate_synthetic_digits(synthetic, config.seed);
        DigitSet val_set = generate_synthetic_digits(synthetic_val, config.seed + 1);
        train_images = out + "/train-images.idx";
        train_labels = out + "/train-labels.idx";
        val_images = out + "/val-images.idx";
        val_labels = out + "/val-labels.idx";
        write_idx(train_images, train_set.images);
        write_idx(train_labels, train_set.labels);
        write_idx(val_images, val_set.images);
        write_idx(val_labels, val_set.labels);
        for (const std::string& f : {train_images, train_labels, val_images, val_labels}) {
            manifest.add_output(f);
        }
    } else if (train_images.empty() || train_labels.empty()) {
        throw ConfigError("mnist-prep: need --images/--labels or --synthetic N");
    }
    manifest.add_input(train_images);
    manifest.add_input(train_labels);

    Tensor images = load_idx(train_images);
    Tensor labels = load_idx(train_labels);
    std::set<std::size_t> digit_set;
    for (char c : digits_arg) {
        if (c >= '0' && c <= '9') digit_set.insert(static_cast<std::size_t>(c - '0'));
    }
    if (digit_set.empty()) throw ConfigError("mnist-prep: empty --digits");

    PartialLabelCounts counts{config.data.counts.labeled, config.data.counts.unfeatured};
    SplitResult split = make_partial_label_split(images, labels, digit_set, counts, config.seed,
                                                 z_prior_for(config));
    DatasetMeta meta;
    meta.seed = config.seed;
    meta.x_dim = images.size() / images.extent(0);
    meta.y_dim = 10;
    meta.z_dim = config.model.z_dim;
    meta.labeled_rows = split.labeled_rows;
    if (config.data.standardize) meta.standardization = standardize(split.dataset);
    save_dataset(out, split.dataset, meta);
    for (const char* f : {"/labeled.csv", "/unlabeled.csv", "/unfeatured.csv", "/meta.json"}) {
        manifest.add_output(out + f);
    }

    if (!val_images.empty()) {
        Tensor vi = load_idx(val_images);
        Tensor vl = load_idx(val_labels);
        std::size_t pixels = vi.size() / vi.extent(0);
        std::vector<std::string> header;
        for (std::size_t i = 0; i < pixels; ++i) header.push_back("x" + std::to_string(i));
        for (std::size_t i = 0; i < 10; ++i) header.push_back("y" + std::to_string(i));
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < vi.extent(0); ++i) {
            std::vector<double> row(vi.data.begin() + static_cast<std::ptrdiff_t>(i * pixels),
                                    vi.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * pixels));
            for (std::size_t d = 0; d < 10; ++d) {
                row.push_back(d == static_cast<std::size_t>(vl[i]) ? 1.0 : 0.0);
            }
            rows.push_back(std::move(row));
        }
        write_csv(out + "/val.csv", header, rows);
        manifest.add_output(out + "/val.csv");
    }
    manifest.write();
    std::cout << "mnist-prep: " << split.dataset.labeled.size() << " labeled / "
              << split.dataset.unlabeled_x.size() << " unlabeled / "
              << split.dataset.unfeatured.size() << " unfeatured -> " << out << "\n";
    return 0;
}

int cmd_lpo(const CommonOpts& opts_in, const CLI::App* cmd, const std::string& out,
            std::size_t groups, std::size_t train_count, std::size_t per_group,
            std::size_t seeds, std::size_t components) {
    CommonOpts opts = opts_in;
    ExperimentConfig config = resolve_config(cmd, opts);
    fs::create_directories(out);
    Manifest manifest("lpo", out);
    manifest.set_config(opts.config_path, config);

    if (train_count == 0 || train_count >= groups) {
        throw ConfigError("lpo: need 0 < train-groups < groups");
    }

    auto model_runner = [&](const ExperimentConfig& run_cfg) {
        return [run_cfg](const Dataset& train) {
            Dataset local = train;
            StandardizationRecord rec = standardize(local);
            TrainResult result = run_training(run_cfg.model, run_cfg.train, local);
            ModelConfig model = run_cfg.model;
            ParamSet params = std::move(result.params);
            return Predictor([model, params, rec](const Tensor& x_raw) {
                return dist_mean(encode_y(model, params, rec.apply(x_raw)));
            });
        };
    };

    json runs = json::array();
    std::vector<double> kls_full, kls_m2, kls_pls;
    for (std::size_t s = 0; s < seeds; ++s) {
        std::uint64_t seed = config.seed + s;
        SampleTable table = make_group_table(config.data.mixture, groups, per_group, seed);
        // Seed-shuffled group split.
        std::vector<std::size_t> ids(groups);
        for (std::size_t i = 0; i < groups; ++i) ids[i] = i;
        Rng rng(derive_seed(seed, "lpo_split"));
        for (std::size_t i = groups; i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(i));
            if (j >= i) j = i - 1;
            std::swap(ids[i - 1], ids[j]);
        }
        std::set<std::size_t> train_groups(ids.begin(),
                                           ids.begin() + static_cast<std::ptrdiff_t>(train_count));
        std::set<std::size_t> eval_groups(ids.begin() + static_cast<std::ptrdiff_t>(train_count),
                                          ids.end());

        LpoOptions lpo_opts;
        lpo_opts.seed = seed;
        lpo_opts.z_prior = z_prior_for(config);
        lpo_opts.unfeatured_count = config.data.counts.unfeatured;

        ExperimentConfig full_cfg = config;
        full_cfg.seed = full_cfg.train.seed = seed;
        ExperimentConfig m2_cfg = full_cfg;
        m2_cfg.train.coeffs.alpha_r = 0.0;

        MetricReport full = grouped_leave_p_out(table, train_groups, eval_groups,
                                                model_runner(full_cfg), lpo_opts);
        MetricReport m2 = grouped_leave_p_out(table, train_groups, eval_groups,
                                              model_runner(m2_cfg), lpo_opts);
        TrainRunner pls_runner = [components](const Dataset& train) {
            std::size_t n = train.labeled.size();
            std::size_t p = train.labeled[0].first.size(), q = train.labeled[0].second.size();
            Tensor x = Tensor::zeros({n, p}), y = Tensor::zeros({n, q});
            for (std::size_t i = 0; i < n; ++i) {
                std::copy(train.labeled[i].first.data.begin(), train.labeled[i].first.data.end(),
                          x.data.begin() + static_cast<std::ptrdiff_t>(i * p));
                std::copy(train.labeled[i].second.data.begin(),
                          train.labeled[i].second.data.end(),
                          y.data.begin() + static_cast<std::ptrdiff_t>(i * q));
            }
            PlsModel model = pls_fit(x, y, components);
            return Predictor([model, p](const Tensor& x_raw) {
                Tensor row = Tensor::zeros({1, p});
                std::copy(x_raw.data.begin(), x_raw.data.end(), row.data.begin());
                return Tensor::vector(project_rows_to_simplex(pls_predict(model, row)).data);
            });
        };
        MetricReport pls = grouped_leave_p_out(table, train_groups, eval_groups, pls_runner,
                                               lpo_opts);

        json run;
        run["seed"] = seed;
        run["full_kl"] = full.metrics.at("kl");
        run["m2_kl"] = m2.metrics.at("kl");
        run["pls_kl"] = pls.metrics.at("kl");
        runs.push_back(run);
        kls_full.push_back(full.metrics.at("kl"));
        kls_m2.push_back(m2.metrics.at("kl"));
        kls_pls.push_back(pls.metrics.at("kl"));
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        std::size_t n = v.size();
        return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    json j;
    j["runs"] = runs;
    j["median_full_kl"] = median(kls_full);
    j["median_m2_kl"] = median(kls_m2);
    j["median_pls_kl"] = median(kls_pls);
    j["groups"] = groups;
    j["train_groups"] = train_count;
    std::ofstream os(out + "/lpo_report.json");
    os << j.dump(2) << "\n";
    manifest.add_output(out + "/lpo_report.json");
    manifest.write();
    std::cout << "lpo: median kl full " << j["median_full_kl"] << ", m2 " << j["median_m2_kl"]
              << ", pls " << j["median_pls_kl"] << " -> " << out << "\n";
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"uvae: semi-supervised generative unmixing experiments"};
    app.require_subcommand(0, 1);
    app.footer("Subcommands: synth train eval unmix baseline mnist-prep lpo");

    CommonOpts synth_opts, train_opts, eval_opts, unmix_opts, base_opts, mnist_opts, lpo_opts;
    std::string synth_out, train_data, train_out, eval_data, eval_ckpt, eval_out;
    std::string eval_grid, eval_grid_mode = "mean";
    bool eval_nuisance = false;
    std::string unmix_data, unmix_ckpt, unmix_out, base_data, base_out;
    std::size_t base_components = 8;
    std::string mnist_out, mnist_images, mnist_labels, mnist_digits = "0,1,2,3,4";
    std::size_t mnist_synth = 0, mnist_synth_val = 0;
    std::string lpo_out;
    std::size_t lpo_groups = 6, lpo_train = 3, lpo_per_group = 80, lpo_seeds = 3,
                lpo_components = 8;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic mixture dataset");
    add_common(synth, synth_opts);
    synth->add_option("--out", synth_out, "output dataset directory")->required();

    CLI::App* train = app.add_subcommand("train", "train a model on a dataset directory");
    add_common(train, train_opts);
    train->add_option("--data", train_data, "dataset directory")->required();
    train->add_option("--out", train_out, "output run directory")->required();

    CLI::App* eval_cmd = app.add_subcommand("eval", "score a checkpoint and emit reports");
    add_common(eval_cmd, eval_opts);
    eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
    eval_cmd->add_option("--checkpoint", eval_ckpt, "parameter checkpoint")->required();
    eval_cmd->add_option("--out", eval_out, "output directory")->required();
    eval_cmd->add_option("--grid", eval_grid, "emit a PGM grid with this filename");
    eval_cmd->add_option("--grid-mode", eval_grid_mode, "grid generation: mean|sample");
    eval_cmd->add_flag("--nuisance", eval_nuisance, "emit the nuisance analysis reports");

    CLI::App* unmix = app.add_subcommand("unmix", "endmember extraction error report");
    add_common(unmix, unmix_opts);
    unmix->add_option("--data", unmix_data, "dataset directory")->required();
    unmix->add_option("--checkpoint", unmix_ckpt, "parameter checkpoint")->required();
    unmix->add_option("--out", unmix_out, "output directory")->required();

    CLI::App* baseline = app.add_subcommand("baseline", "PLS baseline fit and score");
    add_common(baseline, base_opts);
    baseline->add_option("--data", base_data, "dataset directory")->required();
    baseline->add_option("--out", base_out, "output directory")->required();
    baseline->add_option("--components", base_components, "PLS component count");

    CLI::App* mnist = app.add_subcommand("mnist-prep", "build a partial-label digit dataset");
    add_common(mnist, mnist_opts);
    mnist->add_option("--out", mnist_out, "output dataset directory")->required();
    mnist->add_option("--images", mnist_images, "IDX image file");
    mnist->add_option("--labels", mnist_labels, "IDX label file");
    mnist->add_option("--synthetic", mnist_synth, "generate this many stand-in digit images");
    mnist->add_option("--synthetic-val", mnist_synth_val, "stand-in validation images");
    mnist->add_option("--digits", mnist_digits, "comma-separated labeled digit classes");

    CLI::App* lpo = app.add_subcommand("lpo", "grouped leave-p-out protocol");
    add_common(lpo, lpo_opts);
    lpo->add_option("--out", lpo_out, "output directory")->required();
    lpo->add_option("--groups", lpo_groups, "number of groups");
    lpo->add_option("--train-groups", lpo_train, "groups used for training");
    lpo->add_option("--per-group", lpo_per_group, "rows per group");
    lpo->add_option("--seeds", lpo_seeds, "number of seeds");
    lpo->add_option("--components", lpo_components, "PLS component count");

    std::vector<std::string> argv_owned = args;
    std::vector<const char*> argv;
    argv.push_back("uvae");
    for (const std::string& a : argv_owned) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(synth_opts, synth, synth_out);
        if (train->parsed()) return cmd_train(train_opts, train, train_data, train_out);
        if (eval_cmd->parsed()) {
            return cmd_eval(eval_opts, eval_cmd, eval_data, eval_ckpt, eval_out, eval_grid,
                            eval_grid_mode, eval_nuisance);
        }
        if (unmix->parsed()) return cmd_unmix(unmix_opts, unmix, unmix_data, unmix_ckpt, unmix_out);
        if (baseline->parsed()) {
            return cmd_baseline(base_opts, baseline, base_data, base_out, base_components);
        }
        if (mnist->parsed()) {
            return cmd_mnist_prep(mnist_opts, mnist, mnist_out, mnist_images, mnist_labels,
                                  mnist_synth, mnist_synth_val, mnist_digits);
        }
        if (lpo->parsed()) {
            return cmd_lpo(lpo_opts, lpo, lpo_out, lpo_groups, lpo_train, lpo_per_group,
                           lpo_seeds, lpo_components);
        }
        std::cerr << app.help() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace uvae::cli
