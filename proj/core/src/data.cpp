#include "uvae/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "uvae/csv.hpp"
#include "uvae/errors.hpp"

namespace uvae {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Standardization.

Tensor StandardizationRecord::apply(const Tensor& x) const {
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - mean[i]) / scale[i];
    return out;
}

Tensor StandardizationRecord::invert(const Tensor& x) const {
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] * scale[i] + mean[i];
    return out;
}

namespace {

void require_simplex(const Tensor& y, const char* what) {
    double total = 0.0;
    for (double v : y.data) {
        if (v < -1e-9) throw ContractError(std::string(what) + ": negative simplex component");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ContractError(std::string(what) + ": composition does not sum to 1");
    }
}

} // namespace

void Dataset::validate(double z_lo, double z_hi) const {
    for (const auto& [x, y] : labeled) {
        if (!x.all_finite()) throw ContractError("dataset: non-finite labeled observation");
        require_simplex(y, "dataset labeled");
    }
    for (const Tensor& x : unlabeled_x) {
        if (!x.all_finite()) throw ContractError("dataset: non-finite unlabeled observation");
    }
    for (const auto& item : unfeatured) {
        require_simplex(item.y, "dataset unfeatured");
        if (item.z) {
            for (double v : item.z->data) {
                if (v < z_lo || v > z_hi) {
                    throw ContractError("dataset: unfeatured nuisance outside prior support");
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Synthetic mixtures.

MixingLaw mixing_from_string(const std::string& name) {
    if (name == "linear") return MixingLaw::Linear;
    if (name == "nonlinear") return MixingLaw::Nonlinear;
    throw ConfigError("unknown mixing law: " + name);
}

const char* mixing_to_string(MixingLaw law) {
    return law == MixingLaw::Linear ? "linear" : "nonlinear";
}

void MixtureSpec::validate() const {
    if (endmembers < 2) throw ConfigError("mixture: endmembers must be at least 2");
    if (channels == 0) throw ConfigError("mixture: channels must be positive");
    if (grid_resolution == 0) throw ConfigError("mixture: grid_resolution must be positive");
    if (nuisance_levels.empty()) throw ConfigError("mixture: need at least one nuisance level");
    if (replicates == 0) throw ConfigError("mixture: replicates must be positive");
    if (noise_scale < 0 || abundance_jitter < 0) {
        throw ConfigError("mixture: noise/jitter must be non-negative");
    }
    if (corrupt_fraction < 0 || corrupt_fraction >= 1) {
        throw ConfigError("mixture: corrupt_fraction must be in [0, 1)");
    }
    if (!signatures.empty()) {
        if (signatures.size() != endmembers) throw ConfigError("mixture: signature count mismatch");
        for (const Tensor& s : signatures) {
            if (s.size() != channels) throw ConfigError("mixture: signature length mismatch");
        }
    }
}

std::vector<Tensor> make_bump_signatures(std::size_t endmembers, std::size_t channels,
                                         std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Tensor> sigs;
    for (std::size_t k = 0; k < endmembers; ++k) {
        Tensor s = Tensor::zeros({channels});
        // One anchor bump in a private band keeps the signatures independent.
        double c0 = (static_cast<double>(k) + 0.5) * static_cast<double>(channels) /
                    static_cast<double>(endmembers);
        std::size_t extra = 2 + static_cast<std::size_t>(rng.uniform01() * 3.0);  // 2..4
        std::vector<std::pair<double, double>> bumps{{c0, 1.0}};
        for (std::size_t b = 0; b < extra; ++b) {
            bumps.push_back({rng.uniform(0.0, static_cast<double>(channels)),
                             rng.uniform(0.3, 0.9)});
        }
        for (auto& [center, amp] : bumps) {
            double width = rng.uniform(static_cast<double>(channels) / 20.0,
                                       static_cast<double>(channels) / 8.0);
            for (std::size_t c = 0; c < channels; ++c) {
                double d = (static_cast<double>(c) - center) / width;
                s[c] += amp * std::exp(-0.5 * d * d);
            }
        }
        double mx = *std::max_element(s.data.begin(), s.data.end());
        for (double& v : s.data) v = 0.08 + 0.84 * v / mx;  // reflectance-like range
        sigs.push_back(std::move(s));
    }
    return sigs;
}

std::size_t simplex_grid_size(std::size_t resolution, std::size_t endmembers) {
    // C(resolution + K - 1, K - 1)
    std::size_t n = 1;
    for (std::size_t i = 1; i < endmembers; ++i) {
        n = n * (resolution + i) / i;
    }
    return n;
}

namespace {

void enumerate_grid(std::size_t k, std::size_t remaining, std::vector<std::size_t>& point,
                    std::vector<std::vector<std::size_t>>& out) {
    if (k == 1) {
        point.push_back(remaining);
        out.push_back(point);
        point.pop_back();
        return;
    }
    for (std::size_t i = 0; i <= remaining; ++i) {
        point.push_back(i);
        enumerate_grid(k - 1, remaining - i, point, out);
        point.pop_back();
    }
}

Tensor mix_spectrum(const MixtureSpec& spec, const std::vector<Tensor>& sigs,
                    const Tensor& abundance) {
    Tensor x = Tensor::zeros({spec.channels});
    if (spec.mixing == MixingLaw::Linear) {
        for (std::size_t k = 0; k < spec.endmembers; ++k) {
            for (std::size_t c = 0; c < spec.channels; ++c) x[c] += abundance[k] * sigs[k][c];
        }
    } else {
        // Geometric (intimate) mixing: exp(-sum_k a_k * (-log s_k)).
        for (std::size_t c = 0; c < spec.channels; ++c) {
            double acc = 0.0;
            for (std::size_t k = 0; k < spec.endmembers; ++k) {
                acc += abundance[k] * (-std::log(sigs[k][c]));
            }
            x[c] = std::exp(-acc);
        }
    }
    return x;
}

Tensor jitter_abundance(const Tensor& nominal, double jitter, Rng& rng) {
    if (jitter == 0.0) return nominal;
    Tensor a = nominal;
    double total = 0.0;
    for (double& v : a.data) {
        v = std::max(v + rng.uniform(-jitter, jitter), 0.0);
        total += v;
    }
    for (double& v : a.data) v /= total;
    return a;
}

} // namespace

SampleTable generate_synthetic_mixtures(const MixtureSpec& spec, std::uint64_t seed) {
    spec.validate();
    SampleTable table;
    table.spec = spec;
    table.seed = seed;
    if (table.spec.signatures.empty()) {
        table.spec.signatures =
            make_bump_signatures(spec.endmembers, spec.channels, derive_seed(seed, "signatures"));
    }
    const std::vector<Tensor>& sigs = table.spec.signatures;

    std::vector<std::vector<std::size_t>> grid;
    std::vector<std::size_t> scratch;
    enumerate_grid(spec.endmembers, spec.grid_resolution, scratch, grid);

    Rng rng(derive_seed(seed, "mixtures"));
    double res = static_cast<double>(spec.grid_resolution);
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        Tensor nominal = Tensor::zeros({spec.endmembers});
        for (std::size_t k = 0; k < spec.endmembers; ++k) {
            nominal[k] = static_cast<double>(grid[gi][k]) / res;
        }
        for (std::size_t c = 0; c < spec.nuisance_levels.size(); ++c) {
            for (std::size_t r = 0; r < spec.replicates; ++r) {
                SampleRow row;
                row.group_id = gi;
                row.config_id = c;
                row.abundance = jitter_abundance(nominal, spec.abundance_jitter, rng);
                row.corrupted =
                    spec.corrupt_fraction > 0.0 && rng.uniform01() < spec.corrupt_fraction;
                if (row.corrupted) {
                    // Off-manifold flat spectrum, the shape a stray view of
                    // the sample container produces.
                    double level = 1.5 + rng.uniform01();
                    row.x = Tensor::zeros({spec.channels});
                    for (double& v : row.x.data) v = level + 0.05 * rng.normal();
                } else {
                    row.x = mix_spectrum(spec, sigs, row.abundance);
                    double level = spec.nuisance_levels[c];
                    for (double& v : row.x.data) v *= level;
                    if (spec.noise_scale > 0.0) {
                        for (double& v : row.x.data) v += spec.noise_scale * rng.normal();
                    }
                }
                table.rows.push_back(std::move(row));
            }
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// Splits.

namespace {

double l1_to_vertex(const Tensor& a, std::size_t vertex) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += std::abs(a[i] - (i == vertex ? 1.0 : 0.0));
    }
    return d;
}

bool near_any_vertex(const Tensor& a, double radius) {
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (l1_to_vertex(a, k) <= radius) return true;
    }
    return false;
}

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(i));
        if (j >= i) j = i - 1;
        std::swap(idx[i - 1], idx[j]);
    }
}

Tensor uniform_simplex_point(std::size_t k, Rng& rng) {
    Tensor y = Tensor::zeros({k});
    double total = 0.0;
    for (double& v : y.data) {
        v = -std::log(rng.uniform01());
        total += v;
    }
    for (double& v : y.data) v /= total;
    return y;
}

Tensor near_corner_label(std::size_t k, std::size_t vertex, double corner_radius, Rng& rng) {
    // (1-t) * e_vertex + t * d keeps the L1 distance to the vertex at most
    // 2t, so t is capped at radius/2.
    Tensor d = uniform_simplex_point(k, rng);
    double t = rng.uniform01() * corner_radius / 2.0;
    Tensor y = Tensor::zeros({k});
    for (std::size_t i = 0; i < k; ++i) {
        y[i] = (1.0 - t) * (i == vertex ? 1.0 : 0.0) + t * d[i];
    }
    return y;
}

} // namespace

SplitResult make_simplex_split(const SampleTable& table, double corner_radius,
                               const SplitCounts& counts, std::uint64_t seed,
                               const ZPrior& z_prior) {
    std::vector<std::size_t> interior;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (!near_any_vertex(table.rows[i].abundance, corner_radius)) interior.push_back(i);
    }
    if (interior.size() < counts.labeled + counts.unlabeled) {
        throw ContractError("make_simplex_split: table has " + std::to_string(interior.size()) +
                            " interior rows, need " +
                            std::to_string(counts.labeled + counts.unlabeled));
    }
    Rng rng(derive_seed(seed, "split"));
    shuffle_indices(interior, rng);

    SplitResult result;
    std::size_t k = table.spec.endmembers;
    for (std::size_t i = 0; i < counts.labeled; ++i) {
        const SampleRow& row = table.rows[interior[i]];
        result.dataset.labeled.push_back({row.x, row.abundance});
        result.labeled_rows.push_back(interior[i]);
    }
    for (std::size_t i = 0; i < counts.unlabeled; ++i) {
        const SampleRow& row = table.rows[interior[counts.labeled + i]];
        result.dataset.unlabeled_x.push_back(row.x);
        result.unlabeled_rows.push_back(interior[counts.labeled + i]);
    }
    for (std::size_t i = 0; i < counts.unfeatured; ++i) {
        Dataset::UnfeaturedItem item;
        item.y = near_corner_label(k, i % k, corner_radius, rng);
        if (z_prior.attach) {
            item.z = rng.uniform_vec(z_prior.dim, z_prior.lo, z_prior.hi);
        }
        result.dataset.unfeatured.push_back(std::move(item));
    }
    return result;
}

SplitResult make_partial_label_split(const Tensor& images, const Tensor& labels,
                                     const std::set<std::size_t>& labeled_digits,
                                     const PartialLabelCounts& counts, std::uint64_t seed,
                                     const ZPrior& z_prior) {
    if (labeled_digits.empty()) throw ContractError("make_partial_label_split: empty digit subset");
    for (std::size_t d : labeled_digits) {
        if (d > 9) throw ContractError("make_partial_label_split: digits must be in 0..9");
    }
    if (images.rank() < 2) throw ContractError("make_partial_label_split: images must be rank>=2");
    std::size_t n = images.extent(0);
    if (labels.size() != n) throw ContractError("make_partial_label_split: image/label count mismatch");
    std::size_t pixels = images.size() / n;

    auto image_row = [&](std::size_t i) {
        Tensor x = Tensor::zeros({pixels});
        std::copy(images.data.begin() + static_cast<std::ptrdiff_t>(i * pixels),
                  images.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * pixels),
                  x.data.begin());
        return x;
    };

    Rng rng(derive_seed(seed, "split"));
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < n; ++i) {
        if (labeled_digits.count(static_cast<std::size_t>(labels[i]))) eligible.push_back(i);
    }
    if (eligible.size() < counts.labeled) {
        throw ContractError("make_partial_label_split: only " + std::to_string(eligible.size()) +
                            " images carry the labeled digits, need " +
                            std::to_string(counts.labeled));
    }
    shuffle_indices(eligible, rng);

    SplitResult result;
    for (std::size_t i = 0; i < counts.labeled; ++i) {
        std::size_t idx = eligible[i];
        Tensor one_hot = Tensor::zeros({10});
        one_hot[static_cast<std::size_t>(labels[idx])] = 1.0;
        result.dataset.labeled.push_back({image_row(idx), std::move(one_hot)});
        result.labeled_rows.push_back(idx);
    }
    for (std::size_t i = 0; i < n; ++i) {
        result.dataset.unlabeled_x.push_back(image_row(i));
        result.unlabeled_rows.push_back(i);
    }
    for (std::size_t i = 0; i < counts.unfeatured; ++i) {
        Dataset::UnfeaturedItem item;
        Tensor one_hot = Tensor::zeros({10});
        one_hot[i % 10] = 1.0;
        item.y = std::move(one_hot);
        if (z_prior.attach) {
            item.z = rng.uniform_vec(z_prior.dim, z_prior.lo, z_prior.hi);
        }
        result.dataset.unfeatured.push_back(std::move(item));
    }
    return result;
}

StandardizationRecord standardize(Dataset& data) {
    std::size_t n = data.labeled.size() + data.unlabeled_x.size();
    if (n == 0) throw ContractError("standardize: no observations");
    std::size_t dim = data.labeled.empty() ? data.unlabeled_x[0].size() : data.labeled[0].first.size();

    StandardizationRecord rec;
    rec.mean = Tensor::zeros({dim});
    rec.scale = Tensor::zeros({dim});
    auto each_x = [&](auto&& fn) {
        for (const auto& [x, y] : data.labeled) fn(x);
        for (const Tensor& x : data.unlabeled_x) fn(x);
    };
    each_x([&](const Tensor& x) {
        for (std::size_t i = 0; i < dim; ++i) rec.mean[i] += x[i];
    });
    for (double& v : rec.mean.data) v /= static_cast<double>(n);
    each_x([&](const Tensor& x) {
        for (std::size_t i = 0; i < dim; ++i) {
            double d = x[i] - rec.mean[i];
            rec.scale[i] += d * d;
        }
    });
    for (std::size_t i = 0; i < dim; ++i) {
        double sd = std::sqrt(rec.scale[i] / static_cast<double>(n));
        if (sd < 1e-12) {
            rec.scale[i] = 1.0;
            rec.zero_variance_channels.push_back(i);
        } else {
            rec.scale[i] = sd;
        }
    }
    rec.applied = true;
    for (auto& [x, y] : data.labeled) x = rec.apply(x);
    for (Tensor& x : data.unlabeled_x) x = rec.apply(x);
    data.standardization = rec;
    return rec;
}

// ---------------------------------------------------------------------------
// Batcher.

Batcher::Batcher(const Dataset& data, std::size_t batch_size, std::uint64_t seed)
    : data_(&data), batch_size_(batch_size), rng_(seed) {
    if (batch_size_ == 0) throw ContractError("batcher: batch_size must be positive");
    labeled_.order.resize(data.labeled.size());
    unlabeled_.order.resize(data.unlabeled_x.size());
    unfeatured_.order.resize(data.unfeatured.size());
    for (std::size_t i = 0; i < labeled_.order.size(); ++i) labeled_.order[i] = i;
    for (std::size_t i = 0; i < unlabeled_.order.size(); ++i) unlabeled_.order[i] = i;
    for (std::size_t i = 0; i < unfeatured_.order.size(); ++i) unfeatured_.order[i] = i;
    labeled_.cursor = labeled_.order.size();
    unlabeled_.cursor = unlabeled_.order.size();
    unfeatured_.cursor = unfeatured_.order.size();
}

std::size_t Batcher::next_index(Stream& s, std::size_t n) {
    if (s.cursor >= n) {
        shuffle_indices(s.order, rng_);
        s.cursor = 0;
    }
    return s.order[s.cursor++];
}

MiniBatch Batcher::next_batch() {
    MiniBatch batch;
    for (std::size_t i = 0; i < batch_size_ && !data_->labeled.empty(); ++i) {
        batch.labeled.push_back(data_->labeled[next_index(labeled_, data_->labeled.size())]);
    }
    for (std::size_t i = 0; i < batch_size_ && !data_->unlabeled_x.empty(); ++i) {
        batch.unlabeled_x.push_back(
            data_->unlabeled_x[next_index(unlabeled_, data_->unlabeled_x.size())]);
    }
    for (std::size_t i = 0; i < batch_size_ && !data_->unfeatured.empty(); ++i) {
        batch.unfeatured.push_back(
            data_->unfeatured[next_index(unfeatured_, data_->unfeatured.size())]);
    }
    return batch;
}

std::size_t Batcher::batches_per_epoch() const {
    std::size_t primary = data_->labeled.size();
    if (primary == 0) primary = data_->unlabeled_x.size();
    if (primary == 0) primary = data_->unfeatured.size();
    if (primary == 0) return 0;
    return (primary + batch_size_ - 1) / batch_size_;
}

// ---------------------------------------------------------------------------
// Grouped table.

namespace {

SampleTable group_table_impl(const MixtureSpec& spec, const std::vector<Tensor>& comps,
                             std::size_t per_group, std::uint64_t seed, Rng& rng) {
    SampleTable table;
    table.spec = spec;
    table.seed = seed;
    if (table.spec.signatures.empty()) {
        table.spec.signatures =
            make_bump_signatures(spec.endmembers, spec.channels, derive_seed(seed, "signatures"));
    }
    for (std::size_t g = 0; g < comps.size(); ++g) {
        for (std::size_t r = 0; r < per_group; ++r) {
            SampleRow row;
            row.group_id = g;
            row.config_id = r % spec.nuisance_levels.size();
            row.abundance = jitter_abundance(comps[g], spec.abundance_jitter, rng);
            row.x = mix_spectrum(spec, table.spec.signatures, row.abundance);
            double level = spec.nuisance_levels[row.config_id];
            for (double& v : row.x.data) v *= level;
            if (spec.noise_scale > 0.0) {
                for (double& v : row.x.data) v += spec.noise_scale * rng.normal();
            }
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

} // namespace

SampleTable make_group_table(const MixtureSpec& spec, std::size_t n_groups, std::size_t per_group,
                             std::uint64_t seed) {
    spec.validate();
    if (n_groups < 2) throw ContractError("make_group_table: need at least 2 groups");
    Rng rng(derive_seed(seed, "groups"));
    // Distinct group compositions, rejection-spaced in L1.
    std::vector<Tensor> comps;
    int guard = 0;
    while (comps.size() < n_groups && guard < 10000) {
        ++guard;
        Tensor y = uniform_simplex_point(spec.endmembers, rng);
        bool ok = true;
        for (const Tensor& other : comps) {
            double d = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) d += std::abs(y[i] - other[i]);
            if (d < 0.25) {
                ok = false;
                break;
            }
        }
        if (ok) comps.push_back(std::move(y));
    }
    while (comps.size() < n_groups) comps.push_back(uniform_simplex_point(spec.endmembers, rng));
    return group_table_impl(spec, comps, per_group, seed, rng);
}

SampleTable make_group_table_at(const MixtureSpec& spec, const std::vector<Tensor>& compositions,
                                std::size_t per_group, std::uint64_t seed) {
    spec.validate();
    if (compositions.size() < 2) throw ContractError("make_group_table_at: need at least 2 groups");
    for (const Tensor& y : compositions) require_simplex(y, "make_group_table_at");
    Rng rng(derive_seed(seed, "groups"));
    return group_table_impl(spec, compositions, per_group, seed, rng);
}

// ---------------------------------------------------------------------------
// On-disk formats.

namespace {

std::vector<std::string> numbered_header(const std::string& prefix, std::size_t n) {
    std::vector<std::string> h;
    for (std::size_t i = 0; i < n; ++i) h.push_back(prefix + std::to_string(i));
    return h;
}

json spec_to_json(const MixtureSpec& spec) {
    json j;
    j["endmembers"] = spec.endmembers;
    j["channels"] = spec.channels;
    j["grid_resolution"] = spec.grid_resolution;
    j["nuisance_levels"] = spec.nuisance_levels;
    j["noise_scale"] = spec.noise_scale;
    j["mixing"] = mixing_to_string(spec.mixing);
    j["replicates"] = spec.replicates;
    j["abundance_jitter"] = spec.abundance_jitter;
    j["corrupt_fraction"] = spec.corrupt_fraction;
    json sigs = json::array();
    for (const Tensor& s : spec.signatures) sigs.push_back(s.data);
    j["signatures"] = sigs;
    return j;
}

MixtureSpec spec_from_json(const json& j) {
    MixtureSpec spec;
    spec.endmembers = j.at("endmembers").get<std::size_t>();
    spec.channels = j.at("channels").get<std::size_t>();
    spec.grid_resolution = j.at("grid_resolution").get<std::size_t>();
    spec.nuisance_levels = j.at("nuisance_levels").get<std::vector<double>>();
    spec.noise_scale = j.at("noise_scale").get<double>();
    spec.mixing = mixing_from_string(j.at("mixing").get<std::string>());
    spec.replicates = j.at("replicates").get<std::size_t>();
    spec.abundance_jitter = j.at("abundance_jitter").get<double>();
    spec.corrupt_fraction = j.at("corrupt_fraction").get<double>();
    for (const auto& s : j.at("signatures")) {
        spec.signatures.push_back(Tensor::vector(s.get<std::vector<double>>()));
    }
    return spec;
}

} // namespace

void save_dataset(const std::string& dir, const Dataset& data, const DatasetMeta& meta) {
    fs::create_directories(dir);
    std::size_t x_dim = meta.x_dim;
    std::size_t y_dim = meta.y_dim;

    {
        std::vector<std::string> header = numbered_header("x", x_dim);
        std::vector<std::string> yh = numbered_header("y", y_dim);
        header.insert(header.end(), yh.begin(), yh.end());
        std::vector<std::vector<double>> rows;
        for (const auto& [x, y] : data.labeled) {
            std::vector<double> row(x.data);
            row.insert(row.end(), y.data.begin(), y.data.end());
            rows.push_back(std::move(row));
        }
        write_csv(dir + "/labeled.csv", header, rows);
    }
    {
        std::vector<std::vector<double>> rows;
        for (const Tensor& x : data.unlabeled_x) rows.push_back(x.data);
        write_csv(dir + "/unlabeled.csv", numbered_header("x", x_dim), rows);
    }
    {
        std::size_t z_dim = 0;
        for (const auto& item : data.unfeatured) {
            if (item.z) z_dim = item.z->size();
        }
        std::vector<std::string> header = numbered_header("y", y_dim);
        std::vector<std::string> zh = numbered_header("z", z_dim);
        header.insert(header.end(), zh.begin(), zh.end());
        std::vector<std::vector<double>> rows;
        for (const auto& item : data.unfeatured) {
            std::vector<double> row(item.y.data);
            if (z_dim > 0) {
                if (!item.z) throw ContractError("save_dataset: mixed unfeatured z presence");
                row.insert(row.end(), item.z->data.begin(), item.z->data.end());
            }
            rows.push_back(std::move(row));
        }
        write_csv(dir + "/unfeatured.csv", header, rows);
    }

    json j;
    j["seed"] = meta.seed;
    j["x_dim"] = meta.x_dim;
    j["y_dim"] = meta.y_dim;
    j["z_dim"] = meta.z_dim;
    if (meta.has_spec) j["mixture_spec"] = spec_to_json(meta.spec);
    json std_j;
    std_j["applied"] = meta.standardization.applied;
    std_j["mean"] = meta.standardization.mean.data;
    std_j["scale"] = meta.standardization.scale.data;
    std_j["zero_variance_channels"] = meta.standardization.zero_variance_channels;
    j["standardization"] = std_j;
    json split_j;
    split_j["labeled_rows"] = meta.labeled_rows;
    split_j["unlabeled_rows"] = meta.unlabeled_rows;
    j["split"] = split_j;
    std::ofstream os(dir + "/meta.json");
    if (!os) throw NumericError("cannot open for writing: " + dir + "/meta.json");
    os << j.dump(2) << "\n";
}

Dataset load_dataset(const std::string& dir, DatasetMeta* meta_out) {
    Dataset data;
    DatasetMeta meta;
    {
        std::ifstream is(dir + "/meta.json");
        if (!is) throw ParseError("cannot open dataset meta: " + dir + "/meta.json", 0);
        json j = json::parse(is);
        meta.seed = j.at("seed").get<std::uint64_t>();
        meta.x_dim = j.at("x_dim").get<std::size_t>();
        meta.y_dim = j.at("y_dim").get<std::size_t>();
        meta.z_dim = j.at("z_dim").get<std::size_t>();
        if (j.contains("mixture_spec")) {
            meta.spec = spec_from_json(j.at("mixture_spec"));
            meta.has_spec = true;
        }
        const json& std_j = j.at("standardization");
        meta.standardization.applied = std_j.at("applied").get<bool>();
        meta.standardization.mean = Tensor::vector(std_j.at("mean").get<std::vector<double>>());
        meta.standardization.scale = Tensor::vector(std_j.at("scale").get<std::vector<double>>());
        meta.standardization.zero_variance_channels =
            std_j.at("zero_variance_channels").get<std::vector<std::size_t>>();
        meta.labeled_rows = j.at("split").at("labeled_rows").get<std::vector<std::size_t>>();
        meta.unlabeled_rows = j.at("split").at("unlabeled_rows").get<std::vector<std::size_t>>();
    }
    std::size_t x_dim = meta.x_dim, y_dim = meta.y_dim;
    {
        CsvTable t = read_csv(dir + "/labeled.csv");
        if (t.header.size() != x_dim + y_dim) throw ParseError("labeled.csv width mismatch", 0);
        for (const auto& row : t.rows) {
            Tensor x = Tensor::zeros({x_dim});
            Tensor y = Tensor::zeros({y_dim});
            std::copy(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(x_dim), x.data.begin());
            std::copy(row.begin() + static_cast<std::ptrdiff_t>(x_dim), row.end(), y.data.begin());
            data.labeled.push_back({std::move(x), std::move(y)});
        }
    }
    {
        CsvTable t = read_csv(dir + "/unlabeled.csv");
        for (const auto& row : t.rows) data.unlabeled_x.push_back(Tensor::vector(row));
    }
    {
        CsvTable t = read_csv(dir + "/unfeatured.csv");
        std::size_t z_dim = t.header.size() - y_dim;
        for (const auto& row : t.rows) {
            Dataset::UnfeaturedItem item;
            item.y = Tensor::zeros({y_dim});
            std::copy(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(y_dim),
                      item.y.data.begin());
            if (z_dim > 0) {
                Tensor z = Tensor::zeros({z_dim});
                std::copy(row.begin() + static_cast<std::ptrdiff_t>(y_dim), row.end(),
                          z.data.begin());
                item.z = std::move(z);
            }
            data.unfeatured.push_back(std::move(item));
        }
    }
    data.standardization = meta.standardization;
    if (meta_out) *meta_out = meta;
    return data;
}

void save_sample_table(const std::string& path, const SampleTable& table) {
    std::size_t k = table.spec.endmembers, c = table.spec.channels;
    std::vector<std::string> header = numbered_header("a", k);
    header.push_back("config");
    header.push_back("group");
    header.push_back("corrupted");
    std::vector<std::string> xh = numbered_header("x", c);
    header.insert(header.end(), xh.begin(), xh.end());
    std::vector<std::vector<double>> rows;
    for (const SampleRow& row : table.rows) {
        std::vector<double> r(row.abundance.data);
        r.push_back(static_cast<double>(row.config_id));
        r.push_back(static_cast<double>(row.group_id));
        r.push_back(row.corrupted ? 1.0 : 0.0);
        r.insert(r.end(), row.x.data.begin(), row.x.data.end());
        rows.push_back(std::move(r));
    }
    write_csv(path, header, rows);
}

SampleTable load_sample_table(const std::string& path) {
    CsvTable t = read_csv(path);
    std::size_t config_col = t.column("config");
    std::size_t group_col = t.column("group");
    std::size_t corrupt_col = t.column("corrupted");
    std::size_t k = config_col;  // a0..a{k-1} precede the config column
    std::size_t x_start = corrupt_col + 1;
    SampleTable table;
    table.spec.endmembers = k;
    table.spec.channels = t.header.size() - x_start;
    for (const auto& row : t.rows) {
        SampleRow r;
        r.abundance = Tensor::zeros({k});
        std::copy(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k),
                  r.abundance.data.begin());
        r.config_id = static_cast<std::size_t>(row[config_col]);
        r.group_id = static_cast<std::size_t>(row[group_col]);
        r.corrupted = row[corrupt_col] != 0.0;
        r.x = Tensor::zeros({table.spec.channels});
        std::copy(row.begin() + static_cast<std::ptrdiff_t>(x_start), row.end(), r.x.data.begin());
        table.rows.push_back(std::move(r));
    }
    return table;
}

} // namespace uvae
