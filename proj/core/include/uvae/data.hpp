#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "uvae/objectives.hpp"
#include "uvae/rng.hpp"
#include "uvae/tensor.hpp"

namespace uvae {

/// Per-channel affine transform applied to observations, with enough
/// information to map model outputs back to original units.
struct StandardizationRecord {
    Tensor mean;
    Tensor scale;
    bool applied = false;
    std::vector<std::size_t> zero_variance_channels;

    Tensor apply(const Tensor& x) const;
    Tensor invert(const Tensor& x) const;
};

/// The three training sub-collections.
struct Dataset {
    using UnfeaturedItem = MiniBatch::UnfeaturedItem;
    std::vector<std::pair<Tensor, Tensor>> labeled;
    std::vector<Tensor> unlabeled_x;
    std::vector<UnfeaturedItem> unfeatured;
    StandardizationRecord standardization;

    void validate(double z_lo, double z_hi) const;
};

enum class MixingLaw : unsigned char { Linear, Nonlinear };

MixingLaw mixing_from_string(const std::string& name);
const char* mixing_to_string(MixingLaw law);

/// Recipe for a synthetic mixed-spectra table: smooth endmember signatures
/// combined on an abundance grid, replicated per acquisition configuration
/// with a multiplicative distortion level each, plus observation noise.
struct MixtureSpec {
    std::size_t endmembers = 3;
    std::size_t channels = 32;
    std::vector<Tensor> signatures;  // filled by make_bump_signatures if empty
    std::size_t grid_resolution = 10;
    std::vector<double> nuisance_levels{1.0, 1.176, 0.576};
    double noise_scale = 0.01;
    MixingLaw mixing = MixingLaw::Linear;
    std::size_t replicates = 8;
    double abundance_jitter = 0.02;
    double corrupt_fraction = 0.0;

    void validate() const;
};

struct SampleRow {
    Tensor abundance;
    std::size_t config_id = 0;
    std::size_t group_id = 0;
    bool corrupted = false;
    Tensor x;
};

struct SampleTable {
    std::vector<SampleRow> rows;
    MixtureSpec spec;
    std::uint64_t seed = 0;
};

/// Smooth non-negative signatures: sums of 3-5 Gaussian bumps with distinct
/// centers per endmember, scaled into a reflectance-like range.
std::vector<Tensor> make_bump_signatures(std::size_t endmembers, std::size_t channels,
                                         std::uint64_t seed);

/// All grid abundances x configurations x replicates, with jitter inside the
/// grid cell, per-configuration distortion, additive noise, and optionally a
/// fraction of corrupted rows (flat off-manifold spectra) for outlier
/// studies. Pure function of (spec, seed).
SampleTable generate_synthetic_mixtures(const MixtureSpec& spec, std::uint64_t seed);

/// Number of grid points for a resolution/endmember combination.
std::size_t simplex_grid_size(std::size_t resolution, std::size_t endmembers);

struct SplitCounts {
    std::size_t labeled = 500;
    std::size_t unlabeled = 992;
    std::size_t unfeatured = 501;
};

struct SplitResult {
    Dataset dataset;
    std::vector<std::size_t> labeled_rows;
    std::vector<std::size_t> unlabeled_rows;
};

/// Prior box the observed-nuisance variant attaches draws from.
struct ZPrior {
    std::size_t dim = 1;
    double lo = -1.5;
    double hi = 1.5;
    bool attach = true;
};

/// Interior rows (outside corner_radius in L1 of every vertex) feed the
/// labeled/unlabeled splits disjointly; unfeatured labels are drawn near the
/// vertices, with a prior nuisance attached when z_prior.attach is set.
SplitResult make_simplex_split(const SampleTable& table, double corner_radius,
                               const SplitCounts& counts, std::uint64_t seed,
                               const ZPrior& z_prior);

struct PartialLabelCounts {
    std::size_t labeled = 500;
    std::size_t unfeatured = 500;
};

/// Labeled pairs only for the given digit classes (one-hot targets); every
/// image is available unlabeled; the unfeatured set cycles all ten one-hots.
SplitResult make_partial_label_split(const Tensor& images, const Tensor& labels,
                                     const std::set<std::size_t>& labeled_digits,
                                     const PartialLabelCounts& counts, std::uint64_t seed,
                                     const ZPrior& z_prior);

/// Per-channel zero-mean unit-scale transform fit on labeled + unlabeled
/// observations, applied in place, inverse recorded. Zero-variance channels
/// keep scale 1 and are reported.
StandardizationRecord standardize(Dataset& data);

/// Cycling shuffled index streams over the three sub-collections.
/// next_batch() takes batch_size items from each non-empty collection.
class Batcher {
public:
    Batcher(const Dataset& data, std::size_t batch_size, std::uint64_t seed);

    MiniBatch next_batch();
    /// Batches per epoch: one pass over the labeled collection (or the first
    /// non-empty collection when no labels exist).
    std::size_t batches_per_epoch() const;

private:
    struct Stream {
        std::vector<std::size_t> order;
        std::size_t cursor = 0;
    };
    const Dataset* data_;
    std::size_t batch_size_;
    Rng rng_;
    Stream labeled_, unlabeled_, unfeatured_;

    std::size_t next_index(Stream& s, std::size_t n);
};

/// Synthetic grouped table: n_groups distinct compositions ("compounds"),
/// per_group noisy spectra each, rows tagged with group ids.
SampleTable make_group_table(const MixtureSpec& spec, std::size_t n_groups,
                             std::size_t per_group, std::uint64_t seed);

/// Grouped table at explicit compound compositions (one group per entry).
SampleTable make_group_table_at(const MixtureSpec& spec,
                                const std::vector<Tensor>& compositions,
                                std::size_t per_group, std::uint64_t seed);

// On-disk dataset directory: labeled.csv / unlabeled.csv / unfeatured.csv
// (+ meta.json with the generating spec, seed, standardization and split
// bookkeeping). samples.csv carries the full generated table when present.
struct DatasetMeta {
    std::uint64_t seed = 0;
    MixtureSpec spec;
    bool has_spec = false;
    StandardizationRecord standardization;
    std::vector<std::size_t> labeled_rows;
    std::vector<std::size_t> unlabeled_rows;
    std::size_t x_dim = 0;
    std::size_t y_dim = 0;
    std::size_t z_dim = 0;
};

void save_dataset(const std::string& dir, const Dataset& data, const DatasetMeta& meta);
Dataset load_dataset(const std::string& dir, DatasetMeta* meta_out = nullptr);

void save_sample_table(const std::string& path, const SampleTable& table);
SampleTable load_sample_table(const std::string& path);

} // namespace uvae
