#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "uvae/data.hpp"
#include "uvae/digits.hpp"
#include "uvae/errors.hpp"
#include "uvae/idx.hpp"
#include "uvae/linalg.hpp"

using namespace uvae;

TEST_CASE("resolution-10 grid over three endmembers has 66 points") {
    CHECK(simplex_grid_size(10, 3) == 66);
    MixtureSpec spec;
    spec.replicates = 1;
    spec.nuisance_levels = {1.0};
    spec.abundance_jitter = 0.0;
    spec.noise_scale = 0.0;
    SampleTable table = generate_synthetic_mixtures(spec, 1);
    CHECK(table.rows.size() == 66);
    std::set<std::vector<double>> distinct;
    for (const SampleRow& row : table.rows) distinct.insert(row.abundance.data);
    CHECK(distinct.size() == 66);
}

TEST_CASE("abundance rows sum to one") {
    MixtureSpec spec;
    spec.replicates = 2;
    SampleTable table = generate_synthetic_mixtures(spec, 7);
    for (const SampleRow& row : table.rows) {
        double total = 0.0;
        for (double v : row.abundance.data) total += v;
        CHECK(std::abs(total - 1.0) < 1e-12);
    }
}

TEST_CASE("noiseless linear corners reproduce the distorted signatures exactly") {
    MixtureSpec spec;
    spec.abundance_jitter = 0.0;
    spec.noise_scale = 0.0;
    spec.replicates = 1;
    spec.mixing = MixingLaw::Linear;
    SampleTable table = generate_synthetic_mixtures(spec, 5);
    std::size_t found = 0;
    for (const SampleRow& row : table.rows) {
        for (std::size_t k = 0; k < spec.endmembers; ++k) {
            if (row.abundance[k] == 1.0) {
                ++found;
                double level = table.spec.nuisance_levels[row.config_id];
                for (std::size_t c = 0; c < spec.channels; ++c) {
                    CHECK(row.x[c] ==
                          doctest::Approx(table.spec.signatures[k][c] * level).epsilon(1e-15));
                }
            }
        }
    }
    CHECK(found == spec.endmembers * spec.nuisance_levels.size());
}

TEST_CASE("noiseless linear abundances are recoverable by least squares") {
    MixtureSpec spec;
    spec.channels = 16;
    spec.abundance_jitter = 0.02;
    spec.noise_scale = 0.0;
    spec.nuisance_levels = {1.0};
    spec.replicates = 1;
    spec.mixing = MixingLaw::Linear;
    SampleTable table = generate_synthetic_mixtures(spec, 9);
    // Solve S a = x in the least-squares sense per row.
    std::size_t k = spec.endmembers;
    Tensor sts = Tensor::zeros({k, k});
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < spec.channels; ++c) {
                acc += table.spec.signatures[i][c] * table.spec.signatures[j][c];
            }
            sts.data[i * k + j] = acc;
        }
    }
    for (const SampleRow& row : table.rows) {
        Tensor stx = Tensor::zeros({k});
        for (std::size_t i = 0; i < k; ++i) {
            double acc = 0.0;
            for (std::size_t c = 0; c < spec.channels; ++c) {
                acc += table.spec.signatures[i][c] * row.x[c];
            }
            stx[i] = acc;
        }
        Tensor a = solve_linear(sts, stx);
        for (std::size_t i = 0; i < k; ++i) {
            CHECK(a[i] == doctest::Approx(row.abundance[i]).epsilon(1e-8));
        }
    }
}

TEST_CASE("generation is a pure function of spec and seed") {
    MixtureSpec spec;
    spec.replicates = 3;
    spec.corrupt_fraction = 0.05;
    SampleTable a = generate_synthetic_mixtures(spec, 21);
    SampleTable b = generate_synthetic_mixtures(spec, 21);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(std::memcmp(a.rows[i].x.data.data(), b.rows[i].x.data.data(),
                          a.rows[i].x.size() * sizeof(double)) == 0);
        CHECK(a.rows[i].corrupted == b.rows[i].corrupted);
    }
    SampleTable c = generate_synthetic_mixtures(spec, 22);
    bool differs = false;
    for (std::size_t i = 0; i < a.rows.size() && !differs; ++i) {
        if (a.rows[i].x.data != c.rows[i].x.data) differs = true;
    }
    CHECK(differs);
}

TEST_CASE("simplex split: exclusions, defaults, disjointness") {
    MixtureSpec spec;
    spec.replicates = 8;  // 66*3*8 = 1584 rows, 1512 interior
    SampleTable table = generate_synthetic_mixtures(spec, 2);
    SplitCounts counts;  // 500 / 992 / 501
    ZPrior zp;
    SplitResult split = make_simplex_split(table, 0.15, counts, 31, zp);

    CHECK(split.dataset.labeled.size() == 500);
    CHECK(split.dataset.unlabeled_x.size() == 992);
    CHECK(split.dataset.unfeatured.size() == 501);

    auto l1_to_vertex = [](const Tensor& a, std::size_t v) {
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - (i == v ? 1.0 : 0.0));
        return d;
    };
    for (std::size_t idx : split.labeled_rows) {
        for (std::size_t v = 0; v < 3; ++v) {
            CHECK(l1_to_vertex(table.rows[idx].abundance, v) > 0.15);
        }
    }
    std::set<std::size_t> labeled_set(split.labeled_rows.begin(), split.labeled_rows.end());
    for (std::size_t idx : split.unlabeled_rows) CHECK(labeled_set.count(idx) == 0);

    // Unfeatured labels hug the vertices and carry a prior nuisance draw.
    for (const auto& item : split.dataset.unfeatured) {
        double best = 1e9;
        for (std::size_t v = 0; v < 3; ++v) best = std::min(best, l1_to_vertex(item.y, v));
        CHECK(best <= 0.15 + 1e-12);
        REQUIRE(item.z.has_value());
        CHECK((*item.z)[0] >= -1.5);
        CHECK((*item.z)[0] <= 1.5);
    }
    split.dataset.validate(-1.5, 1.5);

    SUBCASE("infeasible counts are rejected") {
        SplitCounts too_many{2000, 2000, 10};
        CHECK_THROWS_AS(make_simplex_split(table, 0.15, too_many, 1, zp), ContractError);
    }
}

TEST_CASE("partial-label split") {
    DigitSet digits = generate_synthetic_digits(300, 9);
    Tensor images01 = digits.images;
    for (double& v : images01.data) v /= 255.0;
    std::set<std::size_t> labeled_digits{0, 1, 2, 3, 4};
    PartialLabelCounts counts{60, 25};
    ZPrior zp;
    SplitResult split =
        make_partial_label_split(images01, digits.labels, labeled_digits, counts, 13, zp);

    CHECK(split.dataset.labeled.size() == 60);
    CHECK(split.dataset.unlabeled_x.size() == 300);
    CHECK(split.dataset.unfeatured.size() == 25);
    for (const auto& [x, y] : split.dataset.labeled) {
        std::size_t digit = 0;
        for (std::size_t d = 0; d < 10; ++d) {
            if (y[d] == 1.0) digit = d;
        }
        CHECK(labeled_digits.count(digit) == 1);
    }
    // All ten one-hots appear, as exact corners.
    std::set<std::size_t> seen;
    for (const auto& item : split.dataset.unfeatured) {
        double total = 0.0;
        for (std::size_t d = 0; d < 10; ++d) {
            CHECK((item.y[d] == 0.0 || item.y[d] == 1.0));
            total += item.y[d];
            if (item.y[d] == 1.0) seen.insert(d);
        }
        CHECK(total == 1.0);
    }
    CHECK(seen.size() == 10);
    CHECK_THROWS_AS(make_partial_label_split(images01, digits.labels, {}, counts, 1, zp),
                    ContractError);
}

TEST_CASE("idx codec") {
    SUBCASE("constructed 1x2x2 fixture") {
        Tensor img = Tensor({1, 2, 2}, {0, 255, 128, 64});
        write_idx("fixture.idx", img);
        Tensor back = load_idx("fixture.idx");
        REQUIRE(back.shape == std::vector<std::size_t>{1, 2, 2});
        CHECK(back[0] == 0.0);
        CHECK(back[1] == 1.0);
        CHECK(back[2] == doctest::Approx(128.0 / 255).epsilon(1e-15));
        CHECK(back[3] == doctest::Approx(64.0 / 255).epsilon(1e-15));
        std::remove("fixture.idx");
    }
    SUBCASE("wrong type byte fails at offset 2") {
        std::ofstream os("bad.idx", std::ios::binary);
        const unsigned char bytes[] = {0x00, 0x00, 0x09, 0x01, 0, 0, 0, 1, 42};
        os.write(reinterpret_cast<const char*>(bytes), sizeof(bytes));
        os.close();
        try {
            load_idx("bad.idx");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.offset == 2);
        }
        std::remove("bad.idx");
    }
    SUBCASE("nonzero magic fails at its offset") {
        std::ofstream os("bad2.idx", std::ios::binary);
        const unsigned char bytes[] = {0x00, 0x07, 0x08, 0x01, 0, 0, 0, 1, 42};
        os.write(reinterpret_cast<const char*>(bytes), sizeof(bytes));
        os.close();
        try {
            load_idx("bad2.idx");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.offset == 1);
        }
        std::remove("bad2.idx");
    }
    SUBCASE("truncated payload reports the byte offset") {
        std::ofstream os("trunc.idx", std::ios::binary);
        const unsigned char bytes[] = {0x00, 0x00, 0x08, 0x01, 0, 0, 0, 4, 1, 2};
        os.write(reinterpret_cast<const char*>(bytes), sizeof(bytes));
        os.close();
        CHECK_THROWS_AS(load_idx("trunc.idx"), ParseError);
        std::remove("trunc.idx");
    }
    SUBCASE("rank-1 round trip is exact") {
        Rng rng(3);
        Tensor labels = Tensor::zeros({64});
        for (double& v : labels.data) v = std::floor(rng.uniform(0.0, 256.0));
        write_idx("labels.idx", labels);
        Tensor back = load_idx("labels.idx");
        REQUIRE(back.size() == 64);
        for (std::size_t i = 0; i < 64; ++i) CHECK(back[i] == labels[i]);
        std::remove("labels.idx");
    }
}

TEST_CASE("standardize") {
    MixtureSpec spec;
    spec.replicates = 2;
    SampleTable table = generate_synthetic_mixtures(spec, 4);
    SplitCounts counts{40, 40, 10};
    ZPrior zp;
    SplitResult split = make_simplex_split(table, 0.15, counts, 8, zp);
    Dataset original = split.dataset;
    StandardizationRecord rec = standardize(split.dataset);

    SUBCASE("channel means become zero") {
        std::size_t c = spec.channels;
        Tensor mean = Tensor::zeros({c});
        std::size_t n = 0;
        for (const auto& [x, y] : split.dataset.labeled) {
            for (std::size_t i = 0; i < c; ++i) mean[i] += x[i];
            ++n;
        }
        for (const Tensor& x : split.dataset.unlabeled_x) {
            for (std::size_t i = 0; i < c; ++i) mean[i] += x[i];
            ++n;
        }
        for (std::size_t i = 0; i < c; ++i) {
            CHECK(std::abs(mean[i] / static_cast<double>(n)) < 1e-10);
        }
    }
    SUBCASE("inverse undoes the transform") {
        for (std::size_t i = 0; i < original.labeled.size(); ++i) {
            Tensor back = rec.invert(split.dataset.labeled[i].first);
            for (std::size_t cidx = 0; cidx < back.size(); ++cidx) {
                CHECK(back[cidx] ==
                      doctest::Approx(original.labeled[i].first[cidx]).epsilon(1e-10));
            }
        }
    }
    SUBCASE("standardizing standardized data is a fixed point") {
        Dataset again = split.dataset;
        StandardizationRecord rec2 = standardize(again);
        for (std::size_t i = 0; i < again.labeled.size(); ++i) {
            for (std::size_t cidx = 0; cidx < spec.channels; ++cidx) {
                CHECK(std::abs(again.labeled[i].first[cidx] -
                               split.dataset.labeled[i].first[cidx]) < 1e-10);
            }
        }
        (void)rec2;
    }
    SUBCASE("zero-variance channels keep scale one and are reported") {
        Dataset flat;
        for (int i = 0; i < 5; ++i) {
            flat.unlabeled_x.push_back(Tensor::vector({1.0, static_cast<double>(i)}));
        }
        StandardizationRecord r = standardize(flat);
        REQUIRE(r.zero_variance_channels.size() == 1);
        CHECK(r.zero_variance_channels[0] == 0);
        CHECK(r.scale[0] == 1.0);
    }
}

TEST_CASE("dataset directory round trip") {
    MixtureSpec spec;
    spec.replicates = 2;
    SampleTable table = generate_synthetic_mixtures(spec, 14);
    SplitCounts counts{30, 40, 20};
    ZPrior zp;
    SplitResult split = make_simplex_split(table, 0.15, counts, 6, zp);
    standardize(split.dataset);

    DatasetMeta meta;
    meta.seed = 14;
    meta.spec = table.spec;
    meta.has_spec = true;
    meta.standardization = split.dataset.standardization;
    meta.labeled_rows = split.labeled_rows;
    meta.unlabeled_rows = split.unlabeled_rows;
    meta.x_dim = spec.channels;
    meta.y_dim = spec.endmembers;
    meta.z_dim = 1;

    std::string dir = "dataset_rt";
    save_dataset(dir, split.dataset, meta);
    save_sample_table(dir + "/samples.csv", table);

    DatasetMeta meta2;
    Dataset back = load_dataset(dir, &meta2);
    REQUIRE(back.labeled.size() == 30);
    REQUIRE(back.unlabeled_x.size() == 40);
    REQUIRE(back.unfeatured.size() == 20);
    CHECK(meta2.seed == 14);
    CHECK(meta2.has_spec);
    CHECK(meta2.labeled_rows == meta.labeled_rows);
    for (std::size_t i = 0; i < back.labeled.size(); ++i) {
        CHECK(std::memcmp(back.labeled[i].first.data.data(),
                          split.dataset.labeled[i].first.data.data(),
                          spec.channels * sizeof(double)) == 0);
    }
    SampleTable table2 = load_sample_table(dir + "/samples.csv");
    REQUIRE(table2.rows.size() == table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        CHECK(table2.rows[i].config_id == table.rows[i].config_id);
        CHECK(std::memcmp(table2.rows[i].x.data.data(), table.rows[i].x.data.data(),
                          spec.channels * sizeof(double)) == 0);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("grouped table construction") {
    MixtureSpec spec;
    SampleTable table = make_group_table(spec, 6, 20, 51);
    CHECK(table.rows.size() == 120);
    std::set<std::size_t> groups;
    for (const SampleRow& row : table.rows) groups.insert(row.group_id);
    CHECK(groups.size() == 6);
    // Group compositions are distinct.
    std::vector<Tensor> reps(6, Tensor());
    for (const SampleRow& row : table.rows) {
        if (reps[row.group_id].size() == 0) reps[row.group_id] = row.abundance;
    }
    for (std::size_t a = 0; a < 6; ++a) {
        for (std::size_t b = a + 1; b < 6; ++b) {
            double d = 0.0;
            for (std::size_t i = 0; i < 3; ++i) d += std::abs(reps[a][i] - reps[b][i]);
            CHECK(d > 0.1);
        }
    }
}

TEST_CASE("synthetic digits look like their class and are reproducible") {
    DigitSet a = generate_synthetic_digits(50, 4);
    DigitSet b = generate_synthetic_digits(50, 4);
    CHECK(std::memcmp(a.images.data.data(), b.images.data.data(),
                      a.images.size() * sizeof(double)) == 0);
    CHECK(a.images.extent(1) == 28);
    for (double v : a.labels.data) CHECK(v <= 9.0);
    // Same class renders closer to itself than to a different class on
    // average (shift jitter notwithstanding).
    for (double v : a.images.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 255.0);
    }
}

TEST_CASE("grouped table at explicit compositions") {
    MixtureSpec spec;
    spec.channels = 8;
    std::vector<Tensor> comps{Tensor::vector({0.7, 0.2, 0.1}), Tensor::vector({0.1, 0.3, 0.6})};
    SampleTable table = make_group_table_at(spec, comps, 5, 3);
    REQUIRE(table.rows.size() == 10);
    for (const SampleRow& row : table.rows) {
        const Tensor& anchor = comps[row.group_id];
        double d = 0.0;
        for (std::size_t i = 0; i < 3; ++i) d += std::abs(row.abundance[i] - anchor[i]);
        CHECK(d < 3 * spec.abundance_jitter + 1e-9);
    }
    CHECK_THROWS_AS(make_group_table_at(spec, {comps[0]}, 5, 3), ContractError);
    CHECK_THROWS_AS(
        make_group_table_at(spec, {comps[0], Tensor::vector({0.5, 0.6, -0.1})}, 5, 3),
        ContractError);
}
