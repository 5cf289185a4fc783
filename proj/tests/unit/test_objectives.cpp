#include <cmath>
#include <cstring>

#include "doctest.h"
#include "fd_check.hpp"
#include "oracle.hpp"
#include "pinned.hpp"
#include "uvae/errors.hpp"
#include "uvae/objectives.hpp"

using namespace uvae;
using testsupport::make_pinned;
using testsupport::tiny_config;
using oracle::Vec;

namespace {

// Mirrors the documented draw order of the objective builders so the oracle
// receives exactly the noise the implementation consumes.
struct NoiseMirror {
    Rng rng;
    explicit NoiseMirror(std::uint64_t seed) : rng(seed) {}
    Vec normal(std::size_t n) { return rng.normal_vec(n).data; }
    Vec gumbel(std::size_t n) { return rng.gumbel_vec(n).data; }
    Vec uniform(std::size_t n, double lo, double hi) { return rng.uniform_vec(n, lo, hi).data; }
};

double breakdown_sum(const ElboEstimate& est) {
    double total = 0.0;
    for (const auto& [name, v] : est.breakdown) total += v;
    return total;
}

const Tensor kX = Tensor::vector({0.4, -0.9});
const Tensor kY = Tensor::vector({0.35, 0.65});
const Tensor kYCorner = Tensor::vector({1.0, 0.0});

} // namespace

TEST_CASE("labeled forward bound matches the scripted oracle on pinned models") {
    for (bool concrete : {false, true}) {
        for (bool bernoulli : {false, true}) {
            ModelConfig cfg = tiny_config();
            if (concrete) cfg.y_family = Family::Concrete;
            if (bernoulli) cfg.x_family = Family::Bernoulli;
            auto pinned = make_pinned(cfg);
            Tensor x = bernoulli ? Tensor::vector({0.8, 0.1}) : kX;

            Rng rng(101);
            ElboEstimate est = elbo_forward_labeled(cfg, pinned.params, x, kY, rng);
            NoiseMirror mirror(101);
            double expected = oracle::eq7(pinned.model, x.data, kY.data, mirror.normal(1));
            CHECK(est.value == doctest::Approx(expected).epsilon(1e-9));
            CHECK(std::abs(est.value - breakdown_sum(est)) < 1e-10);
            CHECK(est.noise.seed == 101);
        }
    }
}

TEST_CASE("unlabeled forward bound matches the scripted oracle") {
    for (bool concrete : {false, true}) {
        ModelConfig cfg = tiny_config();
        if (concrete) cfg.y_family = Family::Concrete;
        auto pinned = make_pinned(cfg);

        Rng rng(202);
        ElboEstimate est = elbo_forward_unlabeled(cfg, pinned.params, kX, rng);
        NoiseMirror mirror(202);
        Vec eps_y = concrete ? mirror.gumbel(2) : mirror.normal(2);
        double expected = oracle::eq8(pinned.model, kX.data, eps_y, mirror.normal(1));
        CHECK(est.value == doctest::Approx(expected).epsilon(1e-9));
        CHECK(std::abs(est.value - breakdown_sum(est)) < 1e-10);
    }
}

TEST_CASE("labeled reverse bound matches the scripted oracle and carries the flat-prior constant") {
    ModelConfig cfg = tiny_config();
    auto pinned = make_pinned(cfg);
    Rng rng(303);
    ElboEstimate est = elbo_reverse_labeled(cfg, pinned.params, kX, kY, rng);
    NoiseMirror mirror(303);
    double expected =
        oracle::eq9(pinned.model, kX.data, kY.data, mirror.uniform(1, cfg.z_lo, cfg.z_hi));
    CHECK(est.value == doctest::Approx(expected).epsilon(1e-9));
    for (const auto& [name, v] : est.breakdown) {
        if (name == "log_q_x") {
            CHECK(v == doctest::Approx(-2.0 * std::log(2.0 * cfg.gamma)).epsilon(1e-15));
        }
    }
}

TEST_CASE("unfeatured reverse bound: all three variants match the scripted oracle") {
    ModelConfig cfg = tiny_config();
    cfg.use_aux = true;
    auto pinned = make_pinned(cfg);
    Tensor z_u = Tensor::vector({0.55});

    SUBCASE("latent_z") {
        Rng rng(404);
        ElboEstimate est = elbo_reverse_unfeatured(cfg, pinned.params, kY, nullptr,
                                                   UnfeaturedVariant::LatentZ, rng);
        NoiseMirror mirror(404);
        Vec z = mirror.uniform(1, cfg.z_lo, cfg.z_hi);
        double expected = oracle::eq10_latent(pinned.model, kY.data, z, mirror.normal(2));
        CHECK(est.value == doctest::Approx(expected).epsilon(1e-9));
    }
    SUBCASE("observed_z") {
        Rng rng(505);
        ElboEstimate est = elbo_reverse_unfeatured(cfg, pinned.params, kY, &z_u,
                                                   UnfeaturedVariant::ObservedZ, rng);
        NoiseMirror mirror(505);
        double expected = oracle::eq20_observed(pinned.model, kY.data, z_u.data, mirror.normal(2));
        CHECK(est.value == doctest::Approx(expected).epsilon(1e-9));
    }
    SUBCASE("observed_z requires the nuisance value") {
        Rng rng(1);
        CHECK_THROWS_AS(elbo_reverse_unfeatured(cfg, pinned.params, kY, nullptr,
                                                UnfeaturedVariant::ObservedZ, rng),
                        ContractError);
    }
    SUBCASE("aux_z") {
        Rng rng(606);
        ElboEstimate est = elbo_reverse_unfeatured(cfg, pinned.params, kY, nullptr,
                                                   UnfeaturedVariant::AuxZ, rng);
        NoiseMirror mirror(606);
        Vec eps_aux = mirror.normal(1);
        double expected = oracle::eq21_aux(pinned.model, kY.data, eps_aux, mirror.normal(2));
        CHECK(est.value == doctest::Approx(expected).epsilon(1e-9));
    }
    SUBCASE("aux_z without the network configured is rejected") {
        ModelConfig no_aux = tiny_config();
        auto p2 = make_pinned(no_aux);
        Rng rng(1);
        CHECK_THROWS_AS(elbo_reverse_unfeatured(no_aux, p2.params, kY, nullptr,
                                                UnfeaturedVariant::AuxZ, rng),
                        ContractError);
    }
    SUBCASE("one-hot unfeatured labels stay finite via the categorical mass") {
        Rng rng(707);
        ElboEstimate est = elbo_reverse_unfeatured(cfg, pinned.params, kYCorner, &z_u,
                                                   UnfeaturedVariant::ObservedZ, rng);
        CHECK(std::isfinite(est.value));
    }
}

TEST_CASE("latent and observed variants differ by the prior term when the draw agrees") {
    ModelConfig cfg = tiny_config();
    auto pinned = make_pinned(cfg);
    std::uint64_t seed = 808;

    Rng latent_rng(seed);
    ElboEstimate latent = elbo_reverse_unfeatured(cfg, pinned.params, kY, nullptr,
                                                  UnfeaturedVariant::LatentZ, latent_rng);
    // Recover the z the latent variant drew, then replay only the
    // observation noise for the observed variant.
    Rng replay(seed);
    Tensor z = replay.uniform_vec(1, cfg.z_lo, cfg.z_hi);
    ElboEstimate observed = elbo_reverse_unfeatured(cfg, pinned.params, kY, &z,
                                                    UnfeaturedVariant::ObservedZ, replay);
    double log_pz = -std::log(cfg.z_hi - cfg.z_lo);
    CHECK(latent.value == doctest::Approx(observed.value - log_pz).epsilon(1e-12));
}

TEST_CASE("auxiliary consistency KL") {
    ModelConfig cfg = tiny_config();
    cfg.use_aux = true;
    auto pinned = make_pinned(cfg);

    SUBCASE("matches the scripted oracle at S=2") {
        Rng rng(909);
        double got = aux_consistency_kl(cfg, pinned.params, kY, 2, rng);
        NoiseMirror mirror(909);
        std::vector<Vec> eps_aux, eps_x;
        for (int s = 0; s < 2; ++s) {
            eps_aux.push_back(mirror.normal(1));
            eps_x.push_back(mirror.normal(2));
        }
        CHECK(got == doctest::Approx(oracle::eq22(pinned.model, kY.data, eps_aux, eps_x))
                         .epsilon(1e-9));
    }
    SUBCASE("zero exactly when the mixture components collapse onto q(z|y)") {
        ParamSet zeroed = pinned.params;
        for (auto& [name, t] : zeroed.values) {
            for (double& v : t.data) v = 0.0;
        }
        Rng rng(11);
        CHECK(aux_consistency_kl(cfg, zeroed, kY, 4, rng) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("non-negative up to Monte Carlo noise on random models") {
        for (std::uint64_t seed : {21u, 22u, 23u}) {
            ParamSet p = init_params(cfg, seed);
            Rng rng(seed);
            CHECK(aux_consistency_kl(cfg, p, kY, 8, rng) > -0.5);
        }
    }
    SUBCASE("sample_count below one is rejected") {
        Rng rng(1);
        CHECK_THROWS_AS(aux_consistency_kl(cfg, pinned.params, kY, 0, rng), ContractError);
    }
}

TEST_CASE("discriminative losses match the scripted oracle and their fixed points") {
    ModelConfig cfg = tiny_config();
    auto pinned = make_pinned(cfg);

    Rng rng(111);
    auto [loss_y, loss_x] = discriminative_losses(cfg, pinned.params, kX, kY, rng);
    NoiseMirror mirror(111);
    Vec z_prior = mirror.uniform(1, cfg.z_lo, cfg.z_hi);
    CHECK(loss_y == doctest::Approx(oracle::eq13_loss_y(pinned.model, kX.data, kY.data))
                        .epsilon(1e-10));
    CHECK(loss_x ==
          doctest::Approx(oracle::eq14_loss_x(pinned.model, kX.data, kY.data, z_prior))
              .epsilon(1e-10));

    SUBCASE("loss_y is zero when the prediction equals the target") {
        Tensor y_bar = dist_mean(encode_y(cfg, pinned.params, kX));
        Rng r2(112);
        auto [ly, lx] = discriminative_losses(cfg, pinned.params, kX, y_bar, r2);
        CHECK(ly == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("loss_x is zero when the observation equals the decoder mean") {
        Rng peek(113);
        Tensor z = peek.uniform_vec(1, cfg.z_lo, cfg.z_hi);
        Tensor x_bar = dist_mean(decode_x(cfg, pinned.params, kY, z));
        Rng r2(113);
        auto [ly, lx] = discriminative_losses(cfg, pinned.params, x_bar, kY, r2);
        CHECK(lx == doctest::Approx(0.0).epsilon(1e-14));
    }
}

TEST_CASE("multi-sample estimates average aligned single-sample estimates") {
    ModelConfig cfg = tiny_config();
    auto pinned = make_pinned(cfg);
    Rng rng(222);
    ElboEstimate est3 = elbo_forward_labeled(cfg, pinned.params, kX, kY, rng, 3);
    Rng manual(222);
    double acc = 0.0;
    for (int s = 0; s < 3; ++s) acc += elbo_forward_labeled(cfg, pinned.params, kX, kY, manual).value;
    CHECK(est3.value == doctest::Approx(acc / 3.0).epsilon(1e-12));
}

TEST_CASE("combined objective matches the scripted oracle on a mixed batch") {
    ModelConfig cfg = tiny_config();
    cfg.use_aux = true;
    auto pinned = make_pinned(cfg);

    MiniBatch batch;
    batch.labeled.push_back({kX, kY});
    batch.labeled.push_back({Tensor::vector({-0.2, 0.3}), Tensor::vector({0.6, 0.4})});
    batch.unlabeled_x.push_back(Tensor::vector({0.15, 0.8}));
    MiniBatch::UnfeaturedItem item;
    item.y = Tensor::vector({0.2, 0.8});
    item.z = Tensor::vector({0.4});
    batch.unfeatured.push_back(item);

    ObjectiveCoefficients coeffs;
    coeffs.alpha_f = 1.0;
    coeffs.alpha_f_d = 1.0;
    coeffs.alpha_r = 0.01;
    coeffs.alpha_r_d = 1.0;

    for (int variant_id : {0, 1, 2}) {
        UnfeaturedVariant variant = variant_id == 0   ? UnfeaturedVariant::LatentZ
                                    : variant_id == 1 ? UnfeaturedVariant::ObservedZ
                                                      : UnfeaturedVariant::AuxZ;
        Rng rng(333);
        ObjectiveMetrics metrics;
        double j = total_objective(cfg, pinned.params, batch, coeffs, variant, rng, &metrics);

        NoiseMirror mirror(333);
        std::vector<oracle::LabeledNoise> labeled_noise;
        for (std::size_t i = 0; i < batch.labeled.size(); ++i) {
            oracle::LabeledNoise n;
            n.eps_z = mirror.normal(1);
            n.z_prior = mirror.uniform(1, cfg.z_lo, cfg.z_hi);
            labeled_noise.push_back(std::move(n));
        }
        std::vector<oracle::UnlabeledNoise> unlabeled_noise;
        {
            oracle::UnlabeledNoise n;
            n.eps_y = mirror.normal(2);
            n.eps_z = mirror.normal(1);
            unlabeled_noise.push_back(std::move(n));
        }
        std::vector<oracle::UnfeaturedNoise> unfeatured_noise;
        {
            oracle::UnfeaturedNoise n;
            if (variant_id == 0) {
                n.z = mirror.uniform(1, cfg.z_lo, cfg.z_hi);
            } else if (variant_id == 2) {
                n.eps_aux = mirror.normal(1);
            }
            n.eps_x = mirror.normal(2);
            unfeatured_noise.push_back(std::move(n));
        }
        std::vector<std::pair<Vec, Vec>> labeled;
        for (const auto& [x, y] : batch.labeled) labeled.push_back({x.data, y.data});
        std::vector<Vec> unlabeled{batch.unlabeled_x[0].data};
        std::vector<oracle::UnfeaturedItem> unfeatured;
        {
            oracle::UnfeaturedItem u;
            u.y = item.y.data;
            u.z_u = item.z->data;
            unfeatured.push_back(std::move(u));
        }
        oracle::Coeffs oc{coeffs.alpha_f, coeffs.alpha_f_d, coeffs.alpha_r, coeffs.alpha_r_d};
        double expected = oracle::eq15(pinned.model, labeled, unlabeled, unfeatured, oc,
                                       variant_id, labeled_noise, unlabeled_noise,
                                       unfeatured_noise);
        INFO("variant ", variant_id);
        CHECK(j == doctest::Approx(expected).epsilon(1e-8));
        CHECK(metrics.n_labeled == 2);
        CHECK(metrics.n_unlabeled == 1);
        CHECK(metrics.n_unfeatured == 1);
    }
}

TEST_CASE("zero coefficients give a zero objective; empty batches warn") {
    ModelConfig cfg = tiny_config();
    auto pinned = make_pinned(cfg);
    MiniBatch batch;
    batch.labeled.push_back({kX, kY});
    ObjectiveCoefficients zero{0.0, 0.0, 0.0, 0.0};
    Rng rng(1);
    ObjectiveMetrics metrics;
    CHECK(total_objective(cfg, pinned.params, batch, zero, UnfeaturedVariant::LatentZ, rng,
                          &metrics) == 0.0);

    MiniBatch empty;
    ObjectiveCoefficients coeffs;
    Rng rng2(2);
    CHECK(total_objective(cfg, pinned.params, empty, coeffs, UnfeaturedVariant::LatentZ, rng2,
                          &metrics) == 0.0);
    CHECK(metrics.empty_batch_warning);
}

TEST_CASE("zeroing the reverse weights reduces the objective to the forward terms") {
    ModelConfig cfg = tiny_config();
    auto pinned = make_pinned(cfg);
    MiniBatch batch;
    batch.labeled.push_back({kX, kY});
    batch.unlabeled_x.push_back(Tensor::vector({0.15, 0.8}));
    batch.unlabeled_x.push_back(Tensor::vector({-0.4, 0.2}));

    ObjectiveCoefficients m2{2.0, 0.0, 0.0, 0.0};
    Rng rng(444);
    double j = total_objective(cfg, pinned.params, batch, m2, UnfeaturedVariant::LatentZ, rng);

    Rng manual(444);
    double expected = 2.0 * elbo_forward_labeled(cfg, pinned.params, kX, kY, manual).value;
    expected += 2.0 * elbo_forward_unlabeled(cfg, pinned.params, batch.unlabeled_x[0], manual).value;
    expected += 2.0 * elbo_forward_unlabeled(cfg, pinned.params, batch.unlabeled_x[1], manual).value;
    CHECK(j == doctest::Approx(expected).epsilon(1e-12));
}

namespace {

// Rebuildable combined objective with frozen noise, for finite differences.
double eval_objective(const ModelConfig& cfg, const ParamSet& params, const MiniBatch& batch,
                      const ObjectiveCoefficients& coeffs, UnfeaturedVariant variant,
                      std::uint64_t seed) {
    Rng rng(seed);
    return total_objective(cfg, params, batch, coeffs, variant, rng);
}

} // namespace

TEST_CASE("objective gradients match finite differences on the pinned model") {
    ModelConfig cfg = tiny_config();
    cfg.use_aux = true;
    auto pinned = make_pinned(cfg);
    MiniBatch batch;
    batch.labeled.push_back({kX, kY});
    batch.unlabeled_x.push_back(Tensor::vector({0.15, 0.8}));
    MiniBatch::UnfeaturedItem item;
    item.y = Tensor::vector({0.2, 0.8});
    item.z = Tensor::vector({0.4});
    batch.unfeatured.push_back(item);
    ObjectiveCoefficients coeffs{1.0, 1.0, 0.5, 1.0};

    for (UnfeaturedVariant variant :
         {UnfeaturedVariant::LatentZ, UnfeaturedVariant::ObservedZ, UnfeaturedVariant::AuxZ}) {
        std::uint64_t seed = 555;
        ParamSet analytic = gradient(
            [&](Tape& t, const ParamVars& v) {
                Rng rng(seed);
                return total_objective_g(t, cfg, v, batch, coeffs, variant, rng).j;
            },
            pinned.params);
        auto f = [&](const ParamSet& p) {
            return eval_objective(cfg, p, batch, coeffs, variant, seed);
        };
        auto result = testsupport::fd_compare(f, pinned.params, analytic);
        INFO("variant ", variant_to_string(variant), " worst ", result.worst_param, " ad=",
             result.worst_ad, " fd=", result.worst_fd);
        CHECK(result.pass);
    }
}

TEST_CASE("changing the flat-prior width shifts the value but not the gradient") {
    ModelConfig cfg = tiny_config();
    auto pinned = make_pinned(cfg);
    MiniBatch batch;
    batch.labeled.push_back({kX, kY});
    MiniBatch::UnfeaturedItem item;
    item.y = Tensor::vector({0.2, 0.8});
    item.z = Tensor::vector({0.4});
    batch.unfeatured.push_back(item);
    ObjectiveCoefficients coeffs{1.0, 1.0, 0.5, 1.0};

    ModelConfig wide = cfg;
    wide.gamma = 100.0;

    std::uint64_t seed = 666;
    double j_narrow = eval_objective(cfg, pinned.params, batch, coeffs,
                                     UnfeaturedVariant::ObservedZ, seed);
    double j_wide = eval_objective(wide, pinned.params, batch, coeffs,
                                   UnfeaturedVariant::ObservedZ, seed);
    CHECK(j_narrow != j_wide);

    auto grad_for = [&](const ModelConfig& c) {
        return gradient(
            [&](Tape& t, const ParamVars& v) {
                Rng rng(seed);
                return total_objective_g(t, c, v, batch, coeffs, UnfeaturedVariant::ObservedZ, rng)
                    .j;
            },
            pinned.params);
    };
    ParamSet g_narrow = grad_for(cfg);
    ParamSet g_wide = grad_for(wide);
    for (const auto& [name, t] : g_narrow.values) {
        const Tensor& other = g_wide.at(name);
        CHECK(std::memcmp(t.data.data(), other.data.data(), t.size() * sizeof(double)) == 0);
    }
}
