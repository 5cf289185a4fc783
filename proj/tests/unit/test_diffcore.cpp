#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "doctest.h"
#include "fd_check.hpp"
#include "uvae/errors.hpp"
#include "uvae/param_set.hpp"
#include "uvae/rng.hpp"
#include "uvae/tape.hpp"

using namespace uvae;

TEST_CASE("tensor shape/data invariant") {
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), ContractError);
    Tensor t({2, 2}, {1, 2, 3, 4});
    CHECK(t.size() == 4);
    CHECK(t.extent(1) == 2);
    CHECK_THROWS_AS(Tensor::scalar(1.0).extent(3), ContractError);
    CHECK_THROWS_AS(t.scalar_value(), ContractError);
}

TEST_CASE("gradient of w^2 at w=3 is 6") {
    ParamSet params;
    params.insert("w", Tensor::scalar(3.0), Partition::Phi);
    ParamSet g = gradient(
        [](Tape& t, const ParamVars& v) { return square(v.at("w")); }, params);
    CHECK(g.at("w")[0] == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("gradient of tanh at 0.5 matches the closed form and finite differences") {
    ParamSet params;
    params.insert("w", Tensor::scalar(0.5), Partition::Phi);
    auto objective = [](Tape& t, const ParamVars& v) { return tanh(v.at("w")); };
    ParamSet g = gradient(objective, params);
    CHECK(g.at("w")[0] == doctest::Approx(0.786448).epsilon(1e-5));

    double h = 1e-6;
    double fd = (std::tanh(0.5 + h) - std::tanh(0.5 - h)) / (2 * h);
    CHECK(std::abs(g.at("w")[0] - fd) / std::abs(fd) < 1e-6);
}

TEST_CASE("gradient of a constant objective is zero") {
    ParamSet params;
    params.insert("w", Tensor::vector({1.0, -2.0, 3.0}), Partition::Phi);
    ParamSet g = gradient(
        [](Tape& t, const ParamVars& v) {
            (void)v;
            return t.constant(Tensor::scalar(4.2));
        },
        params);
    for (double v : g.at("w").data) CHECK(v == 0.0);
}

TEST_CASE("non-scalar objective is a contract violation") {
    ParamSet params;
    params.insert("w", Tensor::vector({1.0, 2.0}), Partition::Phi);
    CHECK_THROWS_AS(gradient([](Tape& t, const ParamVars& v) { return v.at("w"); }, params),
                    ContractError);
}

TEST_CASE("non-finite intermediates name the primitive") {
    Tape tape;
    Var w = tape.leaf(Tensor::scalar(-1.0));
    CHECK_THROWS_WITH_AS(log(w), doctest::Contains("log"), NumericError);
    Var big = tape.leaf(Tensor::scalar(1000.0));
    CHECK_THROWS_WITH_AS(exp(big), doctest::Contains("exp"), NumericError);
}

TEST_CASE("dense_layer examples") {
    SUBCASE("identity weights pass the input through") {
        Tensor w({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
        Tensor b = Tensor::zeros({3});
        Tensor in = Tensor::vector({0.3, -0.7, 2.0});
        Tensor out = dense_layer(w, b, in, Activation::Identity);
        for (std::size_t i = 0; i < 3; ++i) CHECK(out[i] == in[i]);
    }
    SUBCASE("zero weights give tanh of the bias") {
        Tensor w = Tensor::zeros({2, 3});
        Tensor b = Tensor::vector({0.5, -1.0});
        Tensor out = dense_layer(w, b, Tensor::vector({9, 9, 9}), Activation::Tanh);
        CHECK(out[0] == doctest::Approx(std::tanh(0.5)).epsilon(1e-15));
        CHECK(out[1] == doctest::Approx(std::tanh(-1.0)).epsilon(1e-15));
    }
    SUBCASE("scalar softplus layer") {
        Tensor w({1, 1}, {2.0});
        Tensor b = Tensor::zeros({1});
        Tensor out = dense_layer(w, b, Tensor::vector({1.0}), Activation::Softplus);
        CHECK(out[0] == doctest::Approx(2.126928).epsilon(1e-6));
    }
    SUBCASE("shape mismatch is a contract violation") {
        CHECK_THROWS_AS(dense_layer(Tensor::zeros({2, 3}), Tensor::zeros({2}),
                                    Tensor::vector({1.0}), Activation::Identity),
                        ContractError);
    }
}

namespace {

// One scalar objective exercising every primitive once.
Var all_primitives(Tape& t, const ParamVars& v) {
    Var w = v.at("w");       // length 4
    Var m = v.at("m");       // 3x4
    Var b = v.at("b");       // length 3
    Var u = v.at("u");       // length 3
    Var h = affine(m, b, w);
    Var s = softmax(h);
    Var mix = tanh(h) + softplus(h) * sigmoid(u) - exp(scale(u, 0.3));
    Var safe = log(add_const(square(s), 1.0)) + clamp(mix, -0.8, 0.9);
    Var c = concat(safe, -s);
    return sum(c) + mean(mix) + dot(s, u);
}

ParamSet random_all_primitive_params(std::uint64_t seed) {
    Rng rng(seed);
    ParamSet p;
    p.insert("w", rng.normal_vec(4), Partition::Phi);
    p.insert("m", Tensor({3, 4}, rng.normal_vec(12).data), Partition::Phi);
    p.insert("b", rng.normal_vec(3), Partition::Phi);
    p.insert("u", rng.normal_vec(3), Partition::Phi);
    return p;
}

} // namespace

TEST_CASE("every primitive matches central finite differences on random tensors") {
    for (std::uint64_t seed : {11u, 23u, 47u}) {
        ParamSet params = random_all_primitive_params(seed);
        ParamSet analytic = gradient(all_primitives, params);
        auto f = [](const ParamSet& p) {
            Tape t;
            ParamVars v = bind_params(t, p);
            return t.value(all_primitives(t, v)).scalar_value();
        };
        auto result = testsupport::fd_compare(f, params, analytic);
        INFO("seed ", seed, " worst ", result.worst_param, " ad=", result.worst_ad,
             " fd=", result.worst_fd);
        CHECK(result.pass);
        CHECK(result.checked == 4 + 12 + 3 + 3);
    }
}

TEST_CASE("gradient is linear in the objective") {
    ParamSet params = random_all_primitive_params(99);
    auto f = [](Tape& t, const ParamVars& v) { return sum(tanh(v.at("w"))) + dot(v.at("b"), v.at("u")); };
    auto g = [](Tape& t, const ParamVars& v) { return mean(square(v.at("w"))) + sum(sigmoid(v.at("u"))); };
    double a = 1.7, b = -0.4;
    ParamSet gf = gradient(f, params);
    ParamSet gg = gradient(g, params);
    ParamSet gc = gradient(
        [&](Tape& t, const ParamVars& v) { return scale(f(t, v), a) + scale(g(t, v), b); }, params);
    for (const auto& [name, tensor] : gc.values) {
        for (std::size_t i = 0; i < tensor.size(); ++i) {
            CHECK(tensor[i] ==
                  doctest::Approx(a * gf.at(name)[i] + b * gg.at(name)[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("evaluation is deterministic bit for bit") {
    ParamSet params = random_all_primitive_params(7);
    auto run = [&]() {
        Tape t;
        ParamVars v = bind_params(t, params);
        return t.value(all_primitives(t, v)).scalar_value();
    };
    double a = run();
    double b = run();
    CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);
}

TEST_CASE("param set round-trips bit-exactly through the binary format") {
    Rng rng(3);
    ParamSet params;
    params.insert("encoder_y/h0/W", Tensor({4, 3}, rng.normal_vec(12).data), Partition::Phi);
    params.insert("decoder_x/mean/b", rng.normal_vec(5), Partition::Theta);
    params.insert("odd name with spaces", Tensor::scalar(-0.0), Partition::Phi);
    std::string path = "pinned_roundtrip.bin";
    save_param_set(path, params);
    ParamSet loaded = load_param_set(path);
    REQUIRE(loaded.count() == params.count());
    for (const auto& [name, value] : params.values) {
        const Tensor& other = loaded.at(name);
        REQUIRE(other.shape == value.shape);
        CHECK(std::memcmp(other.data.data(), value.data.data(),
                          value.size() * sizeof(double)) == 0);
    }
    std::remove(path.c_str());
}

TEST_CASE("param file with bad magic is rejected with an offset") {
    std::string path = "bad_magic.bin";
    {
        std::ofstream os(path, std::ios::binary);
        os << "UXAE" << std::string(16, '\0');
    }
    try {
        load_param_set(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset == 1);
    }
    std::remove(path.c_str());
}
