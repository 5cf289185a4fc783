#include <benchmark/benchmark.h>

#include "uvae/model.hpp"
#include "uvae/objectives.hpp"

using namespace uvae;

namespace {

ModelConfig bench_model() {
    ModelConfig cfg;
    cfg.x_dim = 32;
    cfg.y_dim = 3;
    cfg.z_dim = 1;
    cfg.hidden_y = {5};
    cfg.hidden_z = {5};
    cfg.hidden_x = {20};
    return cfg;
}

} // namespace

static void BM_ForwardPass(benchmark::State& state) {
    ModelConfig cfg = bench_model();
    ParamSet params = init_params(cfg, 1);
    Rng rng(2);
    Tensor x = rng.normal_vec(cfg.x_dim);
    for (auto _ : state) {
        DistSpec qy = encode_y(cfg, params, x);
        benchmark::DoNotOptimize(qy.mean.data.data());
    }
}
BENCHMARK(BM_ForwardPass);

static void BM_LabeledBoundWithGradient(benchmark::State& state) {
    ModelConfig cfg = bench_model();
    ParamSet params = init_params(cfg, 1);
    Rng data_rng(2);
    Tensor x = data_rng.normal_vec(cfg.x_dim);
    Tensor y = Tensor::vector({0.2, 0.5, 0.3});
    for (auto _ : state) {
        Tape tape;
        ParamVars vars = bind_params(tape, params);
        Rng rng(3);
        TermVars terms = elbo_forward_labeled_g(tape, cfg, vars, x, y, rng);
        tape.backward(terms.total);
        benchmark::DoNotOptimize(tape.adjoint(vars.at("decoder_x/mean/W")).data.data());
    }
}
BENCHMARK(BM_LabeledBoundWithGradient);

BENCHMARK_MAIN();
