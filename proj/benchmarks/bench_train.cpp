#include <benchmark/benchmark.h>

#include "uvae/data.hpp"
#include "uvae/trainer.hpp"

using namespace uvae;

static void BM_TrainStep(benchmark::State& state) {
    MixtureSpec spec;
    spec.channels = 32;
    spec.replicates = 2;
    SampleTable table = generate_synthetic_mixtures(spec, 1);
    ZPrior zp;
    SplitResult split = make_simplex_split(table, 0.15, SplitCounts{100, 100, 50}, 1, zp);
    standardize(split.dataset);

    ModelConfig cfg;
    cfg.x_dim = 32;
    cfg.y_dim = 3;
    cfg.z_dim = 1;
    cfg.hidden_y = {5};
    cfg.hidden_z = {5};
    cfg.hidden_x = {20};
    ParamSet params = init_params(cfg, 1);
    OptimizerState opt = make_optimizer_state(params, 0.003);
    Batcher batcher(split.dataset, static_cast<std::size_t>(state.range(0)), 7);
    ObjectiveCoefficients coeffs;
    Rng rng(9);
    for (auto _ : state) {
        MiniBatch batch = batcher.next_batch();
        StepResult r = train_step(cfg, batch, params, opt, coeffs,
                                  UnfeaturedVariant::ObservedZ, rng);
        params = std::move(r.params);
        opt = std::move(r.state);
    }
}
BENCHMARK(BM_TrainStep)->Arg(10)->Arg(100);
