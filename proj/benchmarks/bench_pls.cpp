#include <benchmark/benchmark.h>

#include "uvae/pls.hpp"
#include "uvae/rng.hpp"

using namespace uvae;

static void BM_PlsFit(benchmark::State& state) {
    Rng rng(1);
    std::size_t n = 500, p = static_cast<std::size_t>(state.range(0)), q = 3;
    Tensor x = Tensor({n, p}, rng.normal_vec(n * p).data);
    Tensor y = Tensor({n, q}, rng.normal_vec(n * q).data);
    for (auto _ : state) {
        PlsModel model = pls_fit(x, y, 8);
        benchmark::DoNotOptimize(model.coefficients.data.data());
    }
}
BENCHMARK(BM_PlsFit)->Arg(32)->Arg(165);
