#include <benchmark/benchmark.h>

#include "audformer/ops.hpp"

using namespace audformer;

namespace {

Tensor<float> random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    Tensor<float> t({r, c});
    for (std::size_t i = 0; i < t.numel(); ++i)
        t.at(i) = static_cast<float>(rng.uniform(-1.0, 1.0));
    return t;
}

void BM_matmul(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    auto a = random_matrix(n, n, rng);
    auto b = random_matrix(n, n, rng);
    for (auto _ : state) {
        auto c = matmul(a, b);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_softmax_rows(benchmark::State& state) {
    Rng rng(2);
    auto x = random_matrix(356, 356, rng);
    for (auto _ : state) {
        auto y = softmax_rows(x);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_softmax_rows);

void BM_conv1d(benchmark::State& state) {
    Rng rng(3);
    auto x = random_matrix(686, 64, rng);
    Tensor<float> kernel({5, 64, 40});
    for (std::size_t i = 0; i < kernel.numel(); ++i)
        kernel.at(i) = static_cast<float>(rng.uniform(-0.1, 0.1));
    for (auto _ : state) {
        auto y = conv1d(x, kernel, 11, 2);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_conv1d);

void BM_layer_norm(benchmark::State& state) {
    Rng rng(4);
    auto x = random_matrix(1424, 40, rng);
    auto gain = Tensor<float>::full({40}, 1.0f);
    auto bias = Tensor<float>::zeros({40});
    for (auto _ : state) {
        auto y = layer_norm(x, gain, bias, 1e-5f);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK(BM_layer_norm);

}  // namespace
