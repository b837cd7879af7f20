#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "audformer/features.hpp"

using namespace audformer;

namespace {

Waveform bench_tone(double seconds) {
    Waveform w;
    w.samples.resize(static_cast<std::size_t>(seconds * 44100.0));
    for (std::size_t i = 0; i < w.samples.size(); ++i)
        w.samples[i] = 0.5 * std::sin(2.0 * std::numbers::pi * 523.25 * i / 44100.0);
    return w;
}

void BM_stft(benchmark::State& state) {
    auto w = bench_tone(5.0);
    FrameSpec spec;
    for (auto _ : state) {
        auto s = stft(w, spec);
        benchmark::DoNotOptimize(s.values.data());
    }
}
BENCHMARK(BM_stft);

void BM_extract_all(benchmark::State& state) {
    auto w = bench_tone(static_cast<double>(state.range(0)));
    FeatureConfig cfg;
    for (auto _ : state) {
        auto fs = extract_all(w, cfg);
        benchmark::DoNotOptimize(fs.domains[0].data.data());
    }
}
BENCHMARK(BM_extract_all)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_cqt(benchmark::State& state) {
    auto w = bench_tone(1.0);
    FrameSpec spec;
    for (auto _ : state) {
        auto c = cqt(w, spec, 32.70319566257483, 12);
        benchmark::DoNotOptimize(c.magnitudes.data());
    }
    state.SetLabel("1s clip");
}
BENCHMARK(BM_cqt)->Unit(benchmark::kMillisecond);

}  // namespace
