#include <benchmark/benchmark.h>

#include "audformer/model.hpp"
#include "audformer/prediction.hpp"
#include "audformer/trainer.hpp"

using namespace audformer;

namespace {

Instance bench_instance(std::size_t frames, Rng& rng) {
    Instance inst;
    inst.subject_id = "bench";
    inst.label = Label::Positive;
    const std::array<std::size_t, kNumDomains> dims = {1, 1, 1, 64, 13, 13, 13};
    for (const char* modality : {"m1", "m2", "m3"}) {
        ModalityFeatureSet fs;
        for (std::size_t d = 0; d < kNumDomains; ++d) {
            FeatureMatrix fm;
            fm.domain = kAllDomains[d];
            fm.data = Tensor<float>({frames, dims[d]});
            for (std::size_t i = 0; i < fm.data.numel(); ++i)
                fm.data.at(i) = static_cast<float>(rng.normal());
            fs.domains[d] = fm;
        }
        inst.features.emplace_back(modality, fs);
    }
    return inst;
}

Model<float> bench_model(const Instance& inst, std::size_t max_tokens) {
    ModelConfig cfg;
    cfg.profile = "ipvs";
    cfg.max_tokens_per_domain = max_tokens;
    cfg.validate();
    std::vector<std::array<TemporalConvLayer<float>::DomainShape, kNumDomains>> shapes;
    std::vector<std::string> modalities;
    for (const auto& [name, fs] : inst.features) {
        modalities.push_back(name);
        std::array<TemporalConvLayer<float>::DomainShape, kNumDomains> s;
        for (std::size_t d = 0; d < kNumDomains; ++d)
            s[d] = {fs.domains[d].frames(), fs.domains[d].dims()};
        shapes.push_back(s);
    }
    Rng rng(7);
    auto model = Model<float>::build(cfg, modalities, shapes, rng);
    std::vector<const Instance*> pool = {&inst};
    model.norm = Normalizer::fit(pool);
    return model;
}

void BM_forward_eval(benchmark::State& state) {
    Rng rng(1);
    auto inst = bench_instance(427, rng);
    auto model = bench_model(inst, static_cast<std::size_t>(state.range(0)));
    Rng fwd(2);
    for (auto _ : state) {
        auto out = model.forward(inst, nullptr, false, fwd);
        benchmark::DoNotOptimize(out.label);
    }
}
BENCHMARK(BM_forward_eval)->Arg(12)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_train_step(benchmark::State& state) {
    Rng rng(1);
    auto inst = bench_instance(427, rng);
    auto model = bench_model(inst, static_cast<std::size_t>(state.range(0)));
    Rng fwd(2);
    for (auto _ : state) {
        Tape<float> tape;
        auto out = model.forward(inst, &tape, true, fwd);
        auto loss = bce_with_logits(out.logits, 1, &tape);
        backward(loss, tape);
        benchmark::DoNotOptimize(loss.at(0));
    }
}
BENCHMARK(BM_train_step)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace
