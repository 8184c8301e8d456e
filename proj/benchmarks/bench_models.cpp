#include <benchmark/benchmark.h>

#include "useq/model.hpp"
#include "useq/random.hpp"
#include "useq/training.hpp"

using namespace useq;

namespace {

// Default spec with a batch of 32 random id rows.
struct Fixture {
    ModelSpec spec;
    ModelParams<float> params;
    TokenBatch batch;
    std::vector<float> labels;

    explicit Fixture(ModelKind kind) {
        spec.kind = kind;
        params = init_params(spec, 1);
        Rng rng(2);
        batch = {32, spec.max_len, std::vector<std::int32_t>(32 * spec.max_len)};
        for (auto& id : batch.ids) id = static_cast<std::int32_t>(rng.below(spec.vocab_size));
        for (std::size_t i = 0; i < 32; ++i) labels.push_back(static_cast<float>(i % 2));
    }
};

void BM_TrainStep(benchmark::State& state) {
    Fixture f(static_cast<ModelKind>(state.range(0)));
    state.SetLabel(std::string(to_string(f.spec.kind)));
    TrainConfig config;
    AdamState adam;
    for (auto _ : state) {
        f.params.zero_grad();
        bce_loss<float>(forward<float>(f.spec, f.params, f.batch, true), f.labels).backward();
        adam_step(f.params, adam, config);
    }
    state.SetItemsProcessed(state.iterations() * 32);
}

void BM_Inference(benchmark::State& state) {
    Fixture f(static_cast<ModelKind>(state.range(0)));
    state.SetLabel(std::string(to_string(f.spec.kind)));
    NoGradGuard guard;
    for (auto _ : state) benchmark::DoNotOptimize(forward<float>(f.spec, f.params, f.batch, false));
    state.SetItemsProcessed(state.iterations() * 32);
}

void all_kinds(benchmark::internal::Benchmark* b) {
    for (auto kind : {ModelKind::multi_head_attention, ModelKind::tcn, ModelKind::lstm,
                      ModelKind::bilstm})
        b->Arg(static_cast<int>(kind));
    b->Unit(benchmark::kMillisecond);
}

BENCHMARK(BM_TrainStep)->Apply(all_kinds);
BENCHMARK(BM_Inference)->Apply(all_kinds);

}  // namespace
