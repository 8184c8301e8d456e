#include <benchmark/benchmark.h>

#include "useq/ops.hpp"
#include "useq/random.hpp"

using namespace useq;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed, bool grad = false) {
    Rng rng(seed);
    std::vector<float> v(shape_numel(shape));
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return Tensor::from_data(std::move(shape), std::move(v), grad);
}

void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_tensor({n, n}, 1), b = random_tensor({n, n}, 2);
    NoGradGuard guard;
    for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
    state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256);

void BM_MatmulBackward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto a = random_tensor({n, n}, 1, true), b = random_tensor({n, n}, 2, true);
    for (auto _ : state) {
        a.zero_grad();
        b.zero_grad();
        sum(matmul(a, b)).backward();
    }
}
BENCHMARK(BM_MatmulBackward)->Arg(64)->Arg(256);

void BM_SoftmaxLastAxis(benchmark::State& state) {
    const auto x = random_tensor({32, 2, 100, 100}, 3);
    NoGradGuard guard;
    for (auto _ : state) benchmark::DoNotOptimize(softmax_lastaxis(x));
}
BENCHMARK(BM_SoftmaxLastAxis);

void BM_Tanh(benchmark::State& state) {
    const auto x = random_tensor({32, 100, 256}, 4);
    NoGradGuard guard;
    for (auto _ : state) benchmark::DoNotOptimize(tanh(x));
}
BENCHMARK(BM_Tanh);

}  // namespace
