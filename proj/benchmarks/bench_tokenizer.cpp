#include <benchmark/benchmark.h>

#include "useq/random.hpp"
#include "useq/tokenizer.hpp"

using namespace useq;

namespace {

std::vector<std::string> random_urls(std::size_t n) {
    static const char* words[] = {"login", "secure", "paypal", "account", "www", "com",
                                  "index", "php",    "verify", "update",  "net", "html"};
    static const char seps[] = "./-?=&";
    Rng rng(5);
    std::vector<std::string> urls(n);
    for (auto& u : urls) {
        u = rng.below(2) ? "https://" : "http://";
        const auto parts = 2 + rng.below(10);
        for (std::size_t i = 0; i < parts; ++i) {
            if (i) u += seps[rng.below(sizeof seps - 1)];
            u += words[rng.below(std::size(words))];
            if (rng.below(3) == 0) u += std::to_string(rng.below(1000));
        }
    }
    return urls;
}

void BM_Fit(benchmark::State& state) {
    const auto urls = random_urls(static_cast<std::size_t>(state.range(0)));
    TokenizerConfig config;
    for (auto _ : state) benchmark::DoNotOptimize(fit(urls, config));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Fit)->Arg(10000);

void BM_EncodePadded(benchmark::State& state) {
    const auto urls = random_urls(10000);
    TokenizerConfig config;
    const auto vocab = fit(urls, config);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(encode_padded(urls[i], vocab, config));
        i = (i + 1) % urls.size();
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EncodePadded);

}  // namespace
