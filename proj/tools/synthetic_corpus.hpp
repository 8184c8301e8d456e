#pragma once

// Generator for labeled URL corpora that mimic public phishing datasets:
// legitimate sites with ordinary paths and queries, and phishing URLs built
// from brand impersonation, credential keywords, raw IP hosts, free hosting,
// shorteners and compromised CMS paths. A share of each class is drawn from
// deliberately confusable patterns (real login pages, compromised sites with
// benign-looking paths) and a small fraction of labels is flipped, so the
// task is not trivially separable.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "useq/dataset.hpp"

namespace useq::synth {

struct CorpusOptions {
    std::size_t legitimate = 5000;
    std::size_t phishing = 5000;
    double hard_fraction = 0.12;
    double label_noise = 0.01;
    std::uint64_t seed = 7;
};

// Deterministic for fixed options; records come out shuffled.
std::vector<LabeledUrl> generate_corpus(const CorpusOptions& options);

}  // namespace useq::synth
