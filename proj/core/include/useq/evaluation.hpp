#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "useq/dataset.hpp"
#include "useq/model_spec.hpp"
#include "useq/tokenizer.hpp"

namespace useq {

// Positive class is phishing (label 1).
struct ConfusionCounts {
    std::uint64_t tn = 0, fp = 0, fn = 0, tp = 0;

    std::uint64_t total() const noexcept { return tn + fp + fn + tp; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// Throws ContractError on a length mismatch, an empty input or a label
// outside {0,1}.
ConfusionCounts confusion(std::span<const std::uint8_t> predicted,
                          std::span<const std::uint8_t> actual);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct Metrics {
    ClassMetrics negative;  // legitimate, label 0
    ClassMetrics positive;  // phishing, label 1
    ClassMetrics macro;     // unweighted mean of the two classes
    ClassMetrics micro;     // pooled counts; equals accuracy for two classes
    double accuracy = 0.0;
    // Names of ratios whose denominator was zero; those ratios are reported as 0.
    std::vector<std::string> degenerate;

    bool is_degenerate() const noexcept { return !degenerate.empty(); }
};

// Throws ContractError if the counts are all zero.
Metrics metrics(const ConfusionCounts& counts);

// Probability that a random positive outscores a random negative, ties
// counting one half. Throws UsageError unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> actual);

struct EvalReport {
    std::string model;
    std::size_t epochs = 0;
    std::size_t records = 0;
    ConfusionCounts counts;
    Metrics metrics;
    double roc_auc = 0.0;
    double threshold = 0.5;
    double eval_ms = 0.0;
};

// Assembles a report from scores and labels (threshold 0.5 inclusive).
EvalReport build_report(std::span<const float> probabilities, std::span<const std::uint8_t> actual);

// Batch inference over test_set followed by build_report. Throws UsageError
// on an empty test set.
EvalReport evaluate(const ModelSpec& spec, const ModelParams<float>& params,
                    const Vocabulary& vocab, const TokenizerConfig& config,
                    std::span<const LabeledUrl> test_set, std::size_t epochs = 0);

std::string render_text(const EvalReport& report);
// Single-line JSON object.
std::string render_structured(const EvalReport& report);

}  // namespace useq
