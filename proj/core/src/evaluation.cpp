#include "useq/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>

#include "json_io.hpp"
#include "useq/errors.hpp"
#include "useq/training.hpp"

namespace useq {

ConfusionCounts confusion(std::span<const std::uint8_t> predicted,
                          std::span<const std::uint8_t> actual) {
    if (predicted.size() != actual.size())
        throw ContractError("confusion: " + std::to_string(predicted.size()) +
                            " predictions for " + std::to_string(actual.size()) + " labels");
    if (actual.empty()) throw ContractError("confusion: no records");
    ConfusionCounts c;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (predicted[i] > 1 || actual[i] > 1) throw ContractError("confusion: labels must be 0/1");
        if (actual[i])
            ++(predicted[i] ? c.tp : c.fn);
        else
            ++(predicted[i] ? c.fp : c.tn);
    }
    return c;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den, const char* name,
             std::vector<std::string>& degenerate) {
    if (den == 0) {
        degenerate.emplace_back(name);
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r, const char* name, std::vector<std::string>& degenerate) {
    if (p + r == 0.0) {
        degenerate.emplace_back(name);
        return 0.0;
    }
    return 2.0 * p * r / (p + r);
}

}  // namespace

Metrics metrics(const ConfusionCounts& c) {
    if (c.total() == 0) throw ContractError("metrics: empty confusion matrix");
    Metrics m;
    auto& deg = m.degenerate;
    m.positive.precision = ratio(c.tp, c.tp + c.fp, "precision_pos", deg);
    m.positive.recall = ratio(c.tp, c.tp + c.fn, "recall_pos", deg);
    m.positive.f1 = harmonic(m.positive.precision, m.positive.recall, "f1_pos", deg);
    m.negative.precision = ratio(c.tn, c.tn + c.fn, "precision_neg", deg);
    m.negative.recall = ratio(c.tn, c.tn + c.fp, "recall_neg", deg);
    m.negative.f1 = harmonic(m.negative.precision, m.negative.recall, "f1_neg", deg);
    m.macro.precision = (m.positive.precision + m.negative.precision) / 2.0;
    m.macro.recall = (m.positive.recall + m.negative.recall) / 2.0;
    m.macro.f1 = (m.positive.f1 + m.negative.f1) / 2.0;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    m.micro = {m.accuracy, m.accuracy, m.accuracy};
    return m;
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> actual) {
    if (scores.size() != actual.size())
        throw ContractError("roc_auc: score and label counts differ");
    std::uint64_t positives = 0;
    for (auto y : actual) {
        if (y > 1) throw ContractError("roc_auc: labels must be 0/1");
        positives += y;
    }
    const std::uint64_t negatives = actual.size() - positives;
    if (positives == 0 || negatives == 0)
        throw UsageError("roc_auc needs both classes present");

    // Mann-Whitney: sum of positive ranks with tied groups sharing their mean rank.
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double positive_rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        std::uint64_t group_positives = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            group_positives += actual[order[j]];
            ++j;
        }
        const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        positive_rank_sum += mean_rank * static_cast<double>(group_positives);
        i = j;
    }
    const double p = static_cast<double>(positives), n = static_cast<double>(negatives);
    return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

EvalReport build_report(std::span<const float> probabilities,
                        std::span<const std::uint8_t> actual) {
    std::vector<std::uint8_t> predicted(probabilities.size());
    std::vector<double> scores(probabilities.size());
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        predicted[i] = static_cast<std::uint8_t>(decision_label(probabilities[i]));
        scores[i] = probabilities[i];
    }
    EvalReport report;
    report.records = actual.size();
    report.counts = confusion(predicted, actual);
    report.metrics = metrics(report.counts);
    report.roc_auc = roc_auc(scores, actual);
    report.threshold = kDecisionThreshold;
    return report;
}

EvalReport evaluate(const ModelSpec& spec, const ModelParams<float>& params,
                    const Vocabulary& vocab, const TokenizerConfig& config,
                    std::span<const LabeledUrl> test_set, std::size_t epochs) {
    if (test_set.empty()) throw UsageError("evaluation set is empty");
    const auto start = std::chrono::steady_clock::now();
    const auto encoded = encode_dataset(test_set, vocab, config);
    const auto probs = predict_encoded(spec, params, encoded);
    EvalReport report = build_report(probs, encoded.labels);
    report.model = std::string(to_string(spec.kind));
    report.epochs = epochs;
    report.eval_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    return report;
}

std::string render_text(const EvalReport& r) {
    const auto& m = r.metrics;
    char buf[2048];
    std::snprintf(buf, sizeof buf,
                  "model: %s  epochs: %zu  records: %zu  threshold: %.2f\n"
                  "confusion: TN=%llu FP=%llu FN=%llu TP=%llu\n"
                  "               precision  recall     f1\n"
                  "  legitimate   %.4f     %.4f     %.4f\n"
                  "  phishing     %.4f     %.4f     %.4f\n"
                  "  macro avg    %.4f     %.4f     %.4f\n"
                  "  micro avg    %.4f     %.4f     %.4f\n"
                  "accuracy: %.4f  roc_auc: %.4f  eval_ms: %.1f\n",
                  r.model.c_str(), r.epochs, r.records, r.threshold,
                  static_cast<unsigned long long>(r.counts.tn),
                  static_cast<unsigned long long>(r.counts.fp),
                  static_cast<unsigned long long>(r.counts.fn),
                  static_cast<unsigned long long>(r.counts.tp), m.negative.precision,
                  m.negative.recall, m.negative.f1, m.positive.precision, m.positive.recall,
                  m.positive.f1, m.macro.precision, m.macro.recall, m.macro.f1, m.micro.precision,
                  m.micro.recall, m.micro.f1, m.accuracy, r.roc_auc, r.eval_ms);
    std::string out = buf;
    if (m.is_degenerate()) {
        out += "degenerate (0/0 reported as 0):";
        for (const auto& d : m.degenerate) out += " " + d;
        out += "\n";
    }
    return out;
}

std::string render_structured(const EvalReport& report) {
    return json_io::to_json(report).dump();
}

}  // namespace useq
