#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "useq/dataset.hpp"
#include "useq/layers.hpp"
#include "useq/model_spec.hpp"
#include "useq/tokenizer.hpp"

namespace useq {

struct TrainConfig {
    std::size_t batch_size = 32;
    std::size_t epochs = 10;
    double learning_rate = 0.001;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-7;
    double split_fraction = 0.8;
    // Share of the training split held out for per-epoch validation; 0 disables it.
    double validation_fraction = 0.0;
    std::uint64_t seed = 42;
    bool shuffle_each_epoch = true;

    void validate() const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    std::size_t steps = 0;
    double loss = 0.0;      // sample-weighted mean over the epoch
    double accuracy = 0.0;  // training predictions at threshold 0.5
    double duration_ms = 0.0;
    double cumulative_ms = 0.0;
    std::optional<double> validation_loss;
    std::optional<double> validation_accuracy;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
};

// --- splitting ----------------------------------------------------------------

struct DatasetSplit {
    std::vector<LabeledUrl> train;
    std::vector<LabeledUrl> test;
};

// Stratified shuffle split. Each class contributes round(fraction * n_class)
// records to the training side; output order is shuffled. Throws UsageError
// for fewer than two records or a single class.
DatasetSplit split(std::span<const LabeledUrl> dataset, double fraction, std::uint64_t seed);

// --- encoding -----------------------------------------------------------------

// Padded id rows plus labels, ready for batching.
struct EncodedSet {
    std::size_t max_len = 0;
    std::vector<std::int32_t> ids;  // size() * max_len
    std::vector<std::uint8_t> labels;

    std::size_t size() const noexcept { return labels.size(); }
    TokenBatch gather(std::span<const std::size_t> rows) const;
    TokenBatch range(std::size_t begin, std::size_t end) const;
};

EncodedSet encode_dataset(std::span<const LabeledUrl> records, const Vocabulary& vocab,
                          const TokenizerConfig& config);

// --- loss and optimizer -------------------------------------------------------

inline constexpr double kBceClamp = 1e-7;

// Mean binary cross-entropy over the batch with p clamped to
// [1e-7, 1 - 1e-7]; the gradient is zero where the clamp is active.
template <typename T>
BasicTensor<T> bce_loss(const BasicTensor<T>& probabilities, std::span<const T> labels);

struct AdamState {
    std::uint64_t step = 0;
    std::vector<std::vector<float>> first_moment;
    std::vector<std::vector<float>> second_moment;
};

// One bias-corrected Adam update of every parameter from its gradient:
// p -= lr * m_hat / (sqrt(v_hat) + eps). Increments state.step first.
// Throws ContractError if a parameter has no gradient.
void adam_step(ModelParams<float>& params, AdamState& state, const TrainConfig& config);

// --- training -----------------------------------------------------------------

struct TrainResult {
    ModelParams<float> params;
    TrainLog log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch training from freshly initialized parameters. One optimizer
// step per batch; the final partial batch is included. Deterministic for a
// fixed config.seed. Throws UsageError on an empty training set.
TrainResult train(const ModelSpec& spec, const EncodedSet& train_set, const TrainConfig& config,
                  const EncodedSet* validation = nullptr, const EpochCallback& on_epoch = {});

// Continues training from the given parameters.
TrainLog train_from(const ModelSpec& spec, ModelParams<float>& params, const EncodedSet& train_set,
                    const TrainConfig& config, const EncodedSet* validation = nullptr,
                    const EpochCallback& on_epoch = {});

// --- prediction ---------------------------------------------------------------

inline constexpr double kDecisionThreshold = 0.5;

// 1 iff probability >= 0.5.
inline int decision_label(double probability) { return probability >= kDecisionThreshold ? 1 : 0; }

struct Prediction {
    double probability = 0.0;
    int label = 0;
};

Prediction predict(const ModelSpec& spec, const ModelParams<float>& params,
                   const Vocabulary& vocab, const TokenizerConfig& config, std::string_view url);

// Probabilities for an encoded set, evaluated in fixed-size batches.
std::vector<float> predict_encoded(const ModelSpec& spec, const ModelParams<float>& params,
                                   const EncodedSet& set, std::size_t batch_size = 256);

}  // namespace useq
