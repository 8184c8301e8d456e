#include "useq/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "op_support.hpp"
#include "useq/errors.hpp"
#include "useq/model.hpp"
#include "useq/random.hpp"

namespace useq {

void TrainConfig::validate() const {
    if (batch_size < 1) throw UsageError("batch_size must be >= 1");
    if (epochs < 1) throw UsageError("epochs must be >= 1");
    if (!(split_fraction > 0.0 && split_fraction < 1.0))
        throw UsageError("split fraction must be in (0,1)");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw UsageError("validation fraction must be in [0,1)");
    if (!(learning_rate > 0.0)) throw UsageError("learning rate must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw UsageError("Adam betas must be in [0,1)");
    if (!(adam_eps > 0.0)) throw UsageError("Adam epsilon must be positive");
}

// --- split --------------------------------------------------------------------

DatasetSplit split(std::span<const LabeledUrl> dataset, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw UsageError("split fraction must be in (0,1)");
    if (dataset.size() < 2) throw UsageError("splitting needs at least two records");

    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (dataset[i].label > 1) throw UsageError("labels must be 0 or 1");
        by_class[dataset[i].label].push_back(i);
    }
    if (by_class[0].empty() || by_class[1].empty())
        throw UsageError("dataset contains a single class; both labels are required");

    // Total training size first, then per-class quotas by largest remainder.
    const std::size_t n = dataset.size();
    const auto n_train = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))), 1, n - 1);
    std::size_t quota[2];
    double remainder[2];
    for (int c = 0; c < 2; ++c) {
        const double exact = fraction * static_cast<double>(by_class[c].size());
        quota[c] = static_cast<std::size_t>(std::floor(exact));
        remainder[c] = exact - std::floor(exact);
    }
    while (quota[0] + quota[1] < n_train) {
        const int c = remainder[1] > remainder[0] ? 1 : 0;
        const int pick = quota[c] < by_class[c].size() ? c : 1 - c;
        ++quota[pick];
        remainder[pick] = -1.0;
    }
    while (quota[0] + quota[1] > n_train) {
        const int c = quota[1] > quota[0] ? 1 : 0;
        --quota[c];
    }

    DatasetSplit out;
    for (int c = 0; c < 2; ++c) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(c)));
        auto& rows = by_class[c];
        rng.shuffle(std::span<std::size_t>(rows));
        for (std::size_t i = 0; i < rows.size(); ++i)
            (i < quota[c] ? out.train : out.test).push_back(dataset[rows[i]]);
    }
    Rng mixer(mix_seed(seed, "interleave"));
    mixer.shuffle(std::span<LabeledUrl>(out.train));
    mixer.shuffle(std::span<LabeledUrl>(out.test));
    return out;
}

// --- encoding -----------------------------------------------------------------

TokenBatch EncodedSet::gather(std::span<const std::size_t> rows) const {
    TokenBatch batch;
    batch.batch = rows.size();
    batch.length = max_len;
    batch.ids.resize(rows.size() * max_len);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= size()) throw ContractError("row index out of range");
        std::copy_n(ids.begin() + static_cast<std::ptrdiff_t>(rows[i] * max_len), max_len,
                    batch.ids.begin() + static_cast<std::ptrdiff_t>(i * max_len));
    }
    return batch;
}

TokenBatch EncodedSet::range(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > size()) throw ContractError("row range out of bounds");
    TokenBatch batch;
    batch.batch = end - begin;
    batch.length = max_len;
    batch.ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(begin * max_len),
                     ids.begin() + static_cast<std::ptrdiff_t>(end * max_len));
    return batch;
}

EncodedSet encode_dataset(std::span<const LabeledUrl> records, const Vocabulary& vocab,
                          const TokenizerConfig& config) {
    config.validate();
    EncodedSet set;
    set.max_len = config.max_len;
    set.ids.reserve(records.size() * config.max_len);
    set.labels.reserve(records.size());
    for (const auto& r : records) {
        const auto row = encode_padded(r.url, vocab, config);
        set.ids.insert(set.ids.end(), row.begin(), row.end());
        set.labels.push_back(r.label);
    }
    return set;
}

// --- loss ---------------------------------------------------------------------

template <typename T>
BasicTensor<T> bce_loss(const BasicTensor<T>& probabilities, std::span<const T> labels) {
    if (probabilities.numel() != labels.size())
        throw ContractError("bce_loss: " + std::to_string(labels.size()) + " labels for " +
                            shape_string(probabilities.shape()) + " probabilities");
    if (labels.empty()) throw ContractError("bce_loss: empty batch");
    const T lo = static_cast<T>(kBceClamp), hi = T(1) - static_cast<T>(kBceClamp);
    auto pv = probabilities.data();
    const T n = static_cast<T>(labels.size());
    T total = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const T y = labels[i];
        if (y != T(0) && y != T(1)) throw ContractError("bce_loss: labels must be 0 or 1");
        const T p = std::clamp(pv[i], lo, hi);
        total -= y * std::log(p) + (T(1) - y) * std::log(T(1) - p);
    }
    auto pp = probabilities.impl();
    std::vector<T> ys(labels.begin(), labels.end());
    return detail::make_output<T>(
        {1}, {total / n}, "bce_loss", {pp}, [pp, ys = std::move(ys), lo, hi, n](const TensorImpl<T>& o) {
            auto g = pp->ensure_grad();
            for (std::size_t i = 0; i < ys.size(); ++i) {
                const T p = pp->data[i];
                if (p < lo || p > hi) continue;
                g[i] += o.grad[0] * (-ys[i] / p + (T(1) - ys[i]) / (T(1) - p)) / n;
            }
        });
}

template BasicTensor<float> bce_loss(const BasicTensor<float>&, std::span<const float>);
template BasicTensor<double> bce_loss(const BasicTensor<double>&, std::span<const double>);

// --- Adam ---------------------------------------------------------------------

void adam_step(ModelParams<float>& params, AdamState& state, const TrainConfig& config) {
    auto entries = params.entries();
    if (state.first_moment.empty()) {
        for (const auto& e : entries) {
            state.first_moment.emplace_back(e.tensor.numel(), 0.0f);
            state.second_moment.emplace_back(e.tensor.numel(), 0.0f);
        }
    }
    if (state.first_moment.size() != entries.size())
        throw ContractError("Adam state does not match parameter set");
    for (const auto& e : entries)
        if (!e.tensor.has_grad()) throw ContractError("parameter '" + e.name + "' has no gradient");

    const std::uint64_t t = ++state.step;
    const double b1 = config.adam_beta1, b2 = config.adam_beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t k = 0; k < entries.size(); ++k) {
        auto& tensor = entries[k].tensor;
        auto values = tensor.mutable_data();
        auto grads = tensor.grad();
        auto& m = state.first_moment[k];
        auto& v = state.second_moment[k];
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double g = grads[i];
            const double mi = b1 * m[i] + (1.0 - b1) * g;
            const double vi = b2 * v[i] + (1.0 - b2) * g * g;
            m[i] = static_cast<float>(mi);
            v[i] = static_cast<float>(vi);
            const double m_hat = mi / correction1;
            const double v_hat = vi / correction2;
            values[i] = static_cast<float>(values[i] - config.learning_rate * m_hat /
                                                           (std::sqrt(v_hat) + config.adam_eps));
        }
    }
}

// --- training -----------------------------------------------------------------

namespace {

struct PassStats {
    double loss_sum = 0.0;
    std::size_t correct = 0;
};

void tally(PassStats& stats, std::span<const float> probs, std::span<const float> labels,
           double batch_loss) {
    stats.loss_sum += batch_loss * static_cast<double>(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (decision_label(probs[i]) == static_cast<int>(labels[i])) ++stats.correct;
}

std::vector<float> labels_of(const EncodedSet& set, std::span<const std::size_t> rows) {
    std::vector<float> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = set.labels[rows[i]];
    return out;
}

std::pair<double, double> validation_pass(const ModelSpec& spec, const ModelParams<float>& params,
                                          const EncodedSet& set) {
    const auto probs = predict_encoded(spec, params, set);
    std::vector<float> labels(set.labels.begin(), set.labels.end());
    NoGradGuard no_grad;
    const auto loss =
        bce_loss(Tensor::from_data({probs.size(), 1}, probs), std::span<const float>(labels)).item();
    PassStats stats;
    tally(stats, probs, labels, loss);
    return {loss, static_cast<double>(stats.correct) / static_cast<double>(set.size())};
}

}  // namespace

TrainLog train_from(const ModelSpec& spec, ModelParams<float>& params, const EncodedSet& train_set,
                    const TrainConfig& config, const EncodedSet* validation,
                    const EpochCallback& on_epoch) {
    config.validate();
    spec.validate();
    params.check_against(spec);
    if (train_set.size() == 0) throw UsageError("training split is empty");
    if (train_set.max_len != spec.max_len)
        throw ContractError("encoded length does not match model max_len");

    using Clock = std::chrono::steady_clock;
    AdamState adam;
    Rng dropout_rng(mix_seed(config.seed, "dropout"));
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainLog log;
    double cumulative = 0.0;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto start = Clock::now();
        if (config.shuffle_each_epoch) {
            Rng shuffler(mix_seed(config.seed, epoch));
            shuffler.shuffle(std::span<std::size_t>(order));
        }
        PassStats stats;
        std::size_t steps = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const std::size_t end = std::min(begin + config.batch_size, order.size());
            const std::span<const std::size_t> rows(order.data() + begin, end - begin);
            const auto batch = train_set.gather(rows);
            const auto labels = labels_of(train_set, rows);

            params.zero_grad();
            auto probs = forward(spec, params, batch, true, &dropout_rng);
            auto loss = bce_loss(probs, std::span<const float>(labels));
            loss.backward();
            adam_step(params, adam, config);
            tally(stats, probs.data(), labels, loss.item());
            ++steps;
        }
        params.zero_grad();

        EpochRecord record;
        record.epoch = epoch;
        record.steps = steps;
        record.loss = stats.loss_sum / static_cast<double>(train_set.size());
        record.accuracy =
            static_cast<double>(stats.correct) / static_cast<double>(train_set.size());
        if (validation && validation->size() > 0) {
            auto [vloss, vacc] = validation_pass(spec, params, *validation);
            record.validation_loss = vloss;
            record.validation_accuracy = vacc;
        }
        record.duration_ms =
            std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        cumulative += record.duration_ms;
        record.cumulative_ms = cumulative;
        log.epochs.push_back(record);
        if (on_epoch) on_epoch(record);
    }
    return log;
}

TrainResult train(const ModelSpec& spec, const EncodedSet& train_set, const TrainConfig& config,
                  const EncodedSet* validation, const EpochCallback& on_epoch) {
    config.validate();
    TrainResult result{init_params(spec, mix_seed(config.seed, "init")), {}};
    result.log = train_from(spec, result.params, train_set, config, validation, on_epoch);
    return result;
}

// --- prediction ---------------------------------------------------------------

std::vector<float> predict_encoded(const ModelSpec& spec, const ModelParams<float>& params,
                                   const EncodedSet& set, std::size_t batch_size) {
    if (batch_size == 0) throw ContractError("batch size must be positive");
    std::vector<float> out;
    out.reserve(set.size());
    for (std::size_t begin = 0; begin < set.size(); begin += batch_size) {
        const std::size_t end = std::min(begin + batch_size, set.size());
        const auto probs = predict_probabilities(spec, params, set.range(begin, end));
        out.insert(out.end(), probs.begin(), probs.end());
    }
    return out;
}

Prediction predict(const ModelSpec& spec, const ModelParams<float>& params,
                   const Vocabulary& vocab, const TokenizerConfig& config, std::string_view url) {
    TokenBatch batch{1, config.max_len, encode_padded(url, vocab, config)};
    const double p = predict_probabilities(spec, params, batch).front();
    return {p, decision_label(p)};
}

}  // namespace useq
