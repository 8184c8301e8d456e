#include "useq/pipeline.hpp"

#include "useq/errors.hpp"
#include "useq/random.hpp"

namespace useq {

PipelineResult run_pipeline(std::span<const LabeledUrl> dataset, const PipelineConfig& config,
                            const EpochCallback& on_epoch) {
    config.train.validate();
    config.tokenizer.validate();

    auto parts = split(dataset, config.train.split_fraction, config.train.seed);
    std::vector<LabeledUrl> validation;
    if (config.train.validation_fraction > 0.0) {
        auto inner = split(parts.train, 1.0 - config.train.validation_fraction,
                           mix_seed(config.train.seed, "validation"));
        parts.train = std::move(inner.train);
        validation = std::move(inner.test);
    }
    if (parts.train.empty()) throw UsageError("training split is empty");

    std::vector<std::string> corpus;
    corpus.reserve(parts.train.size());
    for (const auto& r : parts.train) corpus.push_back(r.url);

    PipelineResult result;
    auto& ckpt = result.checkpoint;
    ckpt.tokenizer = config.tokenizer;
    ckpt.vocabulary = fit(corpus, config.tokenizer);
    ckpt.spec = config.model;
    ckpt.spec.vocab_size = ckpt.vocabulary.id_space();
    ckpt.spec.max_len = config.tokenizer.max_len;
    ckpt.spec.validate();
    ckpt.train_config = config.train;

    const auto train_set = encode_dataset(parts.train, ckpt.vocabulary, ckpt.tokenizer);
    const auto validation_set = encode_dataset(validation, ckpt.vocabulary, ckpt.tokenizer);
    auto trained = train(ckpt.spec, train_set, config.train,
                         validation.empty() ? nullptr : &validation_set, on_epoch);
    ckpt.params = std::move(trained.params);
    result.log = std::move(trained.log);
    result.report = evaluate(ckpt.spec, ckpt.params, ckpt.vocabulary, ckpt.tokenizer, parts.test,
                             config.train.epochs);
    result.train_size = parts.train.size();
    result.validation_size = validation.size();
    result.test_size = parts.test.size();
    return result;
}

}  // namespace useq
