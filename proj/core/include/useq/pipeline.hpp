#pragma once

#include <span>

#include "useq/checkpoint.hpp"
#include "useq/dataset.hpp"
#include "useq/evaluation.hpp"
#include "useq/training.hpp"

namespace useq {

struct PipelineConfig {
    // vocab_size and max_len are overwritten from the fitted tokenizer.
    ModelSpec model;
    TokenizerConfig tokenizer;
    TrainConfig train;
};

struct PipelineResult {
    Checkpoint checkpoint;
    TrainLog log;
    EvalReport report;
    std::size_t train_size = 0;
    std::size_t validation_size = 0;
    std::size_t test_size = 0;
};

// Stratified split, tokenizer fit on the training side only, training, and
// evaluation of the held-out side.
PipelineResult run_pipeline(std::span<const LabeledUrl> dataset, const PipelineConfig& config,
                            const EpochCallback& on_epoch = {});

}  // namespace useq
