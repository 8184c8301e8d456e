#pragma once

#include <vector>

#include "useq/layers.hpp"
#include "useq/model_spec.hpp"
#include "useq/random.hpp"

namespace useq {

// Full classifier: embedding, backbone, dropout, sigmoid head.
// Dropout runs only when training is set and draws its mask from
// dropout_rng, which must then be non-null. Returns probabilities [batch, 1].
// Throws ContractError if params do not match the spec or ids are not
// padded to spec.max_len.
template <typename T>
BasicTensor<T> forward(const ModelSpec& spec, const ModelParams<T>& params, const TokenBatch& ids,
                       bool training, Rng* dropout_rng = nullptr);

// Backbone output before dropout and head: [batch, spec.feature_width()].
template <typename T>
BasicTensor<T> backbone_features(const ModelSpec& spec, const ModelParams<T>& params,
                                 const TokenBatch& ids);

// Inference without graph recording; one probability per sequence.
std::vector<float> predict_probabilities(const ModelSpec& spec, const ModelParams<float>& params,
                                         const TokenBatch& ids);

}  // namespace useq
