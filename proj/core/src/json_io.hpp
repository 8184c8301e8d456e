#pragma once

#include <json.hpp>

#include "useq/evaluation.hpp"
#include "useq/model_spec.hpp"
#include "useq/tokenizer.hpp"
#include "useq/training.hpp"

namespace useq::json_io {

using nlohmann::json;

json to_json(const ModelSpec& spec);
json to_json(const TokenizerConfig& config);
json to_json(const Vocabulary& vocab);
json to_json(const TrainConfig& config);
json to_json(const EpochRecord& record);
json to_json(const EvalReport& report);

// Throw nlohmann::json::exception or UsageError on malformed input.
ModelSpec model_spec_from_json(const json& j);
TokenizerConfig tokenizer_config_from_json(const json& j);
Vocabulary vocabulary_from_json(const json& j);
TrainConfig train_config_from_json(const json& j);
EpochRecord epoch_record_from_json(const json& j);

}  // namespace useq::json_io
