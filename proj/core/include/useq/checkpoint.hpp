#pragma once

// Single-file model checkpoint:
//
//   bytes 0..3    magic "USEQ"
//   bytes 4..7    format version, uint32 little-endian
//   bytes 8..15   header length N, uint64 little-endian
//   next N bytes  JSON header: model spec, tokenizer config, vocabulary,
//                 training config, parameter manifest (name, shape, byte
//                 offset and length within the data section)
//   remainder     parameter values, float32 little-endian, manifest order

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "useq/model_spec.hpp"
#include "useq/tokenizer.hpp"
#include "useq/training.hpp"

namespace useq {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::string_view kCheckpointMagic = "USEQ";

struct Checkpoint {
    std::uint32_t format_version = kCheckpointVersion;
    ModelSpec spec;
    TokenizerConfig tokenizer;
    Vocabulary vocabulary;
    TrainConfig train_config;
    ModelParams<float> params;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
// Throws CheckpointError; never returns a partially decoded model.
Checkpoint deserialize_checkpoint(std::string_view bytes);

// Writes through a temporary file and renames it into place.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// TrainLog as one JSON object per line.
std::string trainlog_line(const EpochRecord& record);
EpochRecord parse_trainlog_line(std::string_view line);
void write_trainlog(const TrainLog& log, const std::filesystem::path& path);
TrainLog read_trainlog(const std::filesystem::path& path);
// "<checkpoint>.trainlog.jsonl"
std::filesystem::path trainlog_path_for(const std::filesystem::path& checkpoint_path);

}  // namespace useq
