#include "useq/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json_io.hpp"
#include "useq/errors.hpp"

namespace useq {

namespace {

using json_io::json;
using Kind = CheckpointError::Kind;

template <typename U>
void put_le(std::string& out, U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i)
        out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

template <typename U>
U get_le(std::string_view bytes, std::size_t offset) {
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
        value |= static_cast<U>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
    return value;
}

constexpr std::size_t kPreambleSize = 4 + 4 + 8;

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
    ckpt.params.check_against(ckpt.spec);
    json manifest = json::array();
    std::uint64_t offset = 0;
    for (const auto& e : ckpt.params.entries()) {
        const std::uint64_t length = e.tensor.numel() * sizeof(float);
        manifest.push_back(
            {{"name", e.name}, {"shape", e.tensor.shape()}, {"offset", offset}, {"length", length}});
        offset += length;
    }
    const json header = {
        {"model", json_io::to_json(ckpt.spec)},
        {"tokenizer", json_io::to_json(ckpt.tokenizer)},
        {"vocabulary", json_io::to_json(ckpt.vocabulary)},
        {"training", json_io::to_json(ckpt.train_config)},
        {"parameters", std::move(manifest)},
        {"data_length", offset},
    };
    const std::string header_text = header.dump();

    std::string out;
    out.reserve(kPreambleSize + header_text.size() + offset);
    out.append(kCheckpointMagic);
    put_le<std::uint32_t>(out, ckpt.format_version);
    put_le<std::uint64_t>(out, header_text.size());
    out.append(header_text);
    for (const auto& e : ckpt.params.entries())
        for (float v : e.tensor.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
    if (bytes.size() < kCheckpointMagic.size())
        throw CheckpointError(Kind::truncated, "checkpoint truncated before magic");
    if (bytes.substr(0, 4) != kCheckpointMagic)
        throw CheckpointError(Kind::bad_magic, "not a useq checkpoint (bad magic)");
    if (bytes.size() < kPreambleSize)
        throw CheckpointError(Kind::truncated, "checkpoint truncated in preamble");
    const auto version = get_le<std::uint32_t>(bytes, 4);
    if (version != kCheckpointVersion)
        throw CheckpointError(Kind::unsupported_version,
                              "unsupported checkpoint version " + std::to_string(version));
    const auto header_length = get_le<std::uint64_t>(bytes, 8);
    if (header_length > bytes.size() - kPreambleSize)
        throw CheckpointError(Kind::truncated, "checkpoint truncated in header");
    const std::string_view data = bytes.substr(kPreambleSize + header_length);

    Checkpoint ckpt;
    ckpt.format_version = version;
    json header;
    try {
        header = json::parse(bytes.substr(kPreambleSize, header_length));
        ckpt.spec = json_io::model_spec_from_json(header.at("model"));
        ckpt.tokenizer = json_io::tokenizer_config_from_json(header.at("tokenizer"));
        ckpt.vocabulary = json_io::vocabulary_from_json(header.at("vocabulary"));
        ckpt.train_config = json_io::train_config_from_json(header.at("training"));
    } catch (const json::exception& e) {
        throw CheckpointError(Kind::malformed_header, std::string("malformed header: ") + e.what());
    } catch (const UsageError& e) {
        throw CheckpointError(Kind::malformed_header, std::string("invalid header: ") + e.what());
    }

    std::uint64_t declared_length = 0;
    try {
        declared_length = header.at("data_length").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw CheckpointError(Kind::malformed_header, std::string("malformed header: ") + e.what());
    }
    if (data.size() < declared_length)
        throw CheckpointError(Kind::truncated,
                              "checkpoint truncated in parameter data (" +
                                  std::to_string(data.size()) + " of " +
                                  std::to_string(declared_length) + " bytes)");
    if (data.size() > declared_length)
        throw CheckpointError(Kind::manifest, "trailing bytes after parameter data");

    const auto decls = declare_params(ckpt.spec);
    const json* manifest = nullptr;
    try {
        manifest = &header.at("parameters");
        if (!manifest->is_array()) throw CheckpointError(Kind::manifest, "manifest is not a list");
    } catch (const json::exception& e) {
        throw CheckpointError(Kind::malformed_header, std::string("malformed header: ") + e.what());
    }
    if (manifest->size() != decls.size())
        throw CheckpointError(Kind::manifest, "manifest lists " + std::to_string(manifest->size()) +
                                                  " parameters, model declares " +
                                                  std::to_string(decls.size()));
    std::uint64_t expected_offset = 0;
    for (std::size_t i = 0; i < decls.size(); ++i) {
        std::string name;
        Shape shape;
        std::uint64_t offset = 0, length = 0;
        try {
            const auto& entry = manifest->at(i);
            entry.at("name").get_to(name);
            entry.at("shape").get_to(shape);
            entry.at("offset").get_to(offset);
            entry.at("length").get_to(length);
        } catch (const json::exception& e) {
            throw CheckpointError(Kind::malformed_header,
                                  std::string("malformed manifest entry: ") + e.what());
        }
        if (name != decls[i].name || shape != decls[i].shape)
            throw CheckpointError(Kind::manifest, "manifest entry " + std::to_string(i) + " ('" +
                                                      name + "') does not match the model spec");
        if (length != shape_numel(shape) * sizeof(float))
            throw CheckpointError(Kind::manifest, "parameter '" + name + "' shape " +
                                                      shape_string(shape) + " needs " +
                                                      std::to_string(shape_numel(shape) * 4) +
                                                      " bytes, manifest says " +
                                                      std::to_string(length));
        if (offset != expected_offset || offset + length > declared_length)
            throw CheckpointError(Kind::manifest, "parameter '" + name + "' has a bad offset");
        std::vector<float> values(shape_numel(shape));
        for (std::size_t k = 0; k < values.size(); ++k)
            values[k] = std::bit_cast<float>(get_le<std::uint32_t>(data, offset + 4 * k));
        ckpt.params.add(name, Tensor::from_data(shape, std::move(values), true));
        expected_offset = offset + length;
    }
    if (expected_offset != declared_length)
        throw CheckpointError(Kind::manifest, "manifest does not cover the parameter data");
    return ckpt;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    const std::string bytes = serialize_checkpoint(checkpoint);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CheckpointError(Kind::io, "cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw CheckpointError(Kind::io, "failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw CheckpointError(Kind::io, "cannot move checkpoint into " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(Kind::io, "cannot open checkpoint " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

std::string trainlog_line(const EpochRecord& record) { return json_io::to_json(record).dump(); }

EpochRecord parse_trainlog_line(std::string_view line) {
    try {
        return json_io::epoch_record_from_json(json::parse(line));
    } catch (const json::exception& e) {
        throw UsageError(std::string("malformed train log line: ") + e.what());
    }
}

void write_trainlog(const TrainLog& log, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write train log " + path.string());
    for (const auto& r : log.epochs) out << trainlog_line(r) << '\n';
    if (!out) throw UsageError("failed writing train log " + path.string());
}

TrainLog read_trainlog(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open train log " + path.string());
    TrainLog log;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) log.epochs.push_back(parse_trainlog_line(line));
    return log;
}

std::filesystem::path trainlog_path_for(const std::filesystem::path& checkpoint_path) {
    auto p = checkpoint_path;
    p += ".trainlog.jsonl";
    return p;
}

}  // namespace useq
