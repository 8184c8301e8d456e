#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace useq {

// One URL with its class: 1 = phishing, 0 = legitimate.
struct LabeledUrl {
    std::uint8_t label = 0;
    std::string url;

    friend bool operator==(const LabeledUrl&, const LabeledUrl&) = default;
};

enum class DatasetFormat {
    tsv,  // "<label>\t<url>" per line
    csv,  // header row, then "<url>,<label>" (split at the last comma)
};

DatasetFormat parse_dataset_format(std::string_view text);

struct DatasetFile {
    std::string path;
    std::vector<LabeledUrl> records;
    // Blank lines, '#' comments and the CSV header row.
    std::size_t skipped_lines = 0;
};

// Parses a dataset stream. CR before LF and a missing final newline are
// accepted. Throws ParseError (with a 1-based line number) for a malformed
// line or invalid UTF-8, and UsageError if no records remain.
DatasetFile parse_dataset(std::istream& in, DatasetFormat format = DatasetFormat::tsv,
                          std::string path = "<stream>");
DatasetFile load_dataset(const std::filesystem::path& path,
                         DatasetFormat format = DatasetFormat::tsv);

void write_dataset(const std::filesystem::path& path, std::span<const LabeledUrl> records);

std::size_t count_label(std::span<const LabeledUrl> records, std::uint8_t label);

}  // namespace useq
