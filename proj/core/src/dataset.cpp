#include "useq/dataset.hpp"

#include <fstream>
#include <istream>

#include "useq/errors.hpp"

namespace useq {

DatasetFormat parse_dataset_format(std::string_view text) {
    if (text == "tsv") return DatasetFormat::tsv;
    if (text == "csv") return DatasetFormat::csv;
    throw UsageError("unknown dataset format '" + std::string(text) + "'");
}

namespace {

bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t extra;
        std::uint32_t cp;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c >> 5) == 0x6) {
            extra = 1;
            cp = c & 0x1F;
        } else if ((c >> 4) == 0xE) {
            extra = 2;
            cp = c & 0x0F;
        } else if ((c >> 3) == 0x1E) {
            extra = 3;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + extra >= s.size()) return false;
        for (std::size_t k = 1; k <= extra; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc >> 6) != 0x2) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        // overlong forms, surrogates, out of range
        if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) ||
            (extra == 3 && cp < 0x10000) || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
            return false;
        i += extra + 1;
    }
    return true;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::uint8_t parse_label(std::string_view text, std::size_t line_no) {
    if (text == "0") return 0;
    if (text == "1") return 1;
    throw ParseError(line_no, "label must be 0 or 1, got '" + std::string(text) + "'");
}

}  // namespace

DatasetFile parse_dataset(std::istream& in, DatasetFormat format, std::string path) {
    DatasetFile file;
    file.path = std::move(path);
    std::string line;
    std::size_t line_no = 0;
    bool header_pending = format == DatasetFormat::csv;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') {
            ++file.skipped_lines;
            continue;
        }
        if (!valid_utf8(line)) throw ParseError(line_no, "invalid UTF-8");
        if (header_pending) {
            header_pending = false;
            ++file.skipped_lines;
            continue;
        }
        LabeledUrl record;
        if (format == DatasetFormat::tsv) {
            const auto tab = line.find('\t');
            if (tab == std::string::npos) throw ParseError(line_no, "expected <label><TAB><url>");
            record.label = parse_label(std::string_view(line).substr(0, tab), line_no);
            record.url = line.substr(tab + 1);
        } else {
            const auto comma = line.rfind(',');
            if (comma == std::string::npos) throw ParseError(line_no, "expected <url>,<label>");
            record.label = parse_label(trim(std::string_view(line).substr(comma + 1)), line_no);
            record.url = line.substr(0, comma);
        }
        if (record.url.empty()) throw ParseError(line_no, "empty url");
        file.records.push_back(std::move(record));
    }
    if (file.records.empty()) throw UsageError("dataset " + file.path + " contains no records");
    return file;
}

DatasetFile load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open dataset " + path.string());
    return parse_dataset(in, format, path.string());
}

void write_dataset(const std::filesystem::path& path, std::span<const LabeledUrl> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write dataset " + path.string());
    for (const auto& r : records) out << static_cast<int>(r.label) << '\t' << r.url << '\n';
    if (!out) throw UsageError("failed writing dataset " + path.string());
}

std::size_t count_label(std::span<const LabeledUrl> records, std::uint8_t label) {
    std::size_t n = 0;
    for (const auto& r : records) n += r.label == label;
    return n;
}

}  // namespace useq
