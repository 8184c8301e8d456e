#include "useq/tokenizer.hpp"

#include <algorithm>
#include <numeric>

#include "useq/errors.hpp"

namespace useq {

void TokenizerConfig::validate() const {
    if (max_len < 1) throw UsageError("tokenizer max_len must be >= 1");
    if (max_tokens < 2) throw UsageError("tokenizer max_tokens must be >= 2");
}

std::string_view to_string(TokenMode mode) {
    return mode == TokenMode::delimiter ? "delimiter" : "character";
}

std::string_view to_string(PadSide side) { return side == PadSide::pre ? "pre" : "post"; }

TokenMode parse_token_mode(std::string_view text) {
    if (text == "delimiter") return TokenMode::delimiter;
    if (text == "character") return TokenMode::character;
    throw UsageError("unknown token mode '" + std::string(text) + "'");
}

PadSide parse_pad_side(std::string_view text) {
    if (text == "pre") return PadSide::pre;
    if (text == "post") return PadSide::post;
    throw UsageError("unknown padding side '" + std::string(text) + "'");
}

namespace {

bool is_token_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

std::size_t utf8_length(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead >> 5) == 0x6) return 2;
    if ((lead >> 4) == 0xE) return 3;
    if ((lead >> 3) == 0x1E) return 4;
    return 1;  // stray continuation byte: emit it on its own
}

}  // namespace

std::vector<std::string> split_url(std::string_view url, const TokenizerConfig& config) {
    std::vector<std::string> tokens;
    if (config.mode == TokenMode::character) {
        for (std::size_t i = 0; i < url.size();) {
            const std::size_t n =
                std::min(utf8_length(static_cast<unsigned char>(url[i])), url.size() - i);
            std::string t(url.substr(i, n));
            if (config.lowercase && n == 1) t[0] = ascii_lower(t[0]);
            tokens.push_back(std::move(t));
            i += n;
        }
        return tokens;
    }
    std::string current;
    for (char c : url) {
        if (is_token_byte(static_cast<unsigned char>(c))) {
            current.push_back(config.lowercase ? ascii_lower(c) : c);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::size_t max_tokens,
                       std::size_t fitted_corpus_size)
    : tokens_(std::move(tokens)), max_tokens_(max_tokens), fitted_corpus_size_(fitted_corpus_size) {
    if (max_tokens_ < 2) throw UsageError("vocabulary max_tokens must be >= 2");
    if (tokens_.size() > max_tokens_ - 1)
        throw UsageError("vocabulary holds " + std::to_string(tokens_.size()) +
                         " tokens but max_tokens is " + std::to_string(max_tokens_));
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (!index_.emplace(tokens_[i], static_cast<std::int32_t>(i + 1)).second)
            throw UsageError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
}

std::int32_t Vocabulary::id_of(std::string_view token) const {
    auto it = index_.find(token);
    return it == index_.end() ? 0 : it->second;
}

const std::string& Vocabulary::token(std::int32_t id) const {
    if (id < 1 || static_cast<std::size_t>(id) > tokens_.size())
        throw ContractError("vocabulary id " + std::to_string(id) + " out of range");
    return tokens_[static_cast<std::size_t>(id - 1)];
}

Vocabulary fit(std::span<const std::string> corpus, const TokenizerConfig& config) {
    config.validate();
    if (corpus.empty()) throw UsageError("cannot fit a vocabulary on an empty corpus");

    struct Entry {
        std::string token;
        std::size_t count;
    };
    std::vector<Entry> entries;  // in first-occurrence order
    std::unordered_map<std::string, std::size_t> position;
    for (const auto& url : corpus) {
        for (auto& tok : split_url(url, config)) {
            auto [it, inserted] = position.emplace(tok, entries.size());
            if (inserted)
                entries.push_back({std::move(tok), 1});
            else
                ++entries[it->second].count;
        }
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.count > b.count; });
    const std::size_t keep = std::min(entries.size(), config.max_tokens - 1);
    std::vector<std::string> tokens;
    tokens.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) tokens.push_back(std::move(entries[i].token));
    return Vocabulary(std::move(tokens), config.max_tokens, corpus.size());
}

std::vector<std::int32_t> encode(std::string_view url, const Vocabulary& vocab,
                                 const TokenizerConfig& config) {
    std::vector<std::int32_t> ids;
    for (const auto& tok : split_url(url, config))
        if (std::int32_t id = vocab.id_of(tok); id != 0) ids.push_back(id);
    return ids;
}

std::vector<std::int32_t> pad(std::span<const std::int32_t> ids, const TokenizerConfig& config) {
    const std::size_t len = config.max_len;
    std::vector<std::int32_t> out(len, 0);
    if (ids.size() >= len) {
        const std::size_t start = config.truncation == PadSide::pre ? ids.size() - len : 0;
        std::copy_n(ids.begin() + static_cast<std::ptrdiff_t>(start), len, out.begin());
        return out;
    }
    const std::size_t offset = config.padding == PadSide::pre ? len - ids.size() : 0;
    std::copy(ids.begin(), ids.end(), out.begin() + static_cast<std::ptrdiff_t>(offset));
    return out;
}

std::vector<std::int32_t> encode_padded(std::string_view url, const Vocabulary& vocab,
                                        const TokenizerConfig& config) {
    const auto ids = encode(url, vocab, config);
    return pad(ids, config);
}

}  // namespace useq
