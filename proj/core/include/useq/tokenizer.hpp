#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace useq {

enum class TokenMode { delimiter, character };
enum class PadSide { pre, post };

struct TokenizerConfig {
    TokenMode mode = TokenMode::delimiter;
    std::size_t max_tokens = 10000;  // ids are < max_tokens; 0 is padding
    std::size_t max_len = 100;
    bool lowercase = true;
    PadSide padding = PadSide::pre;
    PadSide truncation = PadSide::pre;

    // Throws UsageError unless max_len >= 1 and max_tokens >= 2.
    void validate() const;
    friend bool operator==(const TokenizerConfig&, const TokenizerConfig&) = default;
};

std::string_view to_string(TokenMode mode);
std::string_view to_string(PadSide side);
TokenMode parse_token_mode(std::string_view text);
PadSide parse_pad_side(std::string_view text);

// Delimiter mode: split on every ASCII character that is not a letter or
// digit. Bytes >= 0x80 are token characters, so multi-byte UTF-8 sequences
// stay intact. Character mode: one token per UTF-8 code point.
std::vector<std::string> split_url(std::string_view url, const TokenizerConfig& config);

// Frequency-ranked token->id map. Ids are 1..size(), most frequent first,
// ties broken by first occurrence in the fitted corpus. Immutable once built.
class Vocabulary {
public:
    Vocabulary() = default;
    // tokens[i] receives id i+1.
    Vocabulary(std::vector<std::string> tokens, std::size_t max_tokens,
               std::size_t fitted_corpus_size);

    // Returns 0 for tokens outside the vocabulary.
    std::int32_t id_of(std::string_view token) const;
    const std::string& token(std::int32_t id) const;
    std::span<const std::string> tokens() const noexcept { return tokens_; }

    std::size_t size() const noexcept { return tokens_.size(); }
    std::size_t max_tokens() const noexcept { return max_tokens_; }
    std::size_t fitted_corpus_size() const noexcept { return fitted_corpus_size_; }
    // Number of distinct ids an encoded sequence can contain, padding included.
    std::size_t id_space() const noexcept { return tokens_.size() + 1; }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.tokens_ == b.tokens_ && a.max_tokens_ == b.max_tokens_ &&
               a.fitted_corpus_size_ == b.fitted_corpus_size_;
    }

private:
    struct StringHash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept {
            return std::hash<std::string_view>{}(s);
        }
    };

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::int32_t, StringHash, std::equal_to<>> index_;
    std::size_t max_tokens_ = 0;
    std::size_t fitted_corpus_size_ = 0;
};

// Throws UsageError on an empty corpus.
Vocabulary fit(std::span<const std::string> corpus, const TokenizerConfig& config);

// Unknown tokens are dropped rather than mapped to an OOV id.
std::vector<std::int32_t> encode(std::string_view url, const Vocabulary& vocab,
                                 const TokenizerConfig& config);

std::vector<std::int32_t> pad(std::span<const std::int32_t> ids, const TokenizerConfig& config);

// encode + pad.
std::vector<std::int32_t> encode_padded(std::string_view url, const Vocabulary& vocab,
                                        const TokenizerConfig& config);

}  // namespace useq
