#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fedids {

/// Splits text into surface tokens: maximal runs of ASCII letters become one
/// lowercased token; every other non-whitespace character (digits, '.', '-',
/// punctuation, a whole UTF-8 sequence) becomes its own token.
std::vector<std::string> surface_tokenize(std::string_view text);

using TokenId = std::int32_t;

class Vocabulary {
  public:
    static constexpr TokenId kPad = 0;
    static constexpr TokenId kUnk = 1;
    static constexpr TokenId kCls = 2;
    static constexpr TokenId kSep = 3;
    static constexpr std::size_t kReserved = 4;

    /// Reserved tokens, then surface tokens by descending corpus frequency
    /// (ties lexicographic), truncated to `max_size` entries in total.
    static Vocabulary build(std::span<const std::string> corpus, std::size_t max_size);

    /// One token per line; line number is the id.
    static Vocabulary load(std::istream& in);
    void save(std::ostream& out) const;

    TokenId id_of(std::string_view token) const;
    const std::string& token(TokenId id) const;
    std::size_t size() const noexcept { return tokens_.size(); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

  private:
    explicit Vocabulary(std::vector<std::string> tokens);

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
};

/// Fixed-length encoder input. ids[i] == PAD and mask[i] == 0 for i >= true_length.
struct TokenSequence {
    std::vector<TokenId> ids;
    std::vector<std::uint8_t> mask;
    std::size_t true_length = 0;

    std::size_t length() const noexcept { return ids.size(); }
    friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

/// [CLS] tokens... [SEP], surface tokens truncated from the right so the
/// result fits `max_len`, then padded to `max_len`.
TokenSequence encode(const Vocabulary& vocab, std::string_view text, std::size_t max_len);

}  // namespace fedids
