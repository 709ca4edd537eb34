#include "fedids/tokenizer.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

namespace fedids {

namespace {

constexpr std::string_view kReservedTokens[] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};

bool is_ascii_letter(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

}  // namespace

std::vector<std::string> surface_tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_space(c)) {
            ++i;
        } else if (is_ascii_letter(c)) {
            std::string word;
            while (i < text.size() && is_ascii_letter(static_cast<unsigned char>(text[i]))) {
                const auto ch = static_cast<unsigned char>(text[i]);
                word += static_cast<char>(ch >= 'A' && ch <= 'Z' ? ch - 'A' + 'a' : ch);
                ++i;
            }
            tokens.push_back(std::move(word));
        } else {
            std::size_t end = i + 1;
            if (c >= 0x80) {
                // Keep a multi-byte UTF-8 sequence together.
                while (end < text.size() && (static_cast<unsigned char>(text[end]) & 0xC0) == 0x80) {
                    ++end;
                }
            }
            tokens.emplace_back(text.substr(i, end - i));
            i = end;
        }
    }
    return tokens;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
            throw std::invalid_argument("vocabulary: duplicate token '" + tokens_[i] + "'");
        }
    }
}

Vocabulary Vocabulary::build(std::span<const std::string> corpus, std::size_t max_size) {
    if (max_size < kReserved + 1) {
        throw std::invalid_argument("vocabulary: max_size must be at least 5");
    }
    std::map<std::string, std::size_t> counts;
    for (const auto& doc : corpus) {
        for (auto& tok : surface_tokenize(doc)) {
            ++counts[std::move(tok)];
        }
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    // `counts` is already lexicographic, so a stable sort by count keeps the tie order.
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    std::vector<std::string> tokens(std::begin(kReservedTokens), std::end(kReservedTokens));
    for (auto& [tok, count] : ranked) {
        if (tokens.size() >= max_size) break;
        // A surface token can never look like "[PAD]" ('[' is its own token), so no clash.
        tokens.push_back(std::move(tok));
    }
    return Vocabulary(std::move(tokens));
}

Vocabulary Vocabulary::load(std::istream& in) {
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        tokens.push_back(line);
    }
    if (tokens.size() < kReserved) {
        throw std::invalid_argument("vocabulary file: fewer than four reserved tokens");
    }
    for (std::size_t i = 0; i < kReserved; ++i) {
        if (tokens[i] != kReservedTokens[i]) {
            throw std::invalid_argument("vocabulary file: line " + std::to_string(i + 1) +
                                        " must be " + std::string(kReservedTokens[i]));
        }
    }
    return Vocabulary(std::move(tokens));
}

void Vocabulary::save(std::ostream& out) const {
    for (const auto& tok : tokens_) {
        out << tok << '\n';
    }
}

TokenId Vocabulary::id_of(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw std::out_of_range("token id " + std::to_string(id) + " out of range");
    }
    return tokens_[static_cast<std::size_t>(id)];
}

TokenSequence encode(const Vocabulary& vocab, std::string_view text, std::size_t max_len) {
    if (max_len < 2) {
        throw std::invalid_argument("encode: max_len must be at least 2");
    }
    const auto surface = surface_tokenize(text);
    const std::size_t kept = std::min(surface.size(), max_len - 2);

    TokenSequence seq;
    seq.ids.assign(max_len, Vocabulary::kPad);
    seq.mask.assign(max_len, 0);
    seq.ids[0] = Vocabulary::kCls;
    for (std::size_t i = 0; i < kept; ++i) {
        seq.ids[i + 1] = vocab.id_of(surface[i]);
    }
    seq.ids[kept + 1] = Vocabulary::kSep;
    seq.true_length = kept + 2;
    std::fill(seq.mask.begin(), seq.mask.begin() + static_cast<std::ptrdiff_t>(seq.true_length), 1);
    return seq;
}

}  // namespace fedids
