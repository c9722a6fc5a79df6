#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "icr/error.hpp"

namespace icr {

/// Half-open character range [begin, end) into a prompt string.
struct CharRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    bool contains(std::size_t pos) const noexcept { return pos >= begin && pos < end; }
    bool intersects(const CharRange& o) const noexcept { return begin < o.end && o.begin < end; }
    friend bool operator==(const CharRange&, const CharRange&) = default;
};

struct Token {
    std::int32_t id = 0;
    CharRange chars;
    friend bool operator==(const Token&, const Token&) = default;
};

/// What the layout builder needs from a tokenizer: ids plus the character
/// range each token covers in the input. Implementations must be safe to
/// call concurrently on a const instance.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::vector<Token> tokenize(std::string_view text) const = 0;
    virtual std::string name() const = 0;
};

/// Splits on ASCII whitespace and hashes each piece into [0, vocab_size)
/// with 64-bit FNV-1a.
class WhitespaceTokenizer final : public Tokenizer {
public:
    explicit WhitespaceTokenizer(std::uint32_t vocab_size = 32000) : vocab_size_(vocab_size) {
        if (vocab_size == 0) fail(ErrorCode::InvalidConfig, "vocab_size must be positive");
    }

    std::vector<Token> tokenize(std::string_view text) const override {
        std::vector<Token> out;
        std::size_t i = 0;
        while (i < text.size()) {
            while (i < text.size() && is_space(text[i])) ++i;
            if (i == text.size()) break;
            const std::size_t start = i;
            while (i < text.size() && !is_space(text[i])) ++i;
            out.push_back({hash_id(text.substr(start, i - start)), {start, i}});
        }
        return out;
    }

    std::string name() const override { return "whitespace-fnv1a/" + std::to_string(vocab_size_); }

    std::uint32_t vocab_size() const noexcept { return vocab_size_; }

    std::int32_t hash_id(std::string_view piece) const noexcept {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (unsigned char c : piece) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        return static_cast<std::int32_t>(h % vocab_size_);
    }

private:
    static bool is_space(char c) noexcept {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    }

    std::uint32_t vocab_size_;
};

}  // namespace icr
