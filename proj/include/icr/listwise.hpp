#pragma once

// Parsing of generative listwise re-ranker output ("[2] > [1] > [3]") and
// success-rate accounting.

#include <cctype>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "icr/error.hpp"

namespace icr {

struct ListwiseResult {
    std::vector<std::uint32_t> ids;  // 1-based identifiers, best first
    std::string error;               // empty when the output was usable

    bool ok() const noexcept { return error.empty(); }
};

/// Accepts "[a] > [b] > ..." with free whitespace around tokens. The output
/// may start directly with a number when the prompt already ended in "[".
/// Text after the list is allowed only on a following line. The ids must be
/// a permutation of 1..n.
inline ListwiseResult try_parse_listwise_ranking(std::string_view text, std::uint32_t n) {
    ListwiseResult r;
    if (n == 0) {
        r.error = "n must be >= 1";
        return r;
    }
    std::size_t i = 0;
    auto skip_inline = [&] {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    };
    auto skip_all = [&] {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    };
    auto bad = [&](std::string why) {
        r.ids.clear();
        r.error = std::move(why) + " at offset " + std::to_string(i);
        return r;
    };

    skip_all();
    bool primed = i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]));
    for (;;) {
        if (!primed) {
            if (i >= text.size() || text[i] != '[') return bad("expected '['");
            ++i;
        }
        primed = false;
        skip_inline();
        if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i]))) return bad("expected identifier");
        std::uint64_t value = 0;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            value = value * 10 + static_cast<std::uint64_t>(text[i] - '0');
            if (value > n) return bad("identifier out of range");
            ++i;
        }
        skip_inline();
        if (i >= text.size() || text[i] != ']') return bad("expected ']'");
        ++i;
        r.ids.push_back(static_cast<std::uint32_t>(value));
        skip_inline();
        if (i < text.size() && text[i] == '>') {
            ++i;
            skip_all();
            continue;
        }
        break;
    }
    if (i < text.size() && text[i] != '\n' && text[i] != '\r') return bad("unexpected text after ranking");

    if (r.ids.size() != n) return bad("ranking lists " + std::to_string(r.ids.size()) + " of " + std::to_string(n));
    std::vector<bool> seen(n + 1, false);
    for (auto id : r.ids) {
        if (id == 0) return bad("identifier 0");
        if (seen[id]) return bad("identifier " + std::to_string(id) + " repeated");
        seen[id] = true;
    }
    return r;
}

/// Throws MalformedRanking when the output is unusable.
inline std::vector<std::uint32_t> parse_listwise_ranking(std::string_view text, std::uint32_t n) {
    auto r = try_parse_listwise_ranking(text, n);
    if (!r.ok()) fail(ErrorCode::MalformedRanking, r.error);
    return std::move(r.ids);
}

/// Fraction of outputs that parsed.
inline double success_rate(std::span<const ListwiseResult> results) {
    if (results.empty()) fail(ErrorCode::EmptyInput, "no parse results");
    std::size_t ok = 0;
    for (const auto& r : results) ok += r.ok() ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(results.size());
}

/// Reorders a window of candidates by a parsed ranking; an unusable output
/// leaves the window in retriever order.
inline std::vector<std::string> apply_listwise(const ListwiseResult& result, std::span<const std::string> window) {
    std::vector<std::string> out(window.begin(), window.end());
    if (!result.ok() || result.ids.size() != window.size()) return out;
    for (std::size_t i = 0; i < result.ids.size(); ++i) out[i] = window[result.ids[i] - 1];
    return out;
}

}  // namespace icr
