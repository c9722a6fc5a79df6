#pragma once

// Prompt assembly for in-context re-ranking.
//
// A prompt is: prefix marker, instruction, blank line, the candidate
// documents numbered "[k]" in presentation order, then "Query: <text>" and
// the suffix marker. The query comes last so the query-pass and the
// calibration-pass prompts share every token up to the query text, which is
// what lets a backend reuse the document KV cache between the two passes.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "icr/error.hpp"
#include "icr/rng.hpp"
#include "icr/tokenizer.hpp"

namespace icr {

inline constexpr std::string_view kQaInstruction =
    "Here are some paragraphs. Please answer the question based on the relevant "
    "information in the paragraphs.";
inline constexpr std::string_view kIeInstruction =
    "Here are some paragraphs. Please find information that are relevant to the query.";
inline constexpr std::string_view kQueryLabel = "Query: ";
inline constexpr std::string_view kCalibrationQuery = "N/A";

struct Document {
    std::string id;
    std::optional<std::string> title;
    std::string text;
};

enum class QueryStyle { QA, IE };

struct Query {
    std::string text;
    QueryStyle style = QueryStyle::QA;
};

inline std::string_view instruction_for(QueryStyle style) {
    return style == QueryStyle::QA ? kQaInstruction : kIeInstruction;
}

inline std::string_view to_string(QueryStyle style) { return style == QueryStyle::QA ? "qa" : "ie"; }

struct ModelProfile {
    std::string name;
    std::string prefix_marker;
    std::string suffix_marker;
    std::uint32_t layers = 1;
    std::uint32_t heads = 1;
    std::shared_ptr<const Tokenizer> tokenizer;

    void check() const {
        if (layers == 0 || heads == 0) fail(ErrorCode::InvalidConfig, "profile needs L >= 1 and H >= 1");
        if (!tokenizer) fail(ErrorCode::InvalidConfig, "profile has no tokenizer");
    }
};

enum class OrderKind { retriever, reversed, random };

struct OrderMode {
    OrderKind kind = OrderKind::reversed;
    std::uint64_t seed = 0;

    static OrderMode retriever() { return {OrderKind::retriever, 0}; }
    static OrderMode reversed() { return {OrderKind::reversed, 0}; }
    static OrderMode random(std::uint64_t seed) { return {OrderKind::random, seed}; }
    friend bool operator==(const OrderMode&, const OrderMode&) = default;
};

inline std::string_view to_string(OrderKind kind) {
    switch (kind) {
        case OrderKind::retriever: return "retriever";
        case OrderKind::reversed: return "reversed";
        case OrderKind::random: return "random";
    }
    return "reversed";
}

struct PromptOptions {
    /// Prefix each document with "[k] ".
    bool number_documents = true;
    /// Count the "[k]" identifier tokens as part of the document span.
    bool identifier_in_span = true;
    /// 0 = no truncation.
    std::size_t max_words_per_document = 0;
};

/// Half-open token index range.
struct TokenSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    bool empty() const noexcept { return begin == end; }
    bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
    friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct DocSpan {
    std::string doc_id;
    std::uint32_t identifier = 0;  // the "[k]" number shown in the prompt
    CharRange chars;
    TokenSpan tokens;
    friend bool operator==(const DocSpan&, const DocSpan&) = default;
};

enum class PassKind { query, calibration };

inline std::string_view to_string(PassKind p) { return p == PassKind::query ? "query" : "calibration"; }

struct PromptLayout {
    PassKind pass = PassKind::query;
    std::string text;
    std::vector<Token> tokens;
    /// In presentation order.
    std::vector<DocSpan> doc_spans;
    CharRange instruction_chars;
    TokenSpan instruction_span;
    CharRange query_chars;
    /// I_Q: the tokens of the query text only, without the "Query: " label
    /// and without suffix-marker tokens.
    TokenSpan query_span;
    std::vector<std::string> presentation_order;
    std::map<std::uint32_t, std::string> identifier_map;
    OrderMode order;
    QueryStyle style = QueryStyle::QA;
    std::string query_text;

    std::size_t total_len() const noexcept { return tokens.size(); }

    std::vector<std::int32_t> token_ids() const {
        std::vector<std::int32_t> ids;
        ids.reserve(tokens.size());
        for (const auto& t : tokens) ids.push_back(t.id);
        return ids;
    }

    const DocSpan* find(std::string_view doc_id) const {
        for (const auto& d : doc_spans)
            if (d.doc_id == doc_id) return &d;
        return nullptr;
    }

    std::vector<std::uint32_t> query_rows() const {
        std::vector<std::uint32_t> rows;
        for (std::size_t k = query_span.begin; k < query_span.end; ++k)
            rows.push_back(static_cast<std::uint32_t>(k));
        return rows;
    }

    /// Surface text of token i.
    std::string_view token_text(std::size_t i) const {
        const auto& c = tokens.at(i).chars;
        return std::string_view(text).substr(c.begin, c.size());
    }
};

/// Maps each ordered, disjoint character segment to the contiguous run of
/// tokens it owns. A token is owned by the segment containing its first
/// character; a token whose first character lies outside every segment (for
/// instance a leading space merged into a word) goes to the first segment it
/// intersects.
inline std::vector<TokenSpan> locate_spans(std::string_view full_text,
                                           std::span<const CharRange> segments,
                                           std::span<const Token> tokens) {
    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (segments[s].begin > segments[s].end || segments[s].end > full_text.size())
            fail(ErrorCode::TokenizerOffsetMismatch, "segment " + std::to_string(s) + " outside text");
        if (s > 0 && segments[s].begin < segments[s - 1].end)
            fail(ErrorCode::TokenizerOffsetMismatch, "segments must be ordered and disjoint");
    }

    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> owner(tokens.size(), kNone);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        const CharRange& c = tokens[t].chars;
        for (std::size_t s = 0; s < segments.size(); ++s) {
            if (segments[s].contains(c.begin)) {
                owner[t] = s;
                break;
            }
        }
        if (owner[t] != kNone) continue;
        for (std::size_t s = 0; s < segments.size(); ++s) {
            if (c.intersects(segments[s])) {
                owner[t] = s;
                break;
            }
        }
    }

    std::vector<TokenSpan> spans(segments.size());
    std::vector<bool> seen(segments.size(), false);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        const std::size_t s = owner[t];
        if (s == kNone) continue;
        if (!seen[s]) {
            spans[s] = {t, t + 1};
            seen[s] = true;
        } else if (spans[s].end == t) {
            spans[s].end = t + 1;
        } else {
            fail(ErrorCode::NonContiguousSpan,
                 "segment " + std::to_string(s) + " owns non-adjacent tokens " +
                     std::to_string(spans[s].end - 1) + " and " + std::to_string(t));
        }
    }
    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (!seen[s])
            fail(ErrorCode::TokenizerOffsetMismatch,
                 "segment " + std::to_string(s) + " [" + std::to_string(segments[s].begin) + "," +
                     std::to_string(segments[s].end) + ") maps to zero tokens");
    }
    return spans;
}

inline std::vector<TokenSpan> locate_spans(std::string_view full_text,
                                           std::span<const CharRange> segments,
                                           const Tokenizer& tokenizer) {
    const auto tokens = tokenizer.tokenize(full_text);
    return locate_spans(full_text, segments, tokens);
}

/// Ids in the order they will appear in the prompt.
inline std::vector<std::string> presentation_order(std::span<const std::string> retriever_order,
                                                   OrderMode mode) {
    std::vector<std::string> out(retriever_order.begin(), retriever_order.end());
    switch (mode.kind) {
        case OrderKind::retriever: break;
        case OrderKind::reversed: std::reverse(out.begin(), out.end()); break;
        case OrderKind::random: seeded_shuffle(std::span<std::string>(out), mode.seed); break;
    }
    return out;
}

/// Keeps the first max_words whitespace-separated words, preserving the
/// original spacing between them.
inline std::string truncate_words(std::string_view text, std::size_t max_words) {
    if (max_words == 0) return std::string(text);
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
    std::size_t i = 0, words = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        if (i == text.size()) break;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (++words == max_words) return std::string(text.substr(0, i));
    }
    return std::string(text);
}

namespace detail {

inline bool blank(std::string_view s) {
    return s.find_first_not_of(" \t\n\r\v\f") == std::string_view::npos;
}

// Tokenizes the prompt and resolves the instruction, document and query
// segments into token spans.
inline void resolve_spans(PromptLayout& layout, const Tokenizer& tokenizer) {
    layout.tokens = tokenizer.tokenize(layout.text);
    std::vector<CharRange> segments;
    segments.reserve(layout.doc_spans.size() + 2);
    segments.push_back(layout.instruction_chars);
    for (const auto& d : layout.doc_spans) segments.push_back(d.chars);
    segments.push_back(layout.query_chars);
    const auto spans = locate_spans(layout.text, segments, layout.tokens);
    layout.instruction_span = spans.front();
    for (std::size_t i = 0; i < layout.doc_spans.size(); ++i) layout.doc_spans[i].tokens = spans[i + 1];
    layout.query_span = spans.back();
}

}  // namespace detail

/// Builds the re-ranking prompt. `docs` is in retriever order (rank 1 first).
inline PromptLayout build_prompt(std::span<const Document> docs, const Query& query,
                                 const ModelProfile& profile,
                                 OrderMode order = OrderMode::reversed(),
                                 const PromptOptions& options = {}) {
    profile.check();
    if (docs.empty()) fail(ErrorCode::EmptyCandidateSet, "no candidate documents");
    if (detail::blank(query.text)) fail(ErrorCode::InvalidQuery, "query text is empty");

    std::map<std::string_view, const Document*> by_id;
    std::vector<std::string> retriever_ids;
    retriever_ids.reserve(docs.size());
    for (const auto& d : docs) {
        if (d.id.empty()) fail(ErrorCode::InvalidDocument, "document with empty id");
        if (detail::blank(d.text)) fail(ErrorCode::InvalidDocument, "document '" + d.id + "' has empty text");
        if (!by_id.emplace(d.id, &d).second) fail(ErrorCode::DuplicateDocumentId, d.id);
        retriever_ids.push_back(d.id);
    }

    PromptLayout layout;
    layout.pass = PassKind::query;
    layout.order = order;
    layout.style = query.style;
    layout.query_text = query.text;
    layout.presentation_order = presentation_order(retriever_ids, order);

    std::string& text = layout.text;
    text += profile.prefix_marker;
    const auto instruction = instruction_for(query.style);
    layout.instruction_chars = {text.size(), text.size() + instruction.size()};
    text += instruction;
    text += "\n\n";

    std::uint32_t k = 0;
    for (const auto& id : layout.presentation_order) {
        const Document& doc = *by_id.at(id);
        ++k;
        DocSpan span;
        span.doc_id = id;
        span.identifier = k;
        std::size_t begin = text.size();
        if (options.number_documents) {
            text += "[" + std::to_string(k) + "] ";
            if (!options.identifier_in_span) begin = text.size();
        }
        if (doc.title && !detail::blank(*doc.title)) {
            text += *doc.title;
            text += "\n";
        }
        text += truncate_words(doc.text, options.max_words_per_document);
        span.chars = {begin, text.size()};
        text += "\n\n";
        layout.identifier_map.emplace(k, id);
        layout.doc_spans.push_back(std::move(span));
    }

    text += kQueryLabel;
    layout.query_chars = {text.size(), text.size() + query.text.size()};
    text += query.text;
    text += profile.suffix_marker;

    detail::resolve_spans(layout, *profile.tokenizer);
    return layout;
}

/// Derives the content-free calibration variant: the same prompt with the
/// query text replaced by "N/A". Every token before the query text, and
/// hence every document span, is identical to the input layout.
inline PromptLayout build_calibration_layout(const PromptLayout& layout, const ModelProfile& profile) {
    profile.check();
    const std::string_view original(layout.text);
    if (layout.query_chars.end > original.size() ||
        original.substr(layout.query_chars.end) != profile.suffix_marker)
        fail(ErrorCode::PrefixDivergence, "layout was not built with this profile's suffix marker");

    PromptLayout cal;
    cal.pass = PassKind::calibration;
    cal.order = layout.order;
    cal.style = layout.style;
    cal.query_text = std::string(kCalibrationQuery);
    cal.presentation_order = layout.presentation_order;
    cal.identifier_map = layout.identifier_map;
    cal.instruction_chars = layout.instruction_chars;
    cal.doc_spans = layout.doc_spans;

    cal.text = std::string(original.substr(0, layout.query_chars.begin));
    cal.query_chars = {cal.text.size(), cal.text.size() + kCalibrationQuery.size()};
    cal.text += kCalibrationQuery;
    cal.text += profile.suffix_marker;

    detail::resolve_spans(cal, *profile.tokenizer);

    if (cal.query_span.begin != layout.query_span.begin)
        fail(ErrorCode::PrefixDivergence, "query start token moved between passes");
    for (std::size_t i = 0; i < layout.query_span.begin; ++i) {
        if (!(cal.tokens[i] == layout.tokens[i]))
            fail(ErrorCode::PrefixDivergence, "token " + std::to_string(i) + " differs between passes");
    }
    for (std::size_t i = 0; i < layout.doc_spans.size(); ++i) {
        if (!(cal.doc_spans[i] == layout.doc_spans[i]))
            fail(ErrorCode::PrefixDivergence, "document span of '" + layout.doc_spans[i].doc_id + "' moved");
    }
    return cal;
}

}  // namespace icr
