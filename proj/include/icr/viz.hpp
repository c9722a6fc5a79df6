#pragma once

// Token-score JSON and the HTML heatmap rendered from it.
//
// {"mode": "...", "queries": [{"qid": "...", "documents": [
//     {"doc_id", "rank", "presented_position", "score", "kept_tokens",
//      "dropped_tokens", "tokens": [...], "scores": [...]}, ...]}]}
//
// Documents are listed in final rank order.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>

#include "icr/error.hpp"
#include "icr/pipeline.hpp"
#include "json.hpp"

namespace icr {

inline nlohmann::json token_scores_json(const QueryResult& r) {
    nlohmann::json docs = nlohmann::json::array();
    std::size_t rank_pos = 0;
    for (const auto& entry : r.scored.ranking.entries) {
        ++rank_pos;
        const auto* table = r.scored.token_scores.find(entry.doc_id);
        const auto* span = r.layout.find(entry.doc_id);
        std::size_t presented = 0;
        for (std::size_t p = 0; p < r.layout.doc_spans.size(); ++p)
            if (r.layout.doc_spans[p].doc_id == entry.doc_id) presented = p + 1;
        nlohmann::json tokens = nlohmann::json::array();
        if (span)
            for (std::size_t t = span->tokens.begin; t < span->tokens.end; ++t)
                tokens.push_back(std::string(r.layout.token_text(t)));
        std::size_t kept = 0, dropped = 0;
        for (const auto& ds : r.scored.doc_scores)
            if (ds.doc_id == entry.doc_id) {
                kept = ds.kept_token_count;
                dropped = ds.dropped_token_count;
            }
        docs.push_back({{"doc_id", entry.doc_id},
                        {"rank", rank_pos},
                        {"presented_position", presented},
                        {"score", entry.score},
                        {"kept_tokens", kept},
                        {"dropped_tokens", dropped},
                        {"tokens", std::move(tokens)},
                        {"scores", table ? table->scores : std::vector<double>{}}});
    }
    return {{"qid", r.qid}, {"documents", std::move(docs)}};
}

namespace detail {

inline std::string html_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&#39;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string alpha(double a) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.3f", std::clamp(a, 0.0, 1.0));
    return buf;
}

}  // namespace detail

inline constexpr std::string_view kPositiveRgb = "37,99,235";
inline constexpr std::string_view kNegativeRgb = "220,38,38";

/// One block per document. Positive scores shade blue in proportion to the
/// document's largest positive score; negative scores shade red in
/// proportion to its most negative one. Zero scores are left unstyled.
inline std::string render_heatmap_html(const nlohmann::json& token_scores) {
    std::string html =
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Token scores</title>\n"
        "<style>body{font-family:sans-serif;max-width:60em;margin:auto}"
        ".doc{margin:1em 0;padding:.5em;border:1px solid #ccc}"
        ".doc span{padding:0 1px}</style></head><body>\n";
    try {
        for (const auto& q : token_scores.at("queries")) {
            html += "<h2>Query " + detail::html_escape(q.at("qid").get<std::string>()) + "</h2>\n";
            for (const auto& d : q.at("documents")) {
                const auto tokens = d.at("tokens").get<std::vector<std::string>>();
                const auto scores = d.at("scores").get<std::vector<double>>();
                if (tokens.size() != scores.size())
                    fail(ErrorCode::FormatError, "tokens/scores length mismatch for " + d.at("doc_id").dump());
                double max_pos = 0.0, max_neg = 0.0;
                for (double s : scores) {
                    max_pos = std::max(max_pos, s);
                    max_neg = std::max(max_neg, -s);
                }
                html += "<div class=\"doc\"><div><b>#" + d.at("rank").dump() + "</b> " +
                        detail::html_escape(d.at("doc_id").get<std::string>()) + " score=" +
                        detail::html_escape(d.at("score").dump()) + "</div>\n<p>";
                for (std::size_t i = 0; i < tokens.size(); ++i) {
                    const double s = scores[i];
                    html += "<span";
                    if (s > 0.0)
                        html += " style=\"background:rgba(" + std::string(kPositiveRgb) + "," +
                                detail::alpha(s / max_pos) + ")\"";
                    else if (s < 0.0)
                        html += " style=\"background:rgba(" + std::string(kNegativeRgb) + "," +
                                detail::alpha(-s / max_neg) + ")\"";
                    html += " title=\"" + detail::html_escape(nlohmann::json(s).dump()) + "\">" +
                            detail::html_escape(tokens[i]) + "</span> ";
                }
                html += "</p></div>\n";
            }
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::FormatError, std::string("token-score JSON: ") + e.what());
    }
    html += "</body></html>\n";
    return html;
}

}  // namespace icr
