#pragma once

// Attention aggregation, content-free calibration, outlier filtering and
// ranking.
//
// Per document token j:
//   s(j, Q)  = 1/|I_Q| * sum_l sum_h sum_{k in I_Q} a[l][h][k][j]
//   s(j)     = s(j, Q) - s(j, "N/A")
// Per document d with token scores S:
//   s(d)     = sum of s in S with s > mean(S) - 2*stddev(S)   (all kept if stddev == 0)

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "icr/attention.hpp"
#include "icr/error.hpp"
#include "icr/prompt_layout.hpp"

namespace icr {

enum class ScorePass { query, calibration, calibrated };

struct DocTokenScores {
    std::string doc_id;
    TokenSpan span;
    std::vector<double> scores;  // aligned to span
};

struct TokenScoreTable {
    ScorePass pass = ScorePass::query;
    std::vector<DocTokenScores> docs;  // presentation order

    const DocTokenScores* find(std::string_view doc_id) const {
        for (const auto& d : docs)
            if (d.doc_id == doc_id) return &d;
        return nullptr;
    }
};

struct FilterResult {
    double score = 0.0;
    std::size_t kept = 0;
    std::size_t dropped = 0;
};

struct DocumentScore {
    std::string doc_id;
    double score = 0.0;
    std::size_t kept_token_count = 0;
    std::size_t dropped_token_count = 0;
};

struct RankedDoc {
    std::string doc_id;
    double score = 0.0;
    std::uint32_t retriever_rank = 0;  // 1-based
};

struct Ranking {
    std::vector<RankedDoc> entries;
};

enum class ScoringMode {
    full,             // aggregate -> calibrate -> filter -> sum
    no_calibration,   // aggregate -> filter -> sum
    last_token_only,  // calibrated, but I_Q reduced to the last query token
    neither,          // last-token attention sorting, no calibration, no filter
};

inline std::string_view to_string(ScoringMode m) {
    switch (m) {
        case ScoringMode::full: return "full";
        case ScoringMode::no_calibration: return "no_calibration";
        case ScoringMode::last_token_only: return "last_token_only";
        case ScoringMode::neither: return "neither";
    }
    return "full";
}

/// Which stored query rows feed the aggregation.
enum class QueryRows { all, last };

/// Aggregated attention received by every position 0..T-1 from the given
/// rows, divided by the number of rows. Accumulates in double in
/// layer-major, head-minor, ascending-row order so results are bitwise
/// reproducible.
inline std::vector<double> position_scores(const AttentionSlice& attn, std::span<const std::uint32_t> rows) {
    std::vector<double> acc(attn.context_len(), 0.0);
    if (rows.empty()) fail(ErrorCode::RowCoverageMismatch, "no query rows to aggregate");
    std::vector<std::size_t> slots;
    slots.reserve(rows.size());
    for (auto k : rows) {
        const auto slot = attn.find_row(k);
        if (!slot) fail(ErrorCode::RowCoverageMismatch, "row " + std::to_string(k) + " not stored in slice");
        slots.push_back(*slot);
    }
    for (std::uint32_t l = 0; l < attn.layers(); ++l) {
        for (std::uint32_t h = 0; h < attn.heads(); ++h) {
            for (auto slot : slots) {
                const auto row = attn.row(l, h, slot);
                for (std::size_t j = 0; j < row.size(); ++j) acc[j] += static_cast<double>(row[j]);
            }
        }
    }
    const double inv = static_cast<double>(rows.size());
    for (auto& v : acc) v /= inv;
    return acc;
}

inline TokenScoreTable aggregate_query_attention(const AttentionSlice& attn, const PromptLayout& layout,
                                                 QueryRows which = QueryRows::all) {
    if (attn.context_len() != layout.total_len())
        fail(ErrorCode::ShapeMismatch, "slice T=" + std::to_string(attn.context_len()) +
                                           " but layout T=" + std::to_string(layout.total_len()));
    const auto expected = layout.query_rows();
    const auto stored = attn.row_indices();
    if (!std::equal(expected.begin(), expected.end(), stored.begin(), stored.end()))
        fail(ErrorCode::RowCoverageMismatch, "stored rows do not match the layout's query span");

    std::vector<std::uint32_t> rows = expected;
    if (which == QueryRows::last) rows = {expected.back()};
    const auto pos = position_scores(attn, rows);

    TokenScoreTable table;
    table.pass = layout.pass == PassKind::query ? ScorePass::query : ScorePass::calibration;
    table.docs.reserve(layout.doc_spans.size());
    for (const auto& d : layout.doc_spans) {
        DocTokenScores ds{d.doc_id, d.tokens, {}};
        ds.scores.assign(pos.begin() + static_cast<std::ptrdiff_t>(d.tokens.begin),
                         pos.begin() + static_cast<std::ptrdiff_t>(d.tokens.end));
        table.docs.push_back(std::move(ds));
    }
    return table;
}

inline TokenScoreTable calibrate(const TokenScoreTable& query_scores, const TokenScoreTable& cal_scores) {
    if (query_scores.docs.size() != cal_scores.docs.size())
        fail(ErrorCode::SpanMismatch, "tables cover different document sets");
    TokenScoreTable out;
    out.pass = ScorePass::calibrated;
    out.docs.reserve(query_scores.docs.size());
    for (std::size_t i = 0; i < query_scores.docs.size(); ++i) {
        const auto& q = query_scores.docs[i];
        const auto& c = cal_scores.docs[i];
        if (q.doc_id != c.doc_id || !(q.span == c.span) || q.scores.size() != c.scores.size())
            fail(ErrorCode::SpanMismatch, "span of '" + q.doc_id + "' differs between passes");
        DocTokenScores d{q.doc_id, q.span, std::vector<double>(q.scores.size())};
        for (std::size_t j = 0; j < q.scores.size(); ++j) d.scores[j] = q.scores[j] - c.scores[j];
        out.docs.push_back(std::move(d));
    }
    return out;
}

/// Drops abnormally low tokens (more than two population standard
/// deviations below the document mean) and sums the rest.
inline FilterResult filter_and_sum(std::span<const double> scores) {
    if (scores.empty()) fail(ErrorCode::EmptySpan, "document has no tokens");
    const double n = static_cast<double>(scores.size());
    double sum = 0.0;
    for (double s : scores) sum += s;
    const double mean = sum / n;
    double sq = 0.0;
    for (double s : scores) sq += (s - mean) * (s - mean);
    const double sigma = std::sqrt(sq / n);

    FilterResult r;
    if (sigma == 0.0) {
        r.score = sum;
        r.kept = scores.size();
        return r;
    }
    const double threshold = mean - 2.0 * sigma;
    for (double s : scores) {
        if (s > threshold) {
            r.score += s;
            ++r.kept;
        } else {
            ++r.dropped;
        }
    }
    return r;
}

/// Descending score; ties go to the better (smaller) retriever rank.
inline Ranking rank(std::span<const DocumentScore> doc_scores,
                    const std::map<std::string, std::uint32_t>& retriever_ranks) {
    Ranking r;
    r.entries.reserve(doc_scores.size());
    for (const auto& d : doc_scores) {
        const auto it = retriever_ranks.find(d.doc_id);
        if (it == retriever_ranks.end()) fail(ErrorCode::MissingRetrieverRank, d.doc_id);
        r.entries.push_back({d.doc_id, d.score, it->second});
    }
    std::stable_sort(r.entries.begin(), r.entries.end(), [](const RankedDoc& a, const RankedDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.retriever_rank < b.retriever_rank;
    });
    return r;
}

struct ScoredQuery {
    Ranking ranking;
    std::vector<DocumentScore> doc_scores;  // presentation order
    TokenScoreTable token_scores;           // the table the document scores were summed from
};

/// The full scoring pipeline over the two attention acquisitions.
/// attn_cal is ignored for modes that skip calibration.
inline ScoredQuery score_documents(const PromptLayout& layout, const PromptLayout& cal_layout,
                                   const AttentionSlice& attn_q, const AttentionSlice& attn_cal,
                                   ScoringMode mode,
                                   const std::map<std::string, std::uint32_t>& retriever_ranks) {
    const bool calibrated = mode == ScoringMode::full || mode == ScoringMode::last_token_only;
    const QueryRows rows =
        (mode == ScoringMode::full || mode == ScoringMode::no_calibration) ? QueryRows::all : QueryRows::last;

    ScoredQuery out;
    auto q_table = aggregate_query_attention(attn_q, layout, rows);
    if (calibrated) {
        const auto c_table = aggregate_query_attention(attn_cal, cal_layout, rows);
        out.token_scores = calibrate(q_table, c_table);
    } else {
        out.token_scores = std::move(q_table);
    }

    out.doc_scores.reserve(out.token_scores.docs.size());
    for (const auto& d : out.token_scores.docs) {
        DocumentScore ds;
        ds.doc_id = d.doc_id;
        if (mode == ScoringMode::neither) {
            if (d.scores.empty()) fail(ErrorCode::EmptySpan, d.doc_id);
            for (double s : d.scores) ds.score += s;
            ds.kept_token_count = d.scores.size();
        } else {
            const auto f = filter_and_sum(d.scores);
            ds.score = f.score;
            ds.kept_token_count = f.kept;
            ds.dropped_token_count = f.dropped;
        }
        out.doc_scores.push_back(std::move(ds));
    }
    out.ranking = rank(out.doc_scores, retriever_ranks);
    return out;
}

}  // namespace icr
