#include <gtest/gtest.h>

#include <algorithm>

#include "icr/icr.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace icr;

namespace {

oracle::Dense to_dense(const AttentionSlice& s) {
    oracle::Dense d;
    d.L = s.layers();
    d.H = s.heads();
    d.T = s.context_len();
    d.a.assign(d.L * d.H * d.T * d.T, 0.0);
    const auto rows = s.row_indices();
    for (std::uint32_t l = 0; l < s.layers(); ++l)
        for (std::uint32_t h = 0; h < s.heads(); ++h)
            for (std::size_t r = 0; r < rows.size(); ++r)
                for (std::size_t j = 0; j < d.T; ++j) d.at(l, h, rows[r], j) = s.row(l, h, r)[j];
    return d;
}

TokenScoreTable table(std::vector<std::pair<std::string, std::vector<double>>> docs) {
    TokenScoreTable t;
    std::size_t pos = 0;
    for (auto& [id, scores] : docs) {
        t.docs.push_back({id, {pos, pos + scores.size()}, scores});
        pos += scores.size();
    }
    return t;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::FormatError;
}

std::size_t position_of(const Ranking& r, const std::string& id) {
    for (std::size_t i = 0; i < r.entries.size(); ++i)
        if (r.entries[i].doc_id == id) return i;
    return r.entries.size();
}

}  // namespace

TEST(Aggregate, UniformRowOverFourTokens) {
    auto s = AttentionSlice::zeros(1, 1, 5, {4});
    for (int j = 0; j < 4; ++j) s.row(0, 0, 0)[j] = 0.25f;
    const std::vector<std::uint32_t> rows = {4};
    const auto pos = position_scores(s, rows);
    for (int j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(pos[j], 0.25);
    EXPECT_EQ(pos[4], 0.0);
}

TEST(Aggregate, CausalUniformElevenFifteenths) {
    // Rows at 1-indexed positions 5 and 6 attend uniformly to their prefix.
    auto s = AttentionSlice::zeros(2, 2, 6, {4, 5});
    for (std::uint32_t l = 0; l < 2; ++l)
        for (std::uint32_t h = 0; h < 2; ++h)
            for (std::size_t r = 0; r < 2; ++r) {
                const std::size_t k = r + 5;
                for (std::size_t j = 0; j < k; ++j) s.row(l, h, r)[j] = 1.0f / static_cast<float>(k);
            }
    const auto dense = to_dense(s);
    const std::vector<std::size_t> q = {4, 5};
    const std::vector<std::uint32_t> rows = {4, 5};
    const auto pos = position_scores(s, rows);
    for (std::size_t j = 0; j < 5; ++j) {
        const double ref = oracle::token_score(dense, q, j);
        EXPECT_NEAR(ref, 11.0 / 15.0, 1e-7);
        EXPECT_NEAR(pos[j], ref, 1e-12);
    }
}

TEST(Aggregate, OneHotRowsGiveLTimesH) {
    auto s = AttentionSlice::zeros(3, 2, 8, {5, 6, 7});
    for (std::uint32_t l = 0; l < 3; ++l)
        for (std::uint32_t h = 0; h < 2; ++h)
            for (std::size_t r = 0; r < 3; ++r) s.row(l, h, r)[2] = 1.0f;
    const std::vector<std::uint32_t> rows = {5, 6, 7};
    const auto pos = position_scores(s, rows);
    for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(pos[j], j == 2 ? 6.0 : 0.0);
}

TEST(Aggregate, MatchesTripleLoopOnRandomLayouts) {
    SplitMix64 rng(101);
    for (int t = 0; t < 30; ++t) {
        const auto L = static_cast<std::uint32_t>(1 + rng.below(4));
        const auto H = static_cast<std::uint32_t>(1 + rng.below(4));
        const auto profile = fixture::whitespace_profile(L, H);
        const auto docs = fixture::random_docs(rng, 1 + rng.below(5));
        const auto layout = build_prompt(docs, {fixture::random_words(rng, 1 + rng.below(4)), QueryStyle::QA}, profile);
        const auto slice = fixture::random_slice(rng, L, H, static_cast<std::uint32_t>(layout.total_len()),
                                                 layout.query_rows());
        const auto tableq = aggregate_query_attention(slice, layout);
        const auto dense = to_dense(slice);
        const auto rows = layout.query_rows();
        const std::vector<std::size_t> q(rows.begin(), rows.end());
        for (const auto& d : tableq.docs)
            for (std::size_t j = d.span.begin; j < d.span.end; ++j)
                EXPECT_NEAR(d.scores[j - d.span.begin], oracle::token_score(dense, q, j), 1e-9);
    }
}

TEST(Aggregate, RowCoverageAndShapeErrors) {
    const auto profile = fixture::whitespace_profile();
    const auto layout = build_prompt(fixture::equal_docs(2, 3), {"a b", QueryStyle::QA}, profile);
    const auto T = static_cast<std::uint32_t>(layout.total_len());
    auto rows = layout.query_rows();
    EXPECT_EQ(code_of([&] { aggregate_query_attention(AttentionSlice::zeros(1, 1, T + 1, rows), layout); }),
              ErrorCode::ShapeMismatch);
    EXPECT_EQ(code_of([&] { aggregate_query_attention(AttentionSlice::zeros(1, 1, T, {rows[0]}), layout); }),
              ErrorCode::RowCoverageMismatch);
}

TEST(Calibrate, Examples) {
    const auto q = table({{"a", {0.5, 0.2}}});
    const auto c = table({{"a", {0.1, 0.3}}});
    const auto out = calibrate(q, c);
    EXPECT_NEAR(out.docs[0].scores[0], 0.4, 1e-15);
    EXPECT_NEAR(out.docs[0].scores[1], -0.1, 1e-15);
    EXPECT_EQ(out.pass, ScorePass::calibrated);

    const auto same = calibrate(q, q);
    for (double v : same.docs[0].scores) EXPECT_EQ(v, 0.0);

    const auto zero = calibrate(q, table({{"a", {0.0, 0.0}}}));
    EXPECT_EQ(zero.docs[0].scores, q.docs[0].scores);
}

TEST(Calibrate, SpanMismatch) {
    const auto q = table({{"a", {0.5, 0.2}}});
    EXPECT_EQ(code_of([&] { calibrate(q, table({{"a", {0.5}}})); }), ErrorCode::SpanMismatch);
    EXPECT_EQ(code_of([&] { calibrate(q, table({{"b", {0.5, 0.2}}})); }), ErrorCode::SpanMismatch);
}

TEST(Calibrate, SharedOffsetCancels) {
    SplitMix64 rng(7);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> a(5), b(5), a2(5), b2(5);
        for (int i = 0; i < 5; ++i) {
            a[i] = rng.uniform(0, 1);
            b[i] = rng.uniform(0, 1);
            const double c = rng.uniform(-3, 3);
            a2[i] = a[i] + c;
            b2[i] = b[i] + c;
        }
        const auto x = calibrate(table({{"d", a}}), table({{"d", b}}));
        const auto y = calibrate(table({{"d", a2}}), table({{"d", b2}}));
        for (int i = 0; i < 5; ++i) EXPECT_NEAR(x.docs[0].scores[i], y.docs[0].scores[i], 1e-12);
    }
}

TEST(Filter, BoundaryOutlierIsDropped) {
    const std::vector<double> v = {1, 1, 1, 1, -10};
    const auto f = filter_and_sum(v);
    EXPECT_EQ(f.score, 4.0);
    EXPECT_EQ(f.kept, 4u);
    EXPECT_EQ(f.dropped, 1u);
}

TEST(Filter, ConstantScoresAreAllKept) {
    const std::vector<double> v = {0.3, 0.3, 0.3, 0.3};
    const auto f = filter_and_sum(v);
    EXPECT_NEAR(f.score, 1.2, 1e-15);
    EXPECT_EQ(f.kept, 4u);
    EXPECT_EQ(f.dropped, 0u);
}

TEST(Filter, NoOutliers) {
    const std::vector<double> v = {2, 3, -1};
    const auto f = filter_and_sum(v);
    EXPECT_EQ(f.score, 4.0);
    EXPECT_EQ(f.kept, 3u);
}

TEST(Filter, SingleTokenAndEmpty) {
    const std::vector<double> one = {-5.5};
    EXPECT_EQ(filter_and_sum(one).score, -5.5);
    EXPECT_EQ(filter_and_sum(one).kept, 1u);
    EXPECT_EQ(code_of([] { filter_and_sum(std::vector<double>{}); }), ErrorCode::EmptySpan);
}

TEST(Filter, MatchesOracle) {
    SplitMix64 rng(55);
    for (int t = 0; t < 300; ++t) {
        std::vector<double> v(1 + rng.below(40));
        for (auto& x : v) x = rng.uniform(-1, 1);
        if (rng.below(4) == 0) v[rng.below(v.size())] = -20.0 * rng.uniform();
        const auto got = filter_and_sum(v);
        const auto ref = oracle::filter(v);
        EXPECT_NEAR(got.score, ref.sum, 1e-9);
        EXPECT_EQ(got.kept, ref.kept);
        EXPECT_EQ(got.kept + got.dropped, v.size());
    }
}

TEST(Rank, Examples) {
    auto order = [](std::vector<DocumentScore> s, std::map<std::string, std::uint32_t> r) {
        std::vector<std::string> ids;
        for (const auto& e : rank(s, r).entries) ids.push_back(e.doc_id);
        return ids;
    };
    EXPECT_EQ(order({{"A", 2.0}, {"B", 1.0}}, {{"A", 1}, {"B", 2}}), (std::vector<std::string>{"A", "B"}));
    EXPECT_EQ(order({{"A", 1.0}, {"B", 1.0}}, {{"A", 2}, {"B", 1}}), (std::vector<std::string>{"B", "A"}));
    EXPECT_EQ(order({{"A", 0.1}, {"B", 0.3}, {"C", 0.2}}, {{"A", 1}, {"B", 2}, {"C", 3}}),
              (std::vector<std::string>{"B", "C", "A"}));
    EXPECT_EQ(code_of([&] { rank(std::vector<DocumentScore>{{"Z", 1.0}}, {{"A", 1}}); }),
              ErrorCode::MissingRetrieverRank);
}

TEST(ScoreDocuments, NeitherFollowsLastRow) {
    SplitMix64 rng(9);
    const auto profile = fixture::whitespace_profile(2, 2);
    const auto docs = fixture::equal_docs(5, 4);
    const auto layout = build_prompt(docs, {"x y z", QueryStyle::QA}, profile);
    const auto cal = build_calibration_layout(layout, profile);
    auto q = fixture::random_slice(rng, 2, 2, static_cast<std::uint32_t>(layout.total_len()), layout.query_rows());
    const auto target = layout.find("doc2");
    const std::size_t last = q.num_rows() - 1;
    for (std::uint32_t l = 0; l < 2; ++l)
        for (std::uint32_t h = 0; h < 2; ++h) {
            auto row = q.row(l, h, last);
            std::fill(row.begin(), row.end(), 0.0f);
            row[target->tokens.begin + 1] = 1.0f;
        }
    const auto c = fixture::random_slice(rng, 2, 2, static_cast<std::uint32_t>(cal.total_len()), cal.query_rows());
    const auto out = score_documents(layout, cal, q, c, ScoringMode::neither, fixture::retriever_ranks(docs));
    EXPECT_EQ(out.ranking.entries.front().doc_id, "doc2");
    EXPECT_EQ(out.ranking.entries.front().score, 4.0);
}

TEST(ScoreDocuments, IdenticalDocAttentionCancels) {
    const auto profile = fixture::whitespace_profile(1, 2);
    const auto docs = fixture::equal_docs(4, 3);
    const auto layout = build_prompt(docs, {"one two three", QueryStyle::IE}, profile);
    const auto cal = build_calibration_layout(layout, profile);
    // Every row gives the same weights to document tokens and the rest to
    // its own position.
    auto fill = [](const PromptLayout& lay) {
        auto s = AttentionSlice::zeros(1, 2, static_cast<std::uint32_t>(lay.total_len()), lay.query_rows());
        for (std::uint32_t h = 0; h < 2; ++h)
            for (std::size_t r = 0; r < s.num_rows(); ++r) {
                auto row = s.row(0, h, r);
                float used = 0.0f;
                for (const auto& d : lay.doc_spans)
                    for (std::size_t j = d.tokens.begin; j < d.tokens.end; ++j) {
                        row[j] = 0.01f * static_cast<float>(j % 7 + 1);
                        used += row[j];
                    }
                row[s.row_indices()[r]] = 1.0f - used;
            }
        return s;
    };
    const auto out = score_documents(layout, cal, fill(layout), fill(cal), ScoringMode::full,
                                     fixture::retriever_ranks(docs));
    for (const auto& d : out.doc_scores) EXPECT_EQ(d.score, 0.0);
    for (std::size_t i = 0; i < docs.size(); ++i) EXPECT_EQ(out.ranking.entries[i].doc_id, docs[i].id);
}

TEST(ScoreDocuments, PlantedBiasBelowBoost) {
    const auto profile = fixture::whitespace_profile(2, 2);
    const auto docs = fixture::equal_docs(6, 5);
    const auto layout = build_prompt(docs, {"find the thing", QueryStyle::IE}, profile);
    const auto cal = build_calibration_layout(layout, profile);
    // doc3 is the target; the first presented doc (doc6) carries the bias.
    const PlantSpec plant{"doc3", 0.5, {0.2}, 1.0};
    const auto q = synth_attention(layout, plant, 2, 2);
    const auto c = synth_attention(cal, plant, 2, 2);
    const auto ranks = fixture::retriever_ranks(docs);
    for (auto mode : {ScoringMode::full, ScoringMode::no_calibration})
        EXPECT_EQ(score_documents(layout, cal, q, c, mode, ranks).ranking.entries.front().doc_id, "doc3");
}

TEST(ScoreDocuments, PlantedBiasAboveBoost) {
    const auto profile = fixture::whitespace_profile(2, 2);
    const auto docs = fixture::equal_docs(6, 5);
    const auto layout = build_prompt(docs, {"find the thing", QueryStyle::IE}, profile);
    const auto cal = build_calibration_layout(layout, profile);
    const PlantSpec plant{"doc3", 0.1, {0.5}, 1.0};
    const auto q = synth_attention(layout, plant, 2, 2);
    const auto c = synth_attention(cal, plant, 2, 2);
    const auto ranks = fixture::retriever_ranks(docs);
    EXPECT_EQ(score_documents(layout, cal, q, c, ScoringMode::no_calibration, ranks).ranking.entries.front().doc_id,
              "doc6");
    EXPECT_EQ(score_documents(layout, cal, q, c, ScoringMode::full, ranks).ranking.entries.front().doc_id, "doc3");
}

TEST(ScoreDocuments, RelabelingPermutesScores) {
    SplitMix64 rng(31);
    for (int t = 0; t < 20; ++t) {
        const auto profile = fixture::whitespace_profile(1, 2);
        const auto docs = fixture::random_docs(rng, 2 + rng.below(6));
        const auto layout = build_prompt(docs, {"q r", QueryStyle::QA}, profile);
        const auto cal = build_calibration_layout(layout, profile);
        const auto q = fixture::random_slice(rng, 1, 2, static_cast<std::uint32_t>(layout.total_len()), layout.query_rows());
        const auto c = fixture::random_slice(rng, 1, 2, static_cast<std::uint32_t>(cal.total_len()), cal.query_rows());

        std::vector<std::string> ids;
        for (const auto& d : docs) ids.push_back(d.id);
        auto perm = ids;
        seeded_shuffle(std::span<std::string>(perm), rng.next());
        std::map<std::string, std::string> rename;
        for (std::size_t i = 0; i < ids.size(); ++i) rename[ids[i]] = "x" + perm[i];

        auto relabel = [&](PromptLayout l) {
            for (auto& d : l.doc_spans) d.doc_id = rename[d.doc_id];
            return l;
        };
        const auto ranks = fixture::retriever_ranks(docs);
        std::map<std::string, std::uint32_t> ranks2;
        for (const auto& [id, r] : ranks) ranks2[rename[id]] = r;

        const auto a = score_documents(layout, cal, q, c, ScoringMode::full, ranks);
        const auto b = score_documents(relabel(layout), relabel(cal), q, c, ScoringMode::full, ranks2);
        for (std::size_t i = 0; i < a.doc_scores.size(); ++i) {
            EXPECT_EQ(rename[a.doc_scores[i].doc_id], b.doc_scores[i].doc_id);
            EXPECT_EQ(a.doc_scores[i].score, b.doc_scores[i].score);
        }
        for (std::size_t i = 0; i < a.ranking.entries.size(); ++i)
            EXPECT_EQ(rename[a.ranking.entries[i].doc_id], b.ranking.entries[i].doc_id);
    }
}

TEST(ScoreDocuments, RaisingAKeptTokenNeverLowersRank) {
    SplitMix64 rng(77);
    int checked = 0;
    for (int t = 0; t < 500; ++t) {
        const std::size_t n = 2 + rng.below(6);
        std::vector<std::vector<double>> tokens(n);
        for (auto& v : tokens) {
            v.resize(1 + rng.below(8));
            for (auto& x : v) x = rng.uniform(-1, 1);
        }
        auto scores_of = [&](const std::vector<std::vector<double>>& tk) {
            std::vector<DocumentScore> s;
            for (std::size_t i = 0; i < n; ++i) {
                const auto f = filter_and_sum(tk[i]);
                s.push_back({"d" + std::to_string(i), f.score, f.kept, f.dropped});
            }
            return s;
        };
        std::map<std::string, std::uint32_t> ranks;
        for (std::size_t i = 0; i < n; ++i) ranks["d" + std::to_string(i)] = static_cast<std::uint32_t>(i + 1);

        const std::size_t d = rng.below(n);
        const std::size_t j = rng.below(tokens[d].size());
        const auto before = filter_and_sum(tokens[d]);
        auto bumped = tokens;
        bumped[d][j] += rng.uniform(0, 0.5);
        const auto after = filter_and_sum(bumped[d]);
        // The property concerns a token that stays kept while the kept set is unchanged.
        const bool kept_before = tokens[d].size() == 1 || before.dropped == 0;
        if (!kept_before || after.kept != before.kept) continue;
        ++checked;
        const auto id = "d" + std::to_string(d);
        EXPECT_LE(position_of(rank(scores_of(bumped), ranks), id), position_of(rank(scores_of(tokens), ranks), id));
    }
    EXPECT_GT(checked, 200);
}
