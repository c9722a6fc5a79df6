#pragma once

// Wall-clock scaling of the re-ranking pipeline over the number of
// candidates K, on synthetic documents.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "icr/backend.hpp"
#include "icr/error.hpp"
#include "icr/pipeline.hpp"
#include "icr/rng.hpp"
#include "json.hpp"

namespace icr {

struct BenchParams {
    std::vector<std::size_t> ks{20, 40, 60, 80, 100};
    std::size_t trials = 3;
    std::size_t words_per_doc = 16;
    std::uint64_t seed = 0;
    ScoringMode mode = ScoringMode::full;
};

struct BenchRow {
    std::size_t k = 0;
    std::size_t trial = 0;
    double ms = 0.0;
    std::size_t context_tokens = 0;      // query-pass prompt length
    std::size_t cal_context_tokens = 0;  // calibration-pass prompt length
    std::size_t reused_prefix_tokens = 0;
    std::size_t acquisitions = 0;
};

struct BenchSummary {
    std::size_t k = 0;
    double median_ms = 0.0;
    std::size_t context_tokens = 0;
    std::size_t reused_prefix_tokens = 0;
    std::size_t acquisitions_per_query = 0;
};

struct BenchReport {
    std::string backend;
    std::vector<BenchRow> rows;          // ascending K, then trial
    std::vector<BenchSummary> summary;   // ascending K
};

/// A query plus K documents of random filler words.
inline QueryInput synthetic_query(std::size_t k, std::size_t words_per_doc, std::uint64_t seed) {
    SplitMix64 rng(seed);
    auto word = [&rng] { return "w" + std::to_string(rng.below(2000)); };
    QueryInput in;
    in.qid = "bench-" + std::to_string(k);
    in.query.style = QueryStyle::QA;
    in.query.text = word() + " " + word() + " " + word() + "?";
    for (std::size_t d = 0; d < k; ++d) {
        Document doc;
        doc.id = "doc" + std::to_string(d);
        for (std::size_t w = 0; w < words_per_doc; ++w) doc.text += (w ? " " : "") + word();
        in.docs.push_back(std::move(doc));
    }
    return in;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Times rerank_query per K. Fails if any query needs other than exactly two
/// attention acquisitions.
inline BenchReport bench_pipeline(const AttentionBackend* backend, const BenchParams& params) {
    if (!backend) fail(ErrorCode::BackendUnavailable, "no backend");
    BenchReport report;
    report.backend = backend->name();
    auto ks = params.ks;
    std::sort(ks.begin(), ks.end());
    RerankOptions opt;
    opt.mode = params.mode;
    opt.seed = params.seed;

    for (auto k : ks) {
        const auto input = synthetic_query(k, params.words_per_doc, params.seed ^ k);
        std::vector<double> times;
        BenchSummary s;
        s.k = k;
        for (std::size_t t = 0; t < params.trials; ++t) {
            const auto before = backend->acquisitions();
            const auto start = std::chrono::steady_clock::now();
            const auto result = rerank_query(*backend, input, opt);
            const auto stop = std::chrono::steady_clock::now();
            BenchRow row;
            row.k = k;
            row.trial = t;
            row.ms = std::chrono::duration<double, std::milli>(stop - start).count();
            row.context_tokens = result.layout.total_len();
            row.cal_context_tokens = result.cal_layout.total_len();
            row.reused_prefix_tokens = result.reused_prefix_tokens;
            row.acquisitions = backend->acquisitions() - before;
            if (row.acquisitions != 2)
                fail(ErrorCode::AcquisitionCountMismatch,
                     "expected 2 attention acquisitions per query, saw " + std::to_string(row.acquisitions));
            times.push_back(row.ms);
            s.context_tokens = row.context_tokens;
            s.reused_prefix_tokens = row.reused_prefix_tokens;
            s.acquisitions_per_query = row.acquisitions;
            report.rows.push_back(row);
        }
        s.median_ms = median(times);
        report.summary.push_back(s);
    }
    return report;
}

/// CSV with header `method,K,trial,ms`.
inline void write_bench_csv(std::ostream& out, const BenchReport& report) {
    out << "method,K,trial,ms\n";
    for (const auto& r : report.rows) out << "icr," << r.k << ',' << r.trial << ',' << r.ms << '\n';
}

inline nlohmann::json bench_json(const BenchReport& report) {
    nlohmann::json j;
    j["method"] = "icr";
    j["backend"] = report.backend;
    auto& rows = j["summary"] = nlohmann::json::array();
    for (const auto& s : report.summary)
        rows.push_back({{"K", s.k},
                        {"median_ms", s.median_ms},
                        {"context_tokens", s.context_tokens},
                        {"reused_prefix_tokens", s.reused_prefix_tokens},
                        {"acquisitions_per_query", s.acquisitions_per_query}});
    return j;
}

}  // namespace icr
