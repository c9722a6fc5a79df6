#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "icr/backend.hpp"
#include "icr/prompt_layout.hpp"
#include "icr/rng.hpp"
#include "icr/scoring.hpp"

namespace icr {

struct QueryInput {
    std::string qid;
    Query query;
    std::vector<Document> docs;  // retriever order
};

struct RerankOptions {
    OrderKind order = OrderKind::reversed;
    ScoringMode mode = ScoringMode::full;
    PromptOptions prompt;
    /// Root of all randomness; per-query shuffle seeds derive from it.
    std::uint64_t seed = 0;
};

struct QueryResult {
    std::string qid;
    ScoredQuery scored;
    PromptLayout layout;
    PromptLayout cal_layout;
    AttentionSlice attention_query;
    AttentionSlice attention_cal;
    std::size_t reused_prefix_tokens = 0;
};

/// Shuffle seed for one query: a function of the global seed and the query
/// id only, so results do not depend on scheduling.
inline std::uint64_t query_seed(std::uint64_t seed, std::string_view qid) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : qid) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return SplitMix64(seed ^ h).next();
}

inline QueryResult rerank_query(const AttentionBackend& backend, const QueryInput& input, const RerankOptions& opt) {
    const auto& profile = backend.profile();
    const OrderMode order{opt.order, opt.order == OrderKind::random ? query_seed(opt.seed, input.qid) : 0};

    QueryResult r;
    r.qid = input.qid;
    r.layout = build_prompt(input.docs, input.query, profile, order, opt.prompt);
    r.cal_layout = build_calibration_layout(r.layout, profile);

    std::vector<std::string> retriever_order;
    std::map<std::string, std::uint32_t> ranks;
    for (std::size_t i = 0; i < input.docs.size(); ++i) {
        retriever_order.push_back(input.docs[i].id);
        ranks.emplace(input.docs[i].id, static_cast<std::uint32_t>(i + 1));
    }

    auto pair = backend.acquire({input.qid, r.layout, r.cal_layout, retriever_order});
    if (pair.layout) r.layout = std::move(*pair.layout);
    if (pair.cal_layout) r.cal_layout = std::move(*pair.cal_layout);
    r.reused_prefix_tokens = pair.reused_prefix_tokens;
    r.scored = score_documents(r.layout, r.cal_layout, pair.query, pair.calibration, opt.mode, ranks);
    r.attention_query = std::move(pair.query);
    r.attention_cal = std::move(pair.calibration);
    return r;
}

/// Worker count: ICR_THREADS if set and positive, else the hardware count.
inline std::size_t worker_count() {
    std::size_t n = std::thread::hardware_concurrency();
    if (const char* env = std::getenv("ICR_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) n = static_cast<std::size_t>(v);
    }
    return n == 0 ? 1 : n;
}

/// Scores every query on a worker pool. Results come back in input order;
/// the first failure (in input order) is rethrown.
inline std::vector<QueryResult> rerank_all(const AttentionBackend& backend, const std::vector<QueryInput>& inputs,
                                           const RerankOptions& opt, std::size_t threads = worker_count()) {
    std::vector<QueryResult> results(inputs.size());
    std::vector<std::exception_ptr> errors(inputs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < inputs.size();) {
            try {
                results[i] = rerank_query(backend, inputs[i], opt);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    threads = std::max<std::size_t>(1, std::min(threads, inputs.size()));
    if (threads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

}  // namespace icr
