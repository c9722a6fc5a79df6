#pragma once

// Ranking metrics: nDCG@k (linear gain, log2(i+1) discount, the trec_eval
// ndcg_cut convention), Recall@k and All-Recall@k, plus micro/macro
// aggregation across tasks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "icr/error.hpp"

namespace icr {

/// query id -> doc id -> grade (>= 0; > 0 means relevant)
using Qrels = std::map<std::string, std::map<std::string, int>>;
using QueryJudgments = std::map<std::string, int>;

struct RunEntry {
    std::string doc_id;
    double score = 0.0;
};

/// query id -> documents best-first
struct RunFile {
    std::map<std::string, std::vector<RunEntry>> queries;
};

namespace detail {

inline void check_cutoff(std::size_t k) {
    if (k == 0) fail(ErrorCode::InvalidCutoff, "k must be >= 1");
}

inline int grade_of(const QueryJudgments& judged, const std::string& doc) {
    const auto it = judged.find(doc);
    return it == judged.end() ? 0 : it->second;
}

inline std::size_t count_relevant(const QueryJudgments& judged) {
    return static_cast<std::size_t>(
        std::count_if(judged.begin(), judged.end(), [](const auto& p) { return p.second > 0; }));
}

inline std::size_t relevant_in_top(std::span<const RunEntry> ranked, const QueryJudgments& judged, std::size_t k) {
    std::size_t hits = 0;
    const std::size_t depth = std::min(k, ranked.size());
    for (std::size_t i = 0; i < depth; ++i)
        if (grade_of(judged, ranked[i].doc_id) > 0) ++hits;
    return hits;
}

}  // namespace detail

inline double ndcg_at_k(std::span<const RunEntry> ranked, const QueryJudgments& judged, std::size_t k = 10) {
    detail::check_cutoff(k);
    const std::size_t depth = std::min(k, ranked.size());
    double dcg = 0.0;
    for (std::size_t i = 0; i < depth; ++i) {
        const int g = detail::grade_of(judged, ranked[i].doc_id);
        if (g > 0) dcg += static_cast<double>(g) / std::log2(static_cast<double>(i) + 2.0);
    }
    std::vector<int> ideal;
    for (const auto& [doc, g] : judged)
        if (g > 0) ideal.push_back(g);
    if (ideal.empty()) return 0.0;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i)
        idcg += static_cast<double>(ideal[i]) / std::log2(static_cast<double>(i) + 2.0);
    return dcg / idcg;
}

/// nullopt when the query has no relevant documents.
inline std::optional<double> recall_at_k(std::span<const RunEntry> ranked, const QueryJudgments& judged,
                                         std::size_t k) {
    detail::check_cutoff(k);
    const std::size_t relevant = detail::count_relevant(judged);
    if (relevant == 0) return std::nullopt;
    return static_cast<double>(detail::relevant_in_top(ranked, judged, k)) / static_cast<double>(relevant);
}

/// 1 iff every relevant document is in the top k; nullopt when there are none.
inline std::optional<int> all_recall_at_k(std::span<const RunEntry> ranked, const QueryJudgments& judged,
                                          std::size_t k) {
    detail::check_cutoff(k);
    const std::size_t relevant = detail::count_relevant(judged);
    if (relevant == 0) return std::nullopt;
    return detail::relevant_in_top(ranked, judged, k) == relevant ? 1 : 0;
}

enum class MetricKind { ndcg, recall, all_recall };

struct MetricSpec {
    MetricKind kind;
    std::size_t k;

    std::string name() const {
        switch (kind) {
            case MetricKind::ndcg: return "ndcg@" + std::to_string(k);
            case MetricKind::recall: return "recall@" + std::to_string(k);
            case MetricKind::all_recall: return "all_recall@" + std::to_string(k);
        }
        return "?";
    }
};

/// nullopt when the metric is undefined for this query.
inline std::optional<double> compute_metric(const MetricSpec& m, std::span<const RunEntry> ranked,
                                            const QueryJudgments& judged) {
    switch (m.kind) {
        case MetricKind::ndcg: return ndcg_at_k(ranked, judged, m.k);
        case MetricKind::recall: return recall_at_k(ranked, judged, m.k);
        case MetricKind::all_recall: {
            const auto v = all_recall_at_k(ranked, judged, m.k);
            if (!v) return std::nullopt;
            return static_cast<double>(*v);
        }
    }
    return std::nullopt;
}

/// Per-query values for one metric over a whole run. Queries present in the
/// qrels but absent from the run are not scored; run queries absent from
/// the qrels are an error.
inline std::map<std::string, double> evaluate_metric(const RunFile& run, const Qrels& qrels, const MetricSpec& m) {
    std::map<std::string, double> out;
    for (const auto& [qid, ranked] : run.queries) {
        const auto it = qrels.find(qid);
        if (it == qrels.end()) fail(ErrorCode::UnknownQuery, qid);
        if (const auto v = compute_metric(m, ranked, it->second)) out.emplace(qid, *v);
    }
    return out;
}

struct EvalTask {
    std::string name;
    RunFile run;
    Qrels qrels;
};

struct MetricReport {
    std::vector<std::string> metrics;
    /// task -> metric -> qid -> value
    std::map<std::string, std::map<std::string, std::map<std::string, double>>> per_query;
    /// task -> metric -> mean over that task's defined queries
    std::map<std::string, std::map<std::string, double>> task_means;
    /// mean over every defined query of every task
    std::map<std::string, double> micro;
    /// unweighted mean of task means
    std::map<std::string, double> macro;
};

inline std::vector<MetricSpec> standard_metrics(std::span<const std::size_t> ks) {
    std::vector<MetricSpec> out;
    for (auto kind : {MetricKind::ndcg, MetricKind::recall, MetricKind::all_recall})
        for (auto k : ks) out.push_back({kind, k});
    return out;
}

inline MetricReport evaluate(std::span<const EvalTask> tasks, std::span<const MetricSpec> metrics) {
    if (tasks.empty()) fail(ErrorCode::EmptyInput, "no tasks to evaluate");
    MetricReport report;
    for (const auto& m : metrics) report.metrics.push_back(m.name());

    for (const auto& task : tasks) {
        if (task.run.queries.empty()) fail(ErrorCode::EmptyInput, "task '" + task.name + "' has an empty run");
        for (const auto& m : metrics) {
            auto values = evaluate_metric(task.run, task.qrels, m);
            if (!values.empty()) {
                double sum = 0.0;
                for (const auto& [q, v] : values) sum += v;
                report.task_means[task.name][m.name()] = sum / static_cast<double>(values.size());
            }
            report.per_query[task.name][m.name()] = std::move(values);
        }
    }

    for (const auto& m : metrics) {
        const auto name = m.name();
        double pooled = 0.0, task_sum = 0.0;
        std::size_t n_queries = 0, n_tasks = 0;
        for (const auto& task : tasks) {
            const auto& values = report.per_query[task.name][name];
            for (const auto& [q, v] : values) pooled += v;
            n_queries += values.size();
            if (const auto it = report.task_means[task.name].find(name); it != report.task_means[task.name].end()) {
                task_sum += it->second;
                ++n_tasks;
            }
        }
        if (n_queries > 0) report.micro[name] = pooled / static_cast<double>(n_queries);
        if (n_tasks > 0) report.macro[name] = task_sum / static_cast<double>(n_tasks);
    }
    return report;
}

}  // namespace icr
