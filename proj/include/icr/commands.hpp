#pragma once

// Batch commands behind the `icr` executable. They take plain config
// structs so tests can drive them without going through argv.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "icr/backend.hpp"
#include "icr/bench.hpp"
#include "icr/corpus_io.hpp"
#include "icr/icra.hpp"
#include "icr/layout_json.hpp"
#include "icr/metrics.hpp"
#include "icr/pipeline.hpp"
#include "icr/trec_io.hpp"
#include "icr/viz.hpp"
#include "json.hpp"

namespace icr {

enum class BackendKind { toy, planted, dump };

struct RunConfig {
    std::filesystem::path corpus;
    std::filesystem::path queries;
    std::filesystem::path candidates;

    BackendKind backend = BackendKind::toy;
    ToyConfig toy;
    PlantTemplate plant;
    std::uint32_t plant_layers = 2;
    std::uint32_t plant_heads = 2;
    std::filesystem::path dump_dir;

    std::optional<std::string> prefix_marker;
    std::optional<std::string> suffix_marker;

    OrderKind order = OrderKind::reversed;
    std::optional<QueryStyle> style_override;
    ScoringMode mode = ScoringMode::full;
    PromptOptions prompt;
    /// Re-rank only the top k candidates; 0 = all.
    std::size_t k = 0;
    std::uint64_t seed = 0;

    std::filesystem::path out;
    /// Defaults to `<out>.tokens.json`.
    std::filesystem::path token_scores_out;
    /// When set, every acquired attention pair is written here as ICRA.
    std::filesystem::path write_dumps;
    std::string tag = "icr";
    std::size_t threads = worker_count();
};

namespace detail {

// Profiles are immutable once built; markers are overridden by copying.
class ProfileOverride final : public AttentionBackend {
public:
    ProfileOverride(std::unique_ptr<AttentionBackend> inner, ModelProfile profile)
        : inner_(std::move(inner)), profile_(std::move(profile)) {}
    std::string name() const override { return inner_->name(); }
    const ModelProfile& profile() const override { return profile_; }
    AttentionPair acquire(const QueryJob& job) const override {
        return inner_->acquire(job);
    }
    std::size_t acquisitions() const noexcept override { return inner_->acquisitions(); }

private:
    std::unique_ptr<AttentionBackend> inner_;
    ModelProfile profile_;
};

}  // namespace detail

inline std::unique_ptr<AttentionBackend> make_backend(const RunConfig& cfg) {
    std::unique_ptr<AttentionBackend> b;
    switch (cfg.backend) {
        case BackendKind::toy: {
            ToyConfig tc = cfg.toy;
            tc.seed = cfg.seed;
            b = std::make_unique<ToyBackend>(tc);
            break;
        }
        case BackendKind::planted:
            b = std::make_unique<PlantedBackend>(cfg.plant_layers, cfg.plant_heads, cfg.plant);
            break;
        case BackendKind::dump:
            b = std::make_unique<DumpBackend>(cfg.dump_dir);
            break;
    }
    if (cfg.prefix_marker || cfg.suffix_marker) {
        ModelProfile p = b->profile();
        if (cfg.prefix_marker) p.prefix_marker = *cfg.prefix_marker;
        if (cfg.suffix_marker) p.suffix_marker = *cfg.suffix_marker;
        b = std::make_unique<detail::ProfileOverride>(std::move(b), std::move(p));
    }
    return b;
}

/// Joins queries, candidate lists and the corpus, in query-file order.
inline std::vector<QueryInput> load_inputs(const RunConfig& cfg) {
    const auto corpus = load_corpus(cfg.corpus);
    const auto queries = load_queries(cfg.queries);
    std::map<std::string, std::vector<std::string>> candidates;
    for (auto& c : load_candidates(cfg.candidates)) candidates[c.qid] = std::move(c.doc_ids);

    std::vector<QueryInput> inputs;
    for (const auto& q : queries) {
        const auto it = candidates.find(q.id);
        if (it == candidates.end()) fail(ErrorCode::FormatError, "no candidate list for query " + q.id);
        QueryInput in;
        in.qid = q.id;
        in.query = q.query;
        if (cfg.style_override) in.query.style = *cfg.style_override;
        const std::size_t depth = cfg.k == 0 ? it->second.size() : std::min(cfg.k, it->second.size());
        for (std::size_t i = 0; i < depth; ++i) {
            const auto d = corpus.find(it->second[i]);
            if (d == corpus.end())
                fail(ErrorCode::FormatError, "query " + q.id + ": document '" + it->second[i] + "' not in corpus");
            in.docs.push_back(d->second);
        }
        inputs.push_back(std::move(in));
    }
    if (inputs.empty()) fail(ErrorCode::EmptyInput, "no queries in " + cfg.queries.string());
    return inputs;
}

struct RerankSummary {
    std::size_t queries = 0;
    std::size_t acquisitions = 0;
    std::filesystem::path run_path;
    std::filesystem::path token_scores_path;
};

inline RerankSummary cmd_rerank(const RunConfig& cfg) {
    const auto backend = make_backend(cfg);
    const auto inputs = load_inputs(cfg);
    RerankOptions opt;
    opt.order = cfg.order;
    opt.mode = cfg.mode;
    opt.prompt = cfg.prompt;
    opt.seed = cfg.seed;

    const auto results = rerank_all(*backend, inputs, opt, cfg.threads);

    std::ostringstream run;
    nlohmann::json tokens = {{"mode", to_string(cfg.mode)}, {"queries", nlohmann::json::array()}};
    for (const auto& r : results) {
        write_run(run, r.qid, r.scored.ranking, cfg.tag);
        tokens["queries"].push_back(token_scores_json(r));
    }
    {
        std::ofstream f(cfg.out, std::ios::binary | std::ios::trunc);
        if (!f) fail(ErrorCode::IoFailure, "cannot create " + cfg.out.string());
        f << run.str();
        if (!f) fail(ErrorCode::IoFailure, "write error on " + cfg.out.string());
    }
    RerankSummary s;
    s.queries = results.size();
    s.acquisitions = backend->acquisitions();
    s.run_path = cfg.out;
    s.token_scores_path = cfg.token_scores_out.empty() ? std::filesystem::path(cfg.out.string() + ".tokens.json")
                                                       : cfg.token_scores_out;
    write_json_file(s.token_scores_path, tokens);

    if (!cfg.write_dumps.empty()) {
        std::filesystem::create_directories(cfg.write_dumps);
        const DumpMeta meta{backend->profile().name};
        for (const auto& r : results) {
            write_dump_file(query_dump_path(cfg.write_dumps, r.qid), r.attention_query, meta);
            write_dump_file(calibration_dump_path(cfg.write_dumps, r.qid), r.attention_cal, meta);
        }
    }
    return s;
}

/// Writes `{qid}.q.layout.json` and `{qid}.cal.layout.json` per query.
inline std::size_t cmd_layout_export(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    const auto backend = make_backend(cfg);
    const auto& profile = backend->profile();
    const auto inputs = load_inputs(cfg);
    std::filesystem::create_directories(out_dir);
    for (const auto& in : inputs) {
        const OrderMode order{cfg.order, cfg.order == OrderKind::random ? query_seed(cfg.seed, in.qid) : 0};
        const auto layout = build_prompt(in.docs, in.query, profile, order, cfg.prompt);
        const auto cal = build_calibration_layout(layout, profile);
        const auto tok = profile.tokenizer->name();
        write_json_file(layout_json_path(out_dir, in.qid, PassKind::query), layout_to_json(layout, in.qid, tok));
        write_json_file(layout_json_path(out_dir, in.qid, PassKind::calibration), layout_to_json(cal, in.qid, tok));
    }
    return inputs.size();
}

struct EvalTaskPaths {
    std::string name;
    std::filesystem::path run;
    std::filesystem::path qrels;
};

inline nlohmann::json report_json(const MetricReport& r) {
    nlohmann::json j;
    j["metrics"] = r.metrics;
    j["per_query"] = r.per_query;
    j["task_means"] = r.task_means;
    j["micro"] = r.micro;
    j["macro"] = r.macro;
    return j;
}

inline void print_report(std::ostream& out, const MetricReport& r) {
    std::vector<std::string> tasks;
    for (const auto& [t, m] : r.per_query) tasks.push_back(t);
    out << std::left << std::setw(16) << "metric";
    for (const auto& t : tasks) out << std::setw(14) << t;
    out << std::setw(12) << "micro" << "macro\n";
    out << std::fixed << std::setprecision(4);
    auto cell = [&](const std::map<std::string, double>& m, const std::string& k, int w) {
        const auto it = m.find(k);
        if (w) out << std::setw(w);
        if (it == m.end()) out << "-";
        else out << it->second;
    };
    for (const auto& metric : r.metrics) {
        out << std::setw(16) << metric;
        for (const auto& t : tasks) {
            const auto it = r.task_means.find(t);
            cell(it == r.task_means.end() ? std::map<std::string, double>{} : it->second, metric, 14);
        }
        cell(r.micro, metric, 12);
        cell(r.macro, metric, 0);
        out << '\n';
    }
    out.unsetf(std::ios::floatfield);
}

inline MetricReport cmd_eval(const std::vector<EvalTaskPaths>& paths, const std::vector<std::size_t>& ks,
                             const std::filesystem::path& json_out, std::ostream& table) {
    std::vector<EvalTask> tasks;
    for (const auto& p : paths) {
        std::ifstream run(p.run), qrels(p.qrels);
        if (!run) fail(ErrorCode::IoFailure, "cannot open " + p.run.string());
        if (!qrels) fail(ErrorCode::IoFailure, "cannot open " + p.qrels.string());
        tasks.push_back({p.name, parse_run(run, p.run.string()), parse_qrels(qrels, p.qrels.string())});
    }
    const auto metrics = standard_metrics(ks);
    auto report = evaluate(tasks, metrics);
    print_report(table, report);
    if (!json_out.empty()) write_json_file(json_out, report_json(report));
    return report;
}

inline void cmd_viz(const std::filesystem::path& token_scores, const std::filesystem::path& html_out) {
    const auto html = render_heatmap_html(read_json_file(token_scores));
    std::ofstream out(html_out, std::ios::trunc);
    if (!out) fail(ErrorCode::IoFailure, "cannot create " + html_out.string());
    out << html;
    if (!out) fail(ErrorCode::IoFailure, "write error on " + html_out.string());
}

/// Checks every *.icra file in `dir`. Returns the number of files that fail
/// to parse or carry violations.
inline std::size_t cmd_validate(const std::filesystem::path& dir, double tolerance, std::ostream& out) {
    if (!std::filesystem::is_directory(dir)) fail(ErrorCode::IoFailure, dir.string() + " is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".icra") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::size_t bad = 0;
    for (const auto& f : files) {
        try {
            const auto dump = read_dump_file(f);
            const auto report = validate_dump(dump.slice, tolerance);
            if (report.ok()) {
                out << f.filename().string() << ": OK (L=" << dump.slice.layers() << " H=" << dump.slice.heads()
                    << " T=" << dump.slice.context_len() << " rows=" << dump.slice.num_rows() << ")\n";
                continue;
            }
            ++bad;
            out << f.filename().string() << ": " << report.violations.size() << " violation(s)\n";
            for (std::size_t i = 0; i < std::min<std::size_t>(report.violations.size(), 10); ++i) {
                const auto& v = report.violations[i];
                out << "  " << to_string(v.kind) << " layer=" << v.layer << " head=" << v.head << " row=" << v.row
                    << " pos=" << v.position << " value=" << v.value << '\n';
            }
        } catch (const Error& e) {
            ++bad;
            out << f.filename().string() << ": " << e.what() << '\n';
        }
    }
    out << files.size() << " file(s), " << bad << " with problems\n";
    return bad;
}

inline BenchReport cmd_bench(const ToyConfig& toy, const BenchParams& params, const std::filesystem::path& csv_out,
                             const std::filesystem::path& json_out) {
    ToyConfig tc = toy;
    tc.seed = params.seed;
    ToyBackend backend(tc);
    const auto report = bench_pipeline(&backend, params);
    if (!csv_out.empty()) {
        std::ofstream f(csv_out, std::ios::trunc);
        if (!f) fail(ErrorCode::IoFailure, "cannot create " + csv_out.string());
        write_bench_csv(f, report);
    }
    if (!json_out.empty()) write_json_file(json_out, bench_json(report));
    return report;
}

}  // namespace icr
