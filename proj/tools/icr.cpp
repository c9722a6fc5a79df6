// icr: batch front end for in-context re-ranking.
//
//   icr rerank        --corpus C --queries Q --candidates K --out run.trec [...]
//   icr layout-export --corpus C --queries Q --candidates K --out-dir DIR
//   icr eval          --run R --qrels Q [--task name,run,qrels ...] [--k 2,5,10]
//   icr viz           --scores run.trec.tokens.json --out heat.html
//   icr validate      --dir DUMPS [--tolerance 1e-3]
//   icr bench         [--ks 20,40,60,80,100] [--trials 3] --csv t.csv --json t.json

#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "icr/commands.hpp"

namespace {

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string part; std::getline(ss, part, ',');)
        if (!part.empty()) out.push_back(part);
    return out;
}

void add_toy_flags(CLI::App& cmd, icr::ToyConfig& toy) {
    cmd.add_option("--toy-layers", toy.layers, "toy model layers")->capture_default_str();
    cmd.add_option("--toy-heads", toy.heads, "toy model heads")->capture_default_str();
    cmd.add_option("--toy-dim", toy.model_dim, "toy model width")->capture_default_str();
    cmd.add_option("--toy-vocab", toy.vocab_size, "toy vocabulary size")->capture_default_str();
    cmd.add_option("--toy-max-len", toy.max_len, "toy context limit")->capture_default_str();
}

struct InputFlags {
    icr::RunConfig cfg;
    std::string backend = "toy";
    std::string order = "reversed";
    std::string mode = "full";
    std::string style;
    std::string plant_bias;
    std::string prefix, suffix;
    bool no_identifiers = false;
    bool identifiers_outside_span = false;
};

void add_input_flags(CLI::App& cmd, InputFlags& f) {
    cmd.add_option("--corpus", f.cfg.corpus, "corpus JSONL")->required()->check(CLI::ExistingFile);
    cmd.add_option("--queries", f.cfg.queries, "queries JSONL")->required()->check(CLI::ExistingFile);
    cmd.add_option("--candidates", f.cfg.candidates, "candidate lists JSONL")->required()->check(CLI::ExistingFile);
    cmd.add_option("--backend", f.backend, "toy | planted | dump")
        ->check(CLI::IsMember({"toy", "planted", "dump"}))
        ->capture_default_str();
    cmd.add_option("--dump-dir", f.cfg.dump_dir, "directory of ICRA dumps (dump backend)");
    cmd.add_option("--order", f.order, "reversed | retriever | random")
        ->check(CLI::IsMember({"reversed", "retriever", "random"}))
        ->capture_default_str();
    cmd.add_option("--mode", f.mode, "full | no_calibration | last_token_only | neither")
        ->check(CLI::IsMember({"full", "no_calibration", "last_token_only", "neither"}))
        ->capture_default_str();
    cmd.add_option("--style", f.style, "force the instruction style: qa | ie")->check(CLI::IsMember({"qa", "ie"}));
    cmd.add_option("--k", f.cfg.k, "re-rank only the top k candidates (0 = all)")->capture_default_str();
    cmd.add_option("--seed", f.cfg.seed, "seed for toy weights and random order")->capture_default_str();
    cmd.add_option("--max-words", f.cfg.prompt.max_words_per_document, "truncate documents (0 = no limit)")
        ->capture_default_str();
    cmd.add_flag("--no-identifiers", f.no_identifiers, "omit the [k] document identifiers");
    cmd.add_flag("--identifiers-outside-span", f.identifiers_outside_span,
                 "exclude [k] identifier tokens from document scores");
    cmd.add_option("--prefix-marker", f.prefix, "model-specific text before the instruction");
    cmd.add_option("--suffix-marker", f.suffix, "model-specific text after the query");
    add_toy_flags(cmd, f.cfg.toy);
    cmd.add_option("--plant-boost", f.cfg.plant.boost, "planted relevance boost per target token");
    cmd.add_option("--plant-bias", f.plant_bias, "comma-separated bias per presented position");
    cmd.add_option("--plant-floor", f.cfg.plant.floor, "planted uniform floor")->capture_default_str();
    cmd.add_option("--plant-target-rank", f.cfg.plant.target_rank, "retriever rank of the target (0 = last)")
        ->capture_default_str();
    cmd.add_option("--plant-layers", f.cfg.plant_layers, "planted L")->capture_default_str();
    cmd.add_option("--plant-heads", f.cfg.plant_heads, "planted H")->capture_default_str();
}

void finish_input_flags(InputFlags& f, const CLI::App& cmd) {
    auto& c = f.cfg;
    c.backend = f.backend == "planted" ? icr::BackendKind::planted
                : f.backend == "dump"  ? icr::BackendKind::dump
                                       : icr::BackendKind::toy;
    if (c.backend == icr::BackendKind::dump && c.dump_dir.empty())
        throw CLI::ValidationError("--dump-dir", "required with --backend dump");
    c.order = f.order == "retriever" ? icr::OrderKind::retriever
              : f.order == "random"  ? icr::OrderKind::random
                                     : icr::OrderKind::reversed;
    c.mode = f.mode == "no_calibration"    ? icr::ScoringMode::no_calibration
             : f.mode == "last_token_only" ? icr::ScoringMode::last_token_only
             : f.mode == "neither"         ? icr::ScoringMode::neither
                                           : icr::ScoringMode::full;
    if (!f.style.empty()) c.style_override = icr::parse_style(f.style);
    for (const auto& b : split_commas(f.plant_bias)) c.plant.position_bias.push_back(std::stod(b));
    if (cmd.count("--prefix-marker")) c.prefix_marker = f.prefix;
    if (cmd.count("--suffix-marker")) c.suffix_marker = f.suffix;
    c.prompt.number_documents = !f.no_identifiers;
    c.prompt.identifier_in_span = !f.identifiers_outside_span;
}

std::vector<std::size_t> parse_ks(const std::string& s) {
    std::vector<std::size_t> ks;
    for (const auto& p : split_commas(s)) ks.push_back(static_cast<std::size_t>(std::stoul(p)));
    return ks;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"In-context re-ranking: attention-based document re-ranking"};
    app.require_subcommand(1);

    InputFlags rerank_flags;
    auto* rerank = app.add_subcommand("rerank", "re-rank candidate lists and write a TREC run");
    add_input_flags(*rerank, rerank_flags);
    rerank->add_option("--out", rerank_flags.cfg.out, "run file to write")->required();
    rerank->add_option("--token-scores", rerank_flags.cfg.token_scores_out, "token-score JSON (default <out>.tokens.json)");
    rerank->add_option("--write-dumps", rerank_flags.cfg.write_dumps, "also write ICRA dumps to this directory");
    rerank->add_option("--tag", rerank_flags.cfg.tag, "run tag column")->capture_default_str();

    InputFlags export_flags;
    std::filesystem::path export_dir;
    auto* layout_export = app.add_subcommand("layout-export", "write layout JSON for external exporters");
    add_input_flags(*layout_export, export_flags);
    layout_export->add_option("--out-dir", export_dir, "output directory")->required();

    std::filesystem::path eval_run, eval_qrels, eval_json;
    std::vector<std::string> eval_tasks;
    std::string eval_ks = "2,5,10";
    auto* eval = app.add_subcommand("eval", "score runs against qrels");
    eval->add_option("--run", eval_run, "run file");
    eval->add_option("--qrels", eval_qrels, "qrels file");
    eval->add_option("--task", eval_tasks, "name,run,qrels (repeatable)");
    eval->add_option("--k", eval_ks, "comma-separated cutoffs")->capture_default_str();
    eval->add_option("--out", eval_json, "write the report as JSON");

    std::filesystem::path viz_in, viz_out;
    auto* viz = app.add_subcommand("viz", "render token scores as an HTML heatmap");
    viz->add_option("--scores", viz_in, "token-score JSON")->required()->check(CLI::ExistingFile);
    viz->add_option("--out", viz_out, "HTML file to write")->required();

    std::filesystem::path validate_dir;
    double tolerance = 1e-3;
    auto* validate = app.add_subcommand("validate", "check ICRA dumps");
    validate->add_option("--dir", validate_dir, "directory of .icra files")->required();
    validate->add_option("--tolerance", tolerance, "row-sum tolerance")->capture_default_str();

    icr::BenchParams bench_params;
    icr::ToyConfig bench_toy;
    std::string bench_ks = "20,40,60,80,100";
    std::filesystem::path bench_csv, bench_json_path;
    auto* bench = app.add_subcommand("bench", "time the pipeline against K on the toy backend");
    bench->add_option("--ks", bench_ks, "comma-separated candidate counts")->capture_default_str();
    bench->add_option("--trials", bench_params.trials, "trials per K")->capture_default_str();
    bench->add_option("--words", bench_params.words_per_doc, "words per synthetic document")->capture_default_str();
    bench->add_option("--seed", bench_params.seed, "seed")->capture_default_str();
    bench->add_option("--csv", bench_csv, "CSV output (method,K,trial,ms)");
    bench->add_option("--json", bench_json_path, "JSON summary output");
    add_toy_flags(*bench, bench_toy);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*rerank) {
            finish_input_flags(rerank_flags, *rerank);
            const auto s = icr::cmd_rerank(rerank_flags.cfg);
            std::cerr << "re-ranked " << s.queries << " queries (" << s.acquisitions
                      << " attention acquisitions) -> " << s.run_path.string() << ", "
                      << s.token_scores_path.string() << '\n';
        } else if (*layout_export) {
            finish_input_flags(export_flags, *layout_export);
            const auto n = icr::cmd_layout_export(export_flags.cfg, export_dir);
            std::cerr << "exported " << n << " layout pairs to " << export_dir.string() << '\n';
        } else if (*eval) {
            std::vector<icr::EvalTaskPaths> tasks;
            if (!eval_run.empty() || !eval_qrels.empty()) {
                if (eval_run.empty() || eval_qrels.empty())
                    throw CLI::ValidationError("--run/--qrels", "both are required together");
                tasks.push_back({"default", eval_run, eval_qrels});
            }
            for (const auto& t : eval_tasks) {
                const auto parts = split_commas(t);
                if (parts.size() != 3) throw CLI::ValidationError("--task", "expected name,run,qrels");
                tasks.push_back({parts[0], parts[1], parts[2]});
            }
            if (tasks.empty()) throw CLI::ValidationError("eval", "give --run and --qrels, or --task");
            icr::cmd_eval(tasks, parse_ks(eval_ks), eval_json, std::cout);
        } else if (*viz) {
            icr::cmd_viz(viz_in, viz_out);
        } else if (*validate) {
            return icr::cmd_validate(validate_dir, tolerance, std::cout) == 0 ? 0 : 1;
        } else if (*bench) {
            bench_params.ks = parse_ks(bench_ks);
            const auto report = icr::cmd_bench(bench_toy, bench_params, bench_csv, bench_json_path);
            if (bench_csv.empty()) icr::write_bench_csv(std::cout, report);
            for (const auto& s : report.summary)
                std::cerr << "K=" << s.k << " median " << s.median_ms << " ms, " << s.context_tokens
                          << " tokens, " << s.reused_prefix_tokens << " reused, " << s.acquisitions_per_query
                          << " acquisitions\n";
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const icr::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
