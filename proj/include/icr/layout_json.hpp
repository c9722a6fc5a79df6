#pragma once

// Layout JSON (schema_version 1): the hand-off to external attention
// exporters. Character offsets are byte offsets into the UTF-8 prompt.
//
// {
//   "schema_version": 1, "qid": "...", "pass": "query" | "calibration",
//   "style": "qa" | "ie", "query_text": "...", "prompt": "...",
//   "tokenizer": "...", "token_ids": [...], "token_offsets": [[b, e], ...],
//   "total_len": T,
//   "instruction": {"chars": [b, e], "tokens": [b, e]},
//   "documents": [{"doc_id", "identifier", "chars": [b, e], "tokens": [b, e]}, ...],
//   "query": {"chars": [b, e], "tokens": [b, e]},
//   "order": {"mode", "seed", "presentation_order": [...], "identifier_map": {"1": id, ...}}
// }
//
// "token_ids" is present only when the prompt was tokenized locally with the
// token ids a backend will consume.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "icr/error.hpp"
#include "icr/prompt_layout.hpp"
#include "json.hpp"

namespace icr {

inline constexpr int kLayoutSchemaVersion = 1;

inline nlohmann::json layout_to_json(const PromptLayout& layout, std::string_view qid, std::string_view tokenizer_name,
                                     bool include_token_ids = true) {
    using nlohmann::json;
    auto pair = [](std::size_t b, std::size_t e) { return json::array({b, e}); };
    json j;
    j["schema_version"] = kLayoutSchemaVersion;
    j["qid"] = qid;
    j["pass"] = to_string(layout.pass);
    j["style"] = to_string(layout.style);
    j["query_text"] = layout.query_text;
    j["prompt"] = layout.text;
    j["tokenizer"] = tokenizer_name;
    if (include_token_ids) j["token_ids"] = layout.token_ids();
    json offsets = json::array();
    for (const auto& t : layout.tokens) offsets.push_back(pair(t.chars.begin, t.chars.end));
    j["token_offsets"] = std::move(offsets);
    j["total_len"] = layout.total_len();
    j["instruction"] = {{"chars", pair(layout.instruction_chars.begin, layout.instruction_chars.end)},
                        {"tokens", pair(layout.instruction_span.begin, layout.instruction_span.end)}};
    json docs = json::array();
    for (const auto& d : layout.doc_spans)
        docs.push_back({{"doc_id", d.doc_id},
                        {"identifier", d.identifier},
                        {"chars", pair(d.chars.begin, d.chars.end)},
                        {"tokens", pair(d.tokens.begin, d.tokens.end)}});
    j["documents"] = std::move(docs);
    j["query"] = {{"chars", pair(layout.query_chars.begin, layout.query_chars.end)},
                  {"tokens", pair(layout.query_span.begin, layout.query_span.end)}};
    json idmap = json::object();
    for (const auto& [k, id] : layout.identifier_map) idmap[std::to_string(k)] = id;
    j["order"] = {{"mode", to_string(layout.order.kind)},
                  {"seed", layout.order.seed},
                  {"presentation_order", layout.presentation_order},
                  {"identifier_map", std::move(idmap)}};
    return j;
}

/// Rebuilds a layout from exported JSON, e.g. one whose spans were
/// re-derived by an exporter with a model's own tokenizer.
inline PromptLayout layout_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema_version").get<int>() != kLayoutSchemaVersion)
            fail(ErrorCode::UnsupportedVersion, "layout schema_version " + j.at("schema_version").dump());
        auto range = [](const nlohmann::json& a) {
            return std::pair{a.at(0).get<std::size_t>(), a.at(1).get<std::size_t>()};
        };
        PromptLayout l;
        l.pass = j.at("pass").get<std::string>() == "calibration" ? PassKind::calibration : PassKind::query;
        l.style = j.at("style").get<std::string>() == "ie" ? QueryStyle::IE : QueryStyle::QA;
        l.query_text = j.at("query_text").get<std::string>();
        l.text = j.at("prompt").get<std::string>();
        const auto& offsets = j.at("token_offsets");
        const bool has_ids = j.contains("token_ids");
        for (std::size_t i = 0; i < offsets.size(); ++i) {
            const auto [b, e] = range(offsets[i]);
            const std::int32_t id = has_ids ? j["token_ids"].at(i).get<std::int32_t>() : 0;
            l.tokens.push_back({id, {b, e}});
        }
        if (j.at("total_len").get<std::size_t>() != l.tokens.size())
            fail(ErrorCode::ShapeMismatch, "total_len disagrees with token_offsets");
        {
            const auto [cb, ce] = range(j.at("instruction").at("chars"));
            const auto [tb, te] = range(j.at("instruction").at("tokens"));
            l.instruction_chars = {cb, ce};
            l.instruction_span = {tb, te};
        }
        for (const auto& d : j.at("documents")) {
            const auto [cb, ce] = range(d.at("chars"));
            const auto [tb, te] = range(d.at("tokens"));
            l.doc_spans.push_back({d.at("doc_id").get<std::string>(), d.at("identifier").get<std::uint32_t>(),
                                   {cb, ce}, {tb, te}});
        }
        {
            const auto [cb, ce] = range(j.at("query").at("chars"));
            const auto [tb, te] = range(j.at("query").at("tokens"));
            l.query_chars = {cb, ce};
            l.query_span = {tb, te};
        }
        const auto& order = j.at("order");
        const auto mode = order.at("mode").get<std::string>();
        l.order.kind = mode == "retriever" ? OrderKind::retriever
                       : mode == "random"  ? OrderKind::random
                                           : OrderKind::reversed;
        l.order.seed = order.at("seed").get<std::uint64_t>();
        l.presentation_order = order.at("presentation_order").get<std::vector<std::string>>();
        for (const auto& [k, id] : order.at("identifier_map").items())
            l.identifier_map.emplace(static_cast<std::uint32_t>(std::stoul(k)), id.get<std::string>());

        if (l.query_span.empty() || l.query_span.end > l.tokens.size())
            fail(ErrorCode::ShapeMismatch, "query span outside the token sequence");
        for (const auto& d : l.doc_spans)
            if (d.tokens.empty() || d.tokens.end > l.query_span.begin)
                fail(ErrorCode::ShapeMismatch, "document span of '" + d.doc_id + "' is empty or after the query");
        return l;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::FormatError, std::string("layout JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
        fail(ErrorCode::FormatError, std::string("layout JSON: ") + e.what());
    }
}

inline std::filesystem::path layout_json_path(const std::filesystem::path& dir, std::string_view qid, PassKind pass) {
    return dir / (std::string(qid) + (pass == PassKind::query ? ".q" : ".cal") + ".layout.json");
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::IoFailure, "cannot create " + path.string());
    out << j.dump(2) << '\n';
    if (!out) fail(ErrorCode::IoFailure, "write error on " + path.string());
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::FormatError, path.string() + ": " + e.what());
    }
}

}  // namespace icr
