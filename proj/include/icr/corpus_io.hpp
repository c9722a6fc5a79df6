#pragma once

// JSONL inputs: corpus ({"_id", "title"?, "text"}), queries
// ({"_id", "text", "style": "qa"|"ie"}) and candidate lists
// ({"qid", "docids": [...]}, retriever order).

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "icr/error.hpp"
#include "icr/prompt_layout.hpp"
#include "json.hpp"

namespace icr {

struct QueryRecord {
    std::string id;
    Query query;
};

struct CandidateList {
    std::string qid;
    std::vector<std::string> doc_ids;
};

namespace detail {

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = path.string() + ":" + std::to_string(line_no);
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            fail(ErrorCode::FormatError, where + ": " + e.what());
        }
        if (!obj.is_object()) fail(ErrorCode::FormatError, where + ": expected a JSON object");
        try {
            fn(obj, where);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::FormatError, where + ": " + e.what());
        }
    }
}

inline std::string required_string(const nlohmann::json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) fail(ErrorCode::FormatError, where + ": missing string field '" + key + "'");
    return it->get<std::string>();
}

}  // namespace detail

/// Questions get the QA instruction; everything else the IE one. Used only
/// when a query record carries no style.
inline QueryStyle guess_style(std::string_view text) {
    const auto end = text.find_last_not_of(" \t\r\n");
    return end != std::string_view::npos && text[end] == '?' ? QueryStyle::QA : QueryStyle::IE;
}

inline QueryStyle parse_style(std::string_view s) {
    if (s == "qa" || s == "QA") return QueryStyle::QA;
    if (s == "ie" || s == "IE") return QueryStyle::IE;
    fail(ErrorCode::FormatError, "unknown query style '" + std::string(s) + "' (expected qa or ie)");
}

inline std::map<std::string, Document> load_corpus(const std::filesystem::path& path) {
    std::map<std::string, Document> corpus;
    detail::for_each_jsonl(path, [&](const nlohmann::json& obj, const std::string& where) {
        Document d;
        d.id = detail::required_string(obj, "_id", where);
        d.text = detail::required_string(obj, "text", where);
        if (const auto it = obj.find("title"); it != obj.end() && it->is_string() && !it->get<std::string>().empty())
            d.title = it->get<std::string>();
        if (!corpus.emplace(d.id, d).second) fail(ErrorCode::DuplicateDocumentId, where + ": " + d.id);
    });
    return corpus;
}

inline std::vector<QueryRecord> load_queries(const std::filesystem::path& path) {
    std::vector<QueryRecord> out;
    detail::for_each_jsonl(path, [&](const nlohmann::json& obj, const std::string& where) {
        QueryRecord r;
        r.id = detail::required_string(obj, "_id", where);
        r.query.text = detail::required_string(obj, "text", where);
        if (const auto it = obj.find("style"); it != obj.end() && it->is_string())
            r.query.style = parse_style(it->get<std::string>());
        else
            r.query.style = guess_style(r.query.text);
        out.push_back(std::move(r));
    });
    return out;
}

inline std::vector<CandidateList> load_candidates(const std::filesystem::path& path) {
    std::vector<CandidateList> out;
    detail::for_each_jsonl(path, [&](const nlohmann::json& obj, const std::string& where) {
        CandidateList c;
        c.qid = detail::required_string(obj, "qid", where);
        const auto it = obj.find("docids");
        if (it == obj.end() || !it->is_array()) fail(ErrorCode::FormatError, where + ": missing array 'docids'");
        for (const auto& d : *it) c.doc_ids.push_back(d.get<std::string>());
        out.push_back(std::move(c));
    });
    return out;
}

}  // namespace icr
