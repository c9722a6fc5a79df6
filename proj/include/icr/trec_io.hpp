#pragma once

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "icr/error.hpp"
#include "icr/metrics.hpp"
#include "icr/scoring.hpp"

namespace icr {

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        if (i == line.size()) break;
        const std::size_t s = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        out.push_back(line.substr(s, i - s));
    }
    return out;
}

[[noreturn]] inline void format_error(std::string_view source, std::size_t line_no, const std::string& what) {
    fail(ErrorCode::FormatError, std::string(source) + ":" + std::to_string(line_no) + ": " + what);
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    const auto* end = s.data() + s.size();
    const auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && p == end;
}

}  // namespace detail

/// TREC qrels: "qid 0 docid grade", or the 3-column "qid docid grade"
/// variant (detected from the first data line). Negative grades are read
/// as 0.
inline Qrels parse_qrels(std::istream& in, std::string_view source = "qrels") {
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0, columns = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto f = detail::split_ws(line);
        if (f.empty()) continue;
        if (columns == 0) {
            if (f.size() != 3 && f.size() != 4)
                detail::format_error(source, line_no, "expected 3 or 4 columns, got " + std::to_string(f.size()));
            columns = f.size();
        } else if (f.size() != columns) {
            detail::format_error(source, line_no, "expected " + std::to_string(columns) + " columns");
        }
        int grade = 0;
        if (!detail::parse_number(f.back(), grade))
            detail::format_error(source, line_no, "grade '" + std::string(f.back()) + "' is not an integer");
        const std::string_view doc = f[columns == 4 ? 2 : 1];
        qrels[std::string(f[0])][std::string(doc)] = std::max(grade, 0);
    }
    return qrels;
}

/// TREC run: "qid Q0 docid rank score tag". Entries are ordered by the rank
/// column.
inline RunFile parse_run(std::istream& in, std::string_view source = "run") {
    struct Row {
        long rank;
        std::size_t line;
        RunEntry entry;
    };
    std::map<std::string, std::vector<Row>> rows;
    std::map<std::string, std::set<std::string>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto f = detail::split_ws(line);
        if (f.empty()) continue;
        if (f.size() != 6) detail::format_error(source, line_no, "expected 6 columns, got " + std::to_string(f.size()));
        Row r{};
        r.line = line_no;
        if (!detail::parse_number(f[3], r.rank)) detail::format_error(source, line_no, "bad rank");
        if (!detail::parse_number(f[4], r.entry.score)) detail::format_error(source, line_no, "bad score");
        r.entry.doc_id = std::string(f[2]);
        const std::string qid(f[0]);
        if (!seen[qid].insert(r.entry.doc_id).second)
            detail::format_error(source, line_no, "duplicate document '" + r.entry.doc_id + "' for query " + qid);
        rows[qid].push_back(std::move(r));
    }
    RunFile run;
    for (auto& [qid, list] : rows) {
        std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) { return a.rank < b.rank; });
        auto& out = run.queries[qid];
        for (auto& r : list) out.push_back(std::move(r.entry));
    }
    return run;
}

/// Shortest decimal that round-trips the double.
inline std::string format_score(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

inline void write_run(std::ostream& out, std::string_view qid, const Ranking& ranking, std::string_view tag) {
    std::size_t pos = 0;
    for (const auto& e : ranking.entries) {
        out << qid << " Q0 " << e.doc_id << ' ' << ++pos << ' ' << format_score(e.score) << ' ' << tag << '\n';
    }
}

}  // namespace icr
