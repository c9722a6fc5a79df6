#pragma once

// Shared fixtures: profiles, random documents, random attention.

#include <cstdint>
#include <map>
#include <optional>
#include <memory>
#include <string>
#include <vector>

#include "icr/icr.hpp"

namespace fixture {

inline icr::ModelProfile whitespace_profile(std::uint32_t layers = 1, std::uint32_t heads = 1,
                                            std::string prefix = "[INST] ", std::string suffix = " [/INST]",
                                            std::uint32_t vocab = 4096) {
    icr::ModelProfile p;
    p.name = "test";
    p.prefix_marker = std::move(prefix);
    p.suffix_marker = std::move(suffix);
    p.layers = layers;
    p.heads = heads;
    p.tokenizer = std::make_shared<icr::WhitespaceTokenizer>(vocab);
    return p;
}

inline std::string random_words(icr::SplitMix64& rng, std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) s += ' ';
        s += "w" + std::to_string(rng.below(300));
    }
    return s;
}

inline std::vector<icr::Document> random_docs(icr::SplitMix64& rng, std::size_t n, std::size_t min_words = 1,
                                              std::size_t max_words = 6) {
    std::vector<icr::Document> docs;
    for (std::size_t i = 0; i < n; ++i) {
        icr::Document d;
        d.id = "d" + std::to_string(i + 1);
        if (rng.below(2)) d.title = "title " + std::to_string(i);
        d.text = random_words(rng, min_words + rng.below(max_words - min_words + 1));
        docs.push_back(std::move(d));
    }
    return docs;
}

// Documents with identical word counts and no titles, so every span has the
// same length.
inline std::vector<icr::Document> equal_docs(std::size_t n, std::size_t words) {
    std::vector<icr::Document> docs;
    for (std::size_t i = 0; i < n; ++i) {
        std::string text;
        for (std::size_t w = 0; w < words; ++w) text += (w ? " t" : "t") + std::to_string(i * 100 + w);
        docs.push_back({"doc" + std::to_string(i + 1), std::nullopt, text});
    }
    return docs;
}

inline std::map<std::string, std::uint32_t> retriever_ranks(const std::vector<icr::Document>& docs) {
    std::map<std::string, std::uint32_t> r;
    for (std::size_t i = 0; i < docs.size(); ++i) r[docs[i].id] = static_cast<std::uint32_t>(i + 1);
    return r;
}

// A causally masked slice with random positive rows normalized to 1.
inline icr::AttentionSlice random_slice(icr::SplitMix64& rng, std::uint32_t L, std::uint32_t H, std::uint32_t T,
                                        std::vector<std::uint32_t> rows) {
    auto s = icr::AttentionSlice::zeros(L, H, T, rows);
    for (std::uint32_t l = 0; l < L; ++l)
        for (std::uint32_t h = 0; h < H; ++h)
            for (std::size_t r = 0; r < rows.size(); ++r) {
                auto row = s.row(l, h, r);
                double z = 0.0;
                std::vector<double> w(rows[r] + 1);
                for (auto& x : w) z += (x = rng.uniform(0.01, 1.0));
                for (std::size_t j = 0; j < w.size(); ++j) row[j] = static_cast<float>(w[j] / z);
            }
    return s;
}

}  // namespace fixture
