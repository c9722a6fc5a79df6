#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "icr/attention.hpp"
#include "icr/error.hpp"
#include "icr/prompt_layout.hpp"

namespace icr {

/// A controlled attention pattern: every query row puts `floor` on each
/// visible position, plus `position_bias[p]` on each token of the document
/// presented at position p (0 = first in the prompt), plus `boost` on each
/// token of the target document. Rows are then normalized to sum to 1.
struct PlantSpec {
    std::string target_doc;
    double boost = 0.0;
    std::vector<double> position_bias;
    double floor = 1.0;
};

/// Builds query rows for `layout` under `plant`, replicated over L layers and
/// H heads. Calibration layouts get the same construction without the boost
/// term, modelling a content-free query that only sees the position bias.
inline AttentionSlice synth_attention(const PromptLayout& layout, const PlantSpec& plant,
                                      std::uint32_t layers = 1, std::uint32_t heads = 1) {
    if (!layout.find(plant.target_doc)) fail(ErrorCode::UnknownTargetDoc, plant.target_doc);
    if (!(plant.boost >= 0.0) || !(plant.floor >= 0.0) || !std::isfinite(plant.boost) || !std::isfinite(plant.floor))
        fail(ErrorCode::InvalidConfig, "boost and floor must be finite and non-negative");
    for (double b : plant.position_bias)
        if (!(b >= 0.0) || !std::isfinite(b)) fail(ErrorCode::InvalidConfig, "position bias must be non-negative");

    const std::size_t T = layout.total_len();
    const bool with_boost = layout.pass == PassKind::query;

    std::vector<double> weight(T, plant.floor);
    for (std::size_t p = 0; p < layout.doc_spans.size(); ++p) {
        const auto& d = layout.doc_spans[p];
        double extra = p < plant.position_bias.size() ? plant.position_bias[p] : 0.0;
        if (with_boost && d.doc_id == plant.target_doc) extra += plant.boost;
        for (std::size_t j = d.tokens.begin; j < d.tokens.end; ++j) weight[j] += extra;
    }

    const auto rows = layout.query_rows();
    auto slice = AttentionSlice::zeros(layers, heads, static_cast<std::uint32_t>(T), rows);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t k = rows[r];
        double z = 0.0;
        for (std::size_t j = 0; j <= k; ++j) z += weight[j];
        if (!(z > 0.0)) fail(ErrorCode::InvalidConfig, "planted row " + std::to_string(k) + " has zero mass");
        for (std::uint32_t l = 0; l < layers; ++l)
            for (std::uint32_t h = 0; h < heads; ++h) {
                auto row = slice.row(l, h, r);
                for (std::size_t j = 0; j <= k; ++j) row[j] = static_cast<float>(weight[j] / z);
            }
    }
    return slice;
}

}  // namespace icr
