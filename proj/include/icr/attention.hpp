#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "icr/error.hpp"

namespace icr {

/// The query-token rows of an L x H x T x T causal attention tensor.
///
/// Values are stored layer-major, then head, then stored row, each row a
/// dense vector of length T (positions after the row index hold 0). Only the
/// rows named in row_indices are present.
class AttentionSlice {
public:
    AttentionSlice() = default;

    AttentionSlice(std::uint32_t layers, std::uint32_t heads, std::uint32_t context_len,
                   std::vector<std::uint32_t> row_indices, std::vector<float> values)
        : layers_(layers), heads_(heads), context_len_(context_len),
          rows_(std::move(row_indices)), values_(std::move(values)) {
        if (layers_ == 0 || heads_ == 0)
            fail(ErrorCode::ShapeMismatch, "attention slice needs L >= 1 and H >= 1");
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            if (rows_[i] >= context_len_)
                fail(ErrorCode::RowOutOfRange,
                     "row " + std::to_string(rows_[i]) + " >= T=" + std::to_string(context_len_));
            if (i > 0 && rows_[i] <= rows_[i - 1])
                fail(ErrorCode::NonAscendingRows, "row indices must be strictly ascending");
        }
        const std::uint64_t expected = std::uint64_t{layers_} * heads_ * rows_.size() * context_len_;
        if (values_.size() != expected)
            fail(ErrorCode::ShapeMismatch, "expected " + std::to_string(expected) + " values, got " +
                                               std::to_string(values_.size()));
    }

    static AttentionSlice zeros(std::uint32_t layers, std::uint32_t heads, std::uint32_t context_len,
                                std::vector<std::uint32_t> row_indices) {
        const std::size_t n = std::size_t{layers} * heads * row_indices.size() * context_len;
        return AttentionSlice(layers, heads, context_len, std::move(row_indices), std::vector<float>(n, 0.0f));
    }

    std::uint32_t layers() const noexcept { return layers_; }
    std::uint32_t heads() const noexcept { return heads_; }
    std::uint32_t context_len() const noexcept { return context_len_; }
    std::span<const std::uint32_t> row_indices() const noexcept { return rows_; }
    std::size_t num_rows() const noexcept { return rows_.size(); }
    std::span<const float> values() const noexcept { return values_; }

    /// r is the position within row_indices, not the token index.
    std::span<const float> row(std::uint32_t layer, std::uint32_t head, std::size_t r) const {
        return {values_.data() + offset(layer, head, r), context_len_};
    }
    std::span<float> row(std::uint32_t layer, std::uint32_t head, std::size_t r) {
        return {values_.data() + offset(layer, head, r), context_len_};
    }

    /// Position of token index k within row_indices, if stored.
    std::optional<std::size_t> find_row(std::uint32_t k) const noexcept {
        std::size_t lo = 0, hi = rows_.size();
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (rows_[mid] < k) lo = mid + 1;
            else hi = mid;
        }
        if (lo < rows_.size() && rows_[lo] == k) return lo;
        return std::nullopt;
    }

private:
    std::size_t offset(std::uint32_t layer, std::uint32_t head, std::size_t r) const noexcept {
        return ((std::size_t{layer} * heads_ + head) * rows_.size() + r) * context_len_;
    }

    std::uint32_t layers_ = 0;
    std::uint32_t heads_ = 0;
    std::uint32_t context_len_ = 0;
    std::vector<std::uint32_t> rows_;
    std::vector<float> values_;
};

/// Shape, rows and every value bit-for-bit equal.
inline bool bitwise_equal(const AttentionSlice& a, const AttentionSlice& b) {
    if (a.layers() != b.layers() || a.heads() != b.heads() || a.context_len() != b.context_len()) return false;
    if (!std::equal(a.row_indices().begin(), a.row_indices().end(), b.row_indices().begin(),
                    b.row_indices().end()))
        return false;
    const auto va = a.values();
    const auto vb = b.values();
    return va.size() == vb.size() && (va.empty() || std::memcmp(va.data(), vb.data(), va.size_bytes()) == 0);
}

}  // namespace icr
