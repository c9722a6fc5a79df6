#pragma once

// Forward-pass (FP) accounting for LLM re-ranking methods. One prefill of a
// whole prompt counts as one FP regardless of its length; each generated
// token is one decode FP.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "icr/error.hpp"

namespace icr {

struct Window {
    std::size_t begin = 0;  // inclusive
    std::size_t end = 0;    // exclusive
    friend bool operator==(const Window&, const Window&) = default;
};

/// Windows in processing order: tail of the candidate list first.
struct WindowSchedule {
    std::vector<Window> windows;
};

/// RankGPT-style sliding windows over N candidates. Window i ends at
/// N - i*stride; the head window is clipped at 0.
inline WindowSchedule sliding_window_schedule(std::size_t n, std::size_t window = 20, std::size_t stride = 10) {
    if (stride == 0 || window < stride)
        fail(ErrorCode::InvalidWindowParams,
             "need window >= stride >= 1 (window=" + std::to_string(window) + ", stride=" + std::to_string(stride) + ")");
    WindowSchedule s;
    if (n == 0) return s;
    if (n <= window) {
        s.windows.push_back({0, n});
        return s;
    }
    const std::size_t count = (n - window + stride - 1) / stride + 1;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t end = n - i * stride;
        s.windows.push_back({end > window ? end - window : 0, end});
    }
    return s;
}

enum class RerankMethod { pointwise, pairwise_allpairs, pairwise_sort, listwise_window, icr };

inline std::string_view to_string(RerankMethod m) {
    switch (m) {
        case RerankMethod::pointwise: return "pointwise";
        case RerankMethod::pairwise_allpairs: return "pairwise_allpairs";
        case RerankMethod::pairwise_sort: return "pairwise_sort";
        case RerankMethod::listwise_window: return "listwise_window";
        case RerankMethod::icr: return "icr";
    }
    return "?";
}

inline RerankMethod parse_rerank_method(std::string_view name) {
    for (auto m : {RerankMethod::pointwise, RerankMethod::pairwise_allpairs, RerankMethod::pairwise_sort,
                   RerankMethod::listwise_window, RerankMethod::icr})
        if (to_string(m) == name) return m;
    fail(ErrorCode::UnknownMethod, std::string(name));
}

struct CostParams {
    /// Decode FPs per call for pointwise and pairwise methods.
    std::uint64_t decode_per_call = 1;
    std::size_t window = 20;
    std::size_t stride = 10;
    /// Decode FPs per listwise window; 0 means one per candidate in the window.
    std::uint64_t listwise_decode_per_window = 0;
};

struct ForwardPassCount {
    std::uint64_t prefill = 0;
    std::uint64_t decode = 0;
    std::uint64_t api_calls = 0;

    std::uint64_t total() const noexcept { return prefill + decode; }
    friend bool operator==(const ForwardPassCount&, const ForwardPassCount&) = default;
};

/// Worst-case comparisons of a top-down merge sort on n items.
inline std::uint64_t merge_sort_comparisons(std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t ceil_log = 0;
    while ((std::uint64_t{1} << ceil_log) < n) ++ceil_log;
    return n * ceil_log - (std::uint64_t{1} << ceil_log) + 1;
}

inline ForwardPassCount count_forward_passes(RerankMethod method, std::uint64_t n, const CostParams& p = {}) {
    if (n == 0) fail(ErrorCode::InvalidWindowParams, "N must be >= 1");
    ForwardPassCount c;
    switch (method) {
        case RerankMethod::icr:
            // query pass + calibration pass
            c = {2, 0, 2};
            break;
        case RerankMethod::pointwise:
            c = {n, p.decode_per_call * n, n};
            break;
        case RerankMethod::pairwise_allpairs: {
            const std::uint64_t calls = n * (n - 1);
            c = {calls, p.decode_per_call * calls, calls};
            break;
        }
        case RerankMethod::pairwise_sort: {
            const std::uint64_t calls = merge_sort_comparisons(n);
            c = {calls, p.decode_per_call * calls, calls};
            break;
        }
        case RerankMethod::listwise_window: {
            const auto schedule = sliding_window_schedule(n, p.window, p.stride);
            for (const auto& w : schedule.windows) {
                c.prefill += 1;
                c.decode += p.listwise_decode_per_window ? p.listwise_decode_per_window : (w.end - w.begin);
                c.api_calls += 1;
            }
            break;
        }
    }
    return c;
}

}  // namespace icr
