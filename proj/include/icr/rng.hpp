#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace icr {

/// SplitMix64: a 64-bit counter-based generator. The n-th output is a pure
/// function of (seed, n), so streams are identical on every platform and
/// standard library. <random> distributions are avoided on purpose because
/// their algorithms are implementation-defined.
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    constexpr double uniform() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    constexpr double uniform(double lo, double hi) noexcept {
        return lo + (hi - lo) * uniform();
    }

    /// Uniform integer in [0, bound). bound must be > 0.
    constexpr std::uint64_t below(std::uint64_t bound) noexcept {
        // Lemire-style rejection keeps the result unbiased.
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

private:
    std::uint64_t state_;
};

/// Fisher-Yates shuffle driven by SplitMix64, reproducible across platforms.
template <typename T>
void seeded_shuffle(std::span<T> items, std::uint64_t seed) {
    SplitMix64 rng(seed);
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

}  // namespace icr
