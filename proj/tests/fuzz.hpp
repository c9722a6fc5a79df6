#pragma once

// Structured mutations of valid ICRA files: header field rewrites, length
// changes and random byte damage.

#include <cstdint>
#include <cstring>
#include <iterator>
#include <vector>

#include "icr/icr.hpp"
#include "support.hpp"

namespace fuzz {

inline void poke_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
    if (at + 4 > b.size()) return;
    for (int i = 0; i < 4; ++i) b[at + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline std::uint32_t interesting(icr::SplitMix64& rng) {
    static const std::uint32_t values[] = {0u, 1u, 2u, 3u, 7u, 0x7fffffffu, 0x80000000u, 0xffffffffu, 0xfffffffeu, 65536u};
    return rng.below(3) ? values[rng.below(std::size(values))] : static_cast<std::uint32_t>(rng.next());
}

inline std::vector<std::uint8_t> valid_dump(icr::SplitMix64& rng) {
    const auto L = static_cast<std::uint32_t>(1 + rng.below(3));
    const auto H = static_cast<std::uint32_t>(1 + rng.below(3));
    const auto T = static_cast<std::uint32_t>(1 + rng.below(12));
    std::vector<std::uint32_t> rows;
    for (std::uint32_t k = 0; k < T; ++k)
        if (rng.below(3) == 0) rows.push_back(k);
    std::string name(rng.below(6), 'm');
    return icr::write_dump(fixture::random_slice(rng, L, H, T, rows), {name});
}

inline std::vector<std::uint8_t> mutate(icr::SplitMix64& rng, std::vector<std::uint8_t> b) {
    const std::size_t name_len = b.size() >= 12 ? b[8] : 0;
    const std::size_t header = 12 + name_len;  // first shape field
    switch (rng.below(8)) {
        case 0:  // shape or dtype field
            poke_u32(b, header + 4 * rng.below(5), interesting(rng));
            break;
        case 1:  // name length
            poke_u32(b, 8, interesting(rng));
            break;
        case 2:  // truncate
            b.resize(rng.below(b.size() + 1));
            break;
        case 3:  // append junk
            for (std::size_t i = 0, n = 1 + rng.below(9); i < n; ++i) b.push_back(static_cast<std::uint8_t>(rng.next()));
            break;
        case 4:  // random bytes
            for (std::size_t i = 0, n = 1 + rng.below(4); i < n && !b.empty(); ++i)
                b[rng.below(b.size())] = static_cast<std::uint8_t>(rng.next());
            break;
        case 5:  // row index table
            poke_u32(b, header + 20 + 4 * rng.below(4), interesting(rng));
            break;
        case 6:  // version or magic
            if (rng.below(2)) poke_u32(b, 4, interesting(rng));
            else if (!b.empty()) b[rng.below(std::min<std::size_t>(4, b.size()))] ^= 0x20;
            break;
        default: {  // pure noise
            std::vector<std::uint8_t> noise(rng.below(64));
            for (auto& x : noise) x = static_cast<std::uint8_t>(rng.next());
            if (noise.size() >= 4 && rng.below(2)) std::memcpy(noise.data(), "ICRA", 4);
            return noise;
        }
    }
    return b;
}

}  // namespace fuzz
