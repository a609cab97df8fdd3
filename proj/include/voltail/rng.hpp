// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Counter-based random streams.
///
/// Philox4x32-10 maps (counter, key) to four 32-bit words with no state, so the
/// draw for (seed, stream, block) is a pure function and any number of workers
/// can evaluate disjoint streams in any order. Layout used throughout:
///   key     = {seed lo, seed hi}
///   counter = {block lo, block hi, stream lo, stream hi}
/// Streams carry a purpose tag in their top byte so that independent consumers
/// sharing one seed never collide.

#include <array>
#include <bit>
#include <cstdint>

namespace voltail::rng {

using Block = std::array<std::uint32_t, 4>;

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

[[nodiscard]] constexpr Block philox4x32_10(Block ctr, std::uint32_t k0, std::uint32_t k1) noexcept {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k0 += kPhiloxW0;
            k1 += kPhiloxW1;
        }
        const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k0, static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k1, static_cast<std::uint32_t>(p0)};
    }
    return ctr;
}

enum class StreamTag : std::uint64_t {
    path = 0,             // volatility / price paths, one stream per path
    stationary_draw = 1,  // inverse-CDF sampler
    return_noise = 2,     // W1 increment of the short-term return approximation
    bridge = 3,           // Brownian-bridge refinement of W1 inside a return window
    window_vol = 4,       // volatility noise inside a return window
    synthetic = 5,        // test / synthetic data generators
};

inline constexpr std::uint64_t kStreamIndexBits = 56;

[[nodiscard]] constexpr std::uint64_t make_stream(StreamTag tag, std::uint64_t index) noexcept {
    return (static_cast<std::uint64_t>(tag) << kStreamIndexBits) |
           (index & ((std::uint64_t{1} << kStreamIndexBits) - 1));
}

[[nodiscard]] constexpr Block draw_block(std::uint64_t seed, std::uint64_t stream,
                                         std::uint64_t block) noexcept {
    return philox4x32_10({static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)},
                         static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32));
}

/// Uniform on the open interval (0, 1) from 52 random bits: (2m + 1) 2^-53. Exact.
[[nodiscard]] inline double uniform_open(std::uint32_t lo, std::uint32_t hi) noexcept {
    const std::uint64_t m52 = (static_cast<std::uint64_t>(hi) << 20) | (lo >> 12);
    const double one_m = std::bit_cast<double>(std::uint64_t{0x3FF0000000000000} | m52);
    return (one_m - 1.0) + 0x1p-53;
}

}  // namespace voltail::rng
