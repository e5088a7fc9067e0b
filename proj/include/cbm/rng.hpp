#pragma once

#include <cstdint>

namespace cbm {

/// SplitMix64 counter stream (Steele/Lea/Flood mixing constants).
/// Path k of a simulation uses RngStream(path_stream_seed(seed, k)); the
/// algorithm tag reported alongside results is "splitmix64/inverse-cdf v1".
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double strictly inside (0,1): (k + 0.5) / 2^53.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

/// Splitting rule for independent path streams: seed XOR (k * golden gamma).
/// Plain seed XOR k would make adjacent base seeds generate permuted sets of
/// path streams; the odd multiplier spreads k across all 64 state bits.
inline constexpr std::uint64_t path_stream_seed(std::uint64_t seed, std::uint64_t k) {
    return seed ^ (k * 0x9E3779B97F4A7C15ULL);
}

inline constexpr const char* kRngAlgorithm = "splitmix64/inverse-cdf v1";

} // namespace cbm
