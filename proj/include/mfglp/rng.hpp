#pragma once

#include <cstdint>

namespace mfglp {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace detail

/**
 * Counter-based random stream: draw n is a pure function of (seed, stream,
 * n), so streams can be consumed in any order, in parallel or serially, with
 * bit-identical results. Stream keys are derived by hashing, keeping distinct
 * (seed, stream) pairs statistically independent.
 */
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(detail::splitmix64(detail::splitmix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL + 1))) {}

    std::uint64_t next_u64() { return detail::splitmix64(key_ + (counter_++) * 0x9E3779B97F4A7C15ULL); }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace mfglp
