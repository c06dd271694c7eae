#pragma once

#include <cmath>
#include <cstdint>

namespace hashalloc {

/// Deterministic 64-bit generator (splitmix64). Used instead of the standard
/// <random> distributions so that simulation output is bit-identical for a
/// given seed regardless of platform, standard library, or thread count.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in the open interval (0, 1).
    double uniform01() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    /// Uniform double in [lo, hi] (endpoints hit with probability ~0).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Exponential with the given mean, strictly positive.
    double exponential(double mean) { return -mean * std::log(uniform01()); }

private:
    std::uint64_t state_;
};

/// Splittable per-trial stream: mixes (master seed, trial, stream) into an
/// independent seed, so trials can run in any order or concurrently.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t trial,
                                 std::uint64_t stream) {
    SplitMix64 g(master_seed ^ (0xA0761D6478BD642Full * (trial + 1)) ^
                 (0xE7037ED1A0B428DBull * (stream + 1)));
    return g.next_u64();
}

} // namespace hashalloc
