#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hybrideval {

/// Seeded generator used everywhere sampling happens.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The distributions are implemented here rather than taken from
/// <random>, because the standard library distributions are not required to
/// produce the same values across implementations. Together this makes every
/// manifest and projection reproducible on any conforming toolchain.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t bound);

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (one value per call, no caching).
    double normal();

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix64(std::uint64_t x);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view text);

/// Sub-seed for a named stream, e.g. derive_seed(seed, "test/fungal").
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) {
    return mix64(seed ^ mix64(fnv1a64(stream)));
}

}  // namespace hybrideval
