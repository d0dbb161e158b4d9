#pragma once

#include <cstdint>
#include <vector>

namespace temu {

/// Seed value with deterministic sub-stream derivation. Every module that
/// needs randomness takes an RngSeed and derives children for independent
/// components, so results never depend on evaluation order or thread count.
struct RngSeed {
    std::uint64_t value = 0;

    /// Derive an independent child seed for sub-component `key`.
    [[nodiscard]] RngSeed child(std::uint64_t key) const;
};

/// SplitMix64 (Vigna, public domain reference implementation). Chosen over
/// the platform default because its output stream is fixed by the algorithm:
/// the same seed gives the same 64-bit stream everywhere. Published test
/// vectors are asserted in tests/test_rng.cpp.
class Rng {
public:
    explicit Rng(RngSeed seed) : state_(seed.value) {}

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    /// Unbiased integer in [0, n), n >= 1 (rejection sampling).
    std::uint64_t below(std::uint64_t n);

    /// Standard normal via Box-Muller (two uniforms per call, no cached pair).
    double normal();

    /// Gamma(shape, 1) via Marsaglia-Tsang; shape > 0.
    double gamma(double shape);

    /// InverseGamma(shape, scale) with density proportional to
    /// x^(-shape-1) * exp(-scale/x).
    double inverse_gamma(double shape, double scale);

    /// Random permutation of 0..n-1 (Fisher-Yates).
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::uint64_t state_;
};

}  // namespace temu
