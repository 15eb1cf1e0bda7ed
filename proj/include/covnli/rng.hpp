#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace covnli {

/// SplitMix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a stream seed from a parent seed and a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t sub) noexcept;

/// Seed derived from a string label (FNV-1a of the label mixed with the seed).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept;

/// Deterministic generator: std::mt19937_64, whose output sequence is fixed
/// by the C++ standard. Distributions are implemented here rather than taken
/// from <random>, whose distribution algorithms are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (one draw per call, no caching).
    double normal();

    /// Unbiased integer in [0, n) by rejection.
    std::size_t below(std::size_t n);

    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace covnli
