#pragma once

#include <cmath>
#include <cstdint>

namespace marsdust {

/// splitmix64 output mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// Child seed for an independent stream, e.g. per image or per octave.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(seed + kGoldenGamma * (stream + 1));
}

/// Counter-based generator: the n-th draw is mix64(seed + n * gamma), so the
/// sequence depends only on the seed and is identical on every platform.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

    constexpr std::uint64_t next() noexcept {
        ++counter_;
        return mix64(seed_ + kGoldenGamma * counter_);
    }

    /// Uniform in [0, 1) with 53 random bits.
    constexpr double uniform() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Modulo bias is below 2^-40 for the n used here.
    constexpr std::uint64_t below(std::uint64_t n) noexcept { return next() % n; }

    /// Standard normal via Box-Muller.
    double normal() noexcept {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    constexpr std::uint64_t seed() const noexcept { return seed_; }
    constexpr std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace marsdust
