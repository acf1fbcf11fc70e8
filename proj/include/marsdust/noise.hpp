#pragma once

#include <array>
#include <cstdint>

#include "marsdust/field.hpp"
#include "marsdust/image.hpp"

namespace marsdust {

/// Multi-octave Perlin configuration.
struct PerlinParams {
    double scale = 128.0;       ///< lattice cell size in pixels for the first octave
    int octaves = 4;            ///< number of summed octaves
    double lacunarity = 2.0;    ///< frequency multiplier between octaves
    double persistence = 0.5;   ///< amplitude multiplier between octaves
    std::uint64_t seed = 0;

    /// Throws ValidationError naming the first invalid field.
    void validate() const;

    friend bool operator==(const PerlinParams&, const PerlinParams&) = default;
};

template <typename T>
struct Range {
    T lo;
    T hi;
};

/// Sampling ranges for sample_params. Defaults are artifact choices tuned to
/// give dust-like fields on 64-512 px images.
struct PerlinRanges {
    Range<double> scale{64.0, 512.0};
    Range<int> octaves{2, 5};
    Range<double> lacunarity{1.8, 2.2};
    Range<double> persistence{0.4, 0.7};

    void validate() const;
};

/// 256-entry permutation, shuffled by Fisher-Yates driven by CounterRng(seed).
std::array<std::uint8_t, 256> permutation_table(std::uint64_t seed);

/// Single-octave classic gradient noise at (x, y) in lattice units, roughly
/// in [-1, 1] and exactly 0 at integer lattice points.
class GradientNoise {
public:
    explicit GradientNoise(std::uint64_t seed);
    double operator()(double x, double y) const noexcept;

private:
    std::array<std::uint8_t, 512> perm_;
};

/// Fractal Perlin field: the octave sum divided by the sum of octave
/// amplitudes, mapped affinely from [-1,1] to [0,1] and clamped.
NoiseField perlin2d(const PerlinParams& params, int width, int height);

/// Draws every PerlinParams field uniformly from its range. The returned
/// params carry rng_seed as their noise seed.
PerlinParams sample_params(std::uint64_t rng_seed, const PerlinRanges& ranges = {});

/// 16-bit friendly view of a noise field for inspection.
Image noise_to_image(const NoiseField& field);

}  // namespace marsdust
