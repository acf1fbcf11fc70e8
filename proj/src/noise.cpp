#include "marsdust/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "marsdust/error.hpp"
#include "marsdust/rng.hpp"

namespace marsdust {
namespace {

double fade(double t) noexcept { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double lerp(double a, double b, double t) noexcept { return a + t * (b - a); }

// Eight gradient directions: axes and diagonals.
double grad(std::uint8_t hash, double x, double y) noexcept {
    switch (hash & 7) {
        case 0: return x + y;
        case 1: return -x + y;
        case 2: return x - y;
        case 3: return -x - y;
        case 4: return x;
        case 5: return -x;
        case 6: return y;
        default: return -y;
    }
}

}  // namespace

void PerlinParams::validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw ValidationError(fmt::format("perlin scale must be > 0, got {}", scale));
    }
    if (octaves < 1) {
        throw ValidationError(fmt::format("perlin octaves must be >= 1, got {}", octaves));
    }
    if (!(lacunarity > 1.0) || !std::isfinite(lacunarity)) {
        throw ValidationError(fmt::format("perlin lacunarity must be > 1, got {}", lacunarity));
    }
    if (!(persistence > 0.0 && persistence <= 1.0)) {
        throw ValidationError(fmt::format("perlin persistence must be in (0,1], got {}", persistence));
    }
}

void PerlinRanges::validate() const {
    auto check = [](const char* name, auto range) {
        if (range.lo > range.hi) {
            throw ValidationError(fmt::format("{} range is inverted: [{}, {}]", name, range.lo, range.hi));
        }
    };
    check("scale", scale);
    check("octaves", octaves);
    check("lacunarity", lacunarity);
    check("persistence", persistence);
    // Both ends must also be valid parameter values.
    PerlinParams{scale.lo, octaves.lo, lacunarity.lo, persistence.lo, 0}.validate();
    PerlinParams{scale.hi, octaves.hi, lacunarity.hi, persistence.hi, 0}.validate();
}

std::array<std::uint8_t, 256> permutation_table(std::uint64_t seed) {
    std::array<std::uint8_t, 256> p{};
    std::iota(p.begin(), p.end(), std::uint8_t{0});
    CounterRng rng(seed);
    for (std::size_t i = p.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i + 1));
        std::swap(p[i], p[j]);
    }
    return p;
}

GradientNoise::GradientNoise(std::uint64_t seed) {
    const auto p = permutation_table(seed);
    std::copy(p.begin(), p.end(), perm_.begin());
    std::copy(p.begin(), p.end(), perm_.begin() + 256);
}

double GradientNoise::operator()(double x, double y) const noexcept {
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const int xi = static_cast<int>(static_cast<long long>(fx) & 255);
    const int yi = static_cast<int>(static_cast<long long>(fy) & 255);
    const double dx = x - fx;
    const double dy = y - fy;
    const double u = fade(dx);
    const double v = fade(dy);

    const int a = perm_[xi] + yi;
    const int b = perm_[xi + 1] + yi;
    const double n00 = grad(perm_[a], dx, dy);
    const double n10 = grad(perm_[b], dx - 1.0, dy);
    const double n01 = grad(perm_[a + 1], dx, dy - 1.0);
    const double n11 = grad(perm_[b + 1], dx - 1.0, dy - 1.0);
    return lerp(lerp(n00, n10, u), lerp(n01, n11, u), v);
}

NoiseField perlin2d(const PerlinParams& params, int width, int height) {
    params.validate();
    if (width < 1 || height < 1) {
        throw ValidationError(fmt::format("noise field dimensions must be positive, got {}x{}", width, height));
    }

    std::vector<GradientNoise> octave_noise;
    std::vector<double> frequency;
    std::vector<double> amplitude;
    double amplitude_sum = 0.0;
    for (int o = 0; o < params.octaves; ++o) {
        octave_noise.emplace_back(derive_seed(params.seed, static_cast<std::uint64_t>(o)));
        frequency.push_back(std::pow(params.lacunarity, o) / params.scale);
        amplitude.push_back(std::pow(params.persistence, o));
        amplitude_sum += amplitude.back();
    }

    NoiseField field;
    field.width = width;
    field.height = height;
    field.values.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double sum = 0.0;
            for (std::size_t o = 0; o < octave_noise.size(); ++o) {
                sum += amplitude[o] * octave_noise[o](x * frequency[o], y * frequency[o]);
            }
            const double v = 0.5 * (sum / amplitude_sum + 1.0);
            field.values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] =
                std::clamp(v, 0.0, 1.0);
        }
    }
    return field;
}

PerlinParams sample_params(std::uint64_t rng_seed, const PerlinRanges& ranges) {
    ranges.validate();
    CounterRng rng(rng_seed);
    PerlinParams p;
    p.scale = rng.uniform(ranges.scale.lo, ranges.scale.hi);
    const auto octave_span = static_cast<std::uint64_t>(ranges.octaves.hi - ranges.octaves.lo) + 1;
    p.octaves = ranges.octaves.lo + static_cast<int>(rng.below(octave_span));
    p.lacunarity = rng.uniform(ranges.lacunarity.lo, ranges.lacunarity.hi);
    p.persistence = rng.uniform(ranges.persistence.lo, ranges.persistence.hi);
    p.seed = rng_seed;
    return p;
}

Image noise_to_image(const NoiseField& field) {
    return Image(field.width, field.height, 1, field.values);
}

}  // namespace marsdust
