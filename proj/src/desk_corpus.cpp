#include "marsdust/desk_corpus.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "marsdust/error.hpp"
#include "marsdust/noise.hpp"
#include "marsdust/png_io.hpp"
#include "marsdust/rng.hpp"

namespace marsdust {

Image make_clean_terrain(int width, int height, std::uint64_t seed) {
    if (width < 8 || height < 8) throw ValidationError("terrain frames must be at least 8x8");
    CounterRng rng(seed);
    const auto w = static_cast<std::size_t>(width);
    const auto h = static_cast<std::size_t>(height);

    const NoiseField relief = perlin2d(PerlinParams{40.0, 5, 2.0, 0.55, rng.next()}, width, height);
    const NoiseField albedo_field = perlin2d(PerlinParams{70.0, 4, 2.0, 0.5, rng.next()}, width, height);
    const NoiseField rocks = perlin2d(PerlinParams{5.0, 3, 2.0, 0.6, rng.next()}, width, height);
    const NoiseField speckle = perlin2d(PerlinParams{3.0, 2, 2.0, 0.5, rng.next()}, width, height);

    std::vector<double> elevation(w * h);
    for (std::size_t i = 0; i < elevation.size(); ++i) elevation[i] = 12.0 * relief.values[i] + 4.0 * rocks.values[i];

    const int craters = 4 + static_cast<int>(rng.below(7));
    for (int k = 0; k < craters; ++k) {
        const double cx = rng.uniform(0.0, width);
        const double cy = rng.uniform(0.0, height);
        const double radius = rng.uniform(4.0, 0.18 * std::min(width, height));
        const double depth = 0.5 * radius;
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                const double r = std::hypot(static_cast<double>(x) - cx, static_cast<double>(y) - cy) / radius;
                double dz = 0.0;
                if (r < 1.0) dz -= depth * (1.0 - r * r);
                dz += 0.25 * depth * std::exp(-((r - 1.0) * (r - 1.0)) / 0.04);
                elevation[y * w + x] += dz;
            }
        }
    }

    const double azimuth = rng.uniform(0.0, 6.283185307179586);
    const double elev = 0.45;
    const double sx = std::cos(azimuth) * std::cos(elev);
    const double sy = std::sin(azimuth) * std::cos(elev);
    const double sz = std::sin(elev);
    const double tint[3] = {0.96, 0.60, 0.36};

    std::vector<double> samples(w * h * 3);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t xl = x > 0 ? x - 1 : x;
            const std::size_t xr = x + 1 < w ? x + 1 : x;
            const std::size_t yu = y > 0 ? y - 1 : y;
            const std::size_t yd = y + 1 < h ? y + 1 : y;
            const double gx = (elevation[y * w + xr] - elevation[y * w + xl]) / static_cast<double>(xr - xl);
            const double gy = (elevation[yd * w + x] - elevation[yu * w + x]) / static_cast<double>(yd - yu);
            const double norm = std::sqrt(gx * gx + gy * gy + 1.0);
            const double shade = std::max(0.0, (-gx * sx - gy * sy + sz) / norm);
            const double albedo = (0.35 + 0.9 * std::pow(albedo_field.values[y * w + x], 1.5)) *
                                  (0.55 + 0.9 * speckle.values[y * w + x]);
            const double v = 0.02 + 1.25 * albedo * shade;
            for (std::size_t c = 0; c < 3; ++c) samples[(y * w + x) * 3 + c] = std::clamp(tint[c] * v, 0.0, 1.0);
        }
    }
    return Image(width, height, 3, std::move(samples));
}

Reflexivity desk_dust_reflexivity() { return Reflexivity{{1.0, 0.78, 0.58}}; }

Image make_realistic_dusty(const Image& clean, std::uint64_t seed) {
    CounterRng rng(seed);
    const PerlinParams params{rng.uniform(96.0, 256.0), 3, 2.0, 0.5, rng.next()};
    const double alpha = rng.uniform(0.7, 1.0);
    const auto t = make_transmission(perlin2d(params, clean.width(), clean.height()), Alpha(alpha));
    return synthesize_dusty(clean, t, estimate_atmospheric_light(clean, desk_dust_reflexivity()));
}

std::vector<std::filesystem::path> write_clean_corpus(const std::filesystem::path& dir, int count, int size,
                                                      std::uint64_t seed) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
    std::vector<std::filesystem::path> paths;
    for (int i = 0; i < count; ++i) {
        const auto path = dir / fmt::format("clean_{:03d}.png", i);
        save_image(make_clean_terrain(size, size, derive_seed(seed, static_cast<std::uint64_t>(i))), path, 8);
        paths.push_back(path);
    }
    return paths;
}

std::vector<std::filesystem::path> write_realistic_dusty_corpus(const std::filesystem::path& dir, int count, int size,
                                                               std::uint64_t seed) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
    std::vector<std::filesystem::path> paths;
    for (int i = 0; i < count; ++i) {
        const auto frame_seed = derive_seed(seed ^ 0xD057ULL, static_cast<std::uint64_t>(i));
        const auto path = dir / fmt::format("dusty_{:03d}.png", i);
        save_image(make_realistic_dusty(make_clean_terrain(size, size, frame_seed), mix64(frame_seed)), path, 8);
        paths.push_back(path);
    }
    return paths;
}

}  // namespace marsdust
