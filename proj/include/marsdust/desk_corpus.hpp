#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "marsdust/degrade.hpp"
#include "marsdust/image.hpp"

namespace marsdust {

/// Procedural stand-in for clean orbital frames: fractal relief with impact
/// craters, hill-shaded under a low sun and tinted with a red regolith albedo.
/// Deterministic in (width, height, seed).
Image make_clean_terrain(int width, int height, std::uint64_t seed);

/// Reddish dust reflectance used to fake "realistic" dusty frames for the
/// desk pipeline.
Reflexivity desk_dust_reflexivity();

/// A heavily dusted version of a terrain frame: transmission from a
/// low-frequency field with alpha in [0.7, 1.0] and the desk reflexivity.
Image make_realistic_dusty(const Image& clean, std::uint64_t seed);

/// Writes count clean frames named clean_NNN.png (8 bit) into dir and
/// returns their paths.
std::vector<std::filesystem::path> write_clean_corpus(const std::filesystem::path& dir, int count, int size,
                                                      std::uint64_t seed);

/// Writes count heavily dusted frames named dusty_NNN.png (8 bit), built from
/// terrain unrelated to the clean corpus of the same seed.
std::vector<std::filesystem::path> write_realistic_dusty_corpus(const std::filesystem::path& dir, int count, int size,
                                                               std::uint64_t seed);

}  // namespace marsdust
