#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "marsdust/field.hpp"
#include "marsdust/image.hpp"
#include "marsdust/manifest.hpp"
#include "marsdust/metrics.hpp"
#include "marsdust/noise.hpp"

namespace marsdust {

/// Dust re-weighting factor in (0,1].
class Alpha {
public:
    explicit Alpha(double value);
    double value() const noexcept { return value_; }

private:
    double value_;
};

/// Per-channel dust reflexivity, each entry in (0,1].
struct Reflexivity {
    std::vector<double> values;
};

/// Per-channel atmospheric light, each entry in [0,1].
struct AtmosphericLight {
    std::vector<double> values;
};

/// T(x) = 1 - alpha * M(x).
TransmissionMap make_transmission(const NoiseField& noise, Alpha alpha);

struct ReflexivityEstimate {
    Reflexivity phi;
    std::size_t patches_used = 0;
    std::size_t skipped_pixels = 0;  ///< pixels whose channel maximum is zero
};

/// Double average over patches and their pixels of each channel divided by
/// the pixel's channel maximum. Zero-maximum pixels are left out of their
/// patch's average; a patch with no remaining pixels is left out entirely.
/// Throws EstimationError when the set is empty or contributes nothing, and
/// DimensionError when channel counts differ.
ReflexivityEstimate estimate_reflexivity(std::span<const Image> patches);

/// L(lambda) = phi(lambda) * (largest sample of the clean image).
AtmosphericLight estimate_atmospheric_light(const Image& clean, const Reflexivity& phi);

/// H = C * T + L * (1 - T) per pixel and channel, clamped to [0,1].
Image synthesize_dusty(const Image& clean, const TransmissionMap& t, const AtmosphericLight& light);

/// The top_k tile x tile tiles of the given images ranked by dust index,
/// highest first (ties broken by image then raster order). Images smaller
/// than a tile contribute themselves whole.
std::vector<Image> select_dusty_tiles(std::span<const Image> images, std::size_t top_k, int tile = 32);

struct PairGenerationOptions {
    int maps_per_image = 7;
    std::vector<double> alpha_set{0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::uint64_t seed = 0;
    PerlinRanges ranges{};
    int bit_depth = 16;
    int jobs = 1;
};

/// Seed of the map_index-th dusty variant of the image_index-th clean image.
std::uint64_t pair_seed(std::uint64_t seed, std::size_t image_index, std::size_t map_index);

/// Rebuilds the dusty image a manifest record describes.
Image replay_record(const ManifestRecord& record, const Image& clean);
TransmissionMap replay_transmission(const ManifestRecord& record, int width, int height);

/// For every PNG in clean_dir (sorted by name) writes maps_per_image dusty
/// variants to out_dir and returns one record per variant. Alphas are drawn
/// without replacement from alpha_set within an image (the set is reshuffled
/// when it runs out). Output is identical for any jobs value.
DatasetManifest generate_pairs(const std::filesystem::path& clean_dir, const Reflexivity& phi,
                               const std::filesystem::path& out_dir, const PairGenerationOptions& options = {});

}  // namespace marsdust
