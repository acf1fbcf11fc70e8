#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "marsdust/image.hpp"

namespace marsdust {

struct DatasetManifest;

/// Tunables for the dust index. The contrast normalizer saturates the contrast
/// term on typical clean tiles.
struct DustIndexConfig {
    int tile = 8;
    int dark_window = 7;
    double contrast_norm = 0.2;
};

/// No-reference dust-density score in [0,1], higher meaning more dust:
///   0.5 * (1 - min(1, mean_tile_contrast / contrast_norm)) + 0.5 * mean_dark_channel
/// Tile contrast is the population standard deviation of Rec.601 luminance in
/// each non-overlapping tile; the dark channel is the per-pixel channel
/// minimum eroded over a dark_window x dark_window neighbourhood. Both means
/// are order-independent, so the score is exactly invariant under 90 degree
/// rotations and flips when the tile size divides the image.
double dust_index(const Image& img, const DustIndexConfig& cfg = {});
double dust_index(const Image& img, int tile);

/// Per-pixel channel minimum followed by a square min filter of odd size
/// window, clipped at the borders. Row-major, one value per pixel.
std::vector<double> dark_channel(const Image& img, int window);

/// Mean and population standard deviation, computed over sorted values with
/// compensated summation so the result does not depend on input order.
struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};
MeanStd mean_std(std::span<const double> values);

/// PSNR in dB with peak 1. Identical images give +infinity.
double psnr(const Image& a, const Image& b);

/// Mean SSIM over channels; 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, statistics over the valid window positions only.
double ssim(const Image& a, const Image& b);

struct ReportRow {
    std::string set;
    std::string path;
    double dust_index = 0.0;
    std::optional<double> psnr;
    std::optional<double> ssim;
};

struct SetSummary {
    std::string label;
    std::size_t n = 0;
    double dust_index_mean = 0.0;
    double dust_index_std = 0.0;
    std::optional<double> psnr_mean;
    std::optional<double> ssim_mean;
};

struct CorpusReport {
    std::vector<SetSummary> sets;
    std::vector<ReportRow> rows;
    std::size_t skipped = 0;

    const SetSummary* find(const std::string& label) const;
    std::string to_json() const;
    std::string to_table() const;
};

struct ImageSet {
    std::string label;
    std::vector<std::filesystem::path> images;
};

/// Scores every image of every set. When a manifest is given, an image whose
/// file name matches a record's dusty file name is paired with that record's
/// clean image for PSNR/SSIM. Unreadable images are skipped and counted.
/// Throws ValidationError on an empty set or a set whose images all fail.
CorpusReport corpus_report(std::span<const ImageSet> sets, const DatasetManifest* pairs = nullptr,
                           const DustIndexConfig& cfg = {}, int jobs = 1);

}  // namespace marsdust
