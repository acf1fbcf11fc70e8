#include "marsdust/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "marsdust/error.hpp"
#include "marsdust/log.hpp"
#include "marsdust/parallel.hpp"
#include "marsdust/png_io.hpp"
#include "marsdust/rng.hpp"

namespace marsdust {

Alpha::Alpha(double value) : value_(value) {
    if (!(value > 0.0 && value <= 1.0)) {
        throw ValidationError(fmt::format("alpha must be in (0,1], got {}", value));
    }
}

TransmissionMap make_transmission(const NoiseField& noise, Alpha alpha) {
    TransmissionMap t;
    t.width = noise.width;
    t.height = noise.height;
    t.values.resize(noise.values.size());
    std::transform(noise.values.begin(), noise.values.end(), t.values.begin(),
                   [a = alpha.value()](double m) { return 1.0 - a * m; });
    return t;
}

ReflexivityEstimate estimate_reflexivity(std::span<const Image> patches) {
    if (patches.empty()) throw EstimationError("reflexivity needs at least one dusty patch");
    const int channels = patches.front().channels();
    const auto nch = static_cast<std::size_t>(channels);

    ReflexivityEstimate est;
    std::vector<double> outer(nch, 0.0);
    for (const auto& patch : patches) {
        if (patch.channels() != channels) {
            throw DimensionError(
                fmt::format("dusty patches mix {} and {} channels", channels, patch.channels()));
        }
        std::vector<double> inner(nch, 0.0);
        std::size_t counted = 0;
        for (int y = 0; y < patch.height(); ++y) {
            for (int x = 0; x < patch.width(); ++x) {
                const auto px = patch.pixel(x, y);
                const double peak = *std::max_element(px.begin(), px.end());
                if (peak <= 0.0) {
                    ++est.skipped_pixels;
                    continue;
                }
                for (std::size_t c = 0; c < nch; ++c) inner[c] += px[c] / peak;
                ++counted;
            }
        }
        if (counted == 0) continue;
        for (std::size_t c = 0; c < nch; ++c) outer[c] += inner[c] / static_cast<double>(counted);
        ++est.patches_used;
    }
    if (est.patches_used == 0) throw EstimationError("every dusty patch is completely black");
    if (est.skipped_pixels > 0) {
        log::warn(fmt::format("reflexivity: skipped {} zero-valued pixel(s)", est.skipped_pixels));
    }
    est.phi.values.resize(nch);
    for (std::size_t c = 0; c < nch; ++c) est.phi.values[c] = outer[c] / static_cast<double>(est.patches_used);
    return est;
}

AtmosphericLight estimate_atmospheric_light(const Image& clean, const Reflexivity& phi) {
    if (phi.values.size() != static_cast<std::size_t>(clean.channels())) {
        throw DimensionError(fmt::format("reflexivity has {} channels, image has {}", phi.values.size(),
                                         clean.channels()));
    }
    for (double v : phi.values) {
        if (!(v > 0.0 && v <= 1.0)) throw ValidationError(fmt::format("reflexivity {} outside (0,1]", v));
    }
    const double sun = clean.max_sample();
    AtmosphericLight light;
    light.values.reserve(phi.values.size());
    for (double v : phi.values) light.values.push_back(v * sun);
    return light;
}

Image synthesize_dusty(const Image& clean, const TransmissionMap& t, const AtmosphericLight& light) {
    if (t.width != clean.width() || t.height != clean.height()) {
        throw DimensionError(fmt::format("transmission {}x{} does not match image {}x{}", t.width, t.height,
                                         clean.width(), clean.height()));
    }
    const auto nch = static_cast<std::size_t>(clean.channels());
    if (light.values.size() != nch) {
        throw DimensionError(fmt::format("atmospheric light has {} channels, image has {}", light.values.size(), nch));
    }
    const auto src = clean.samples();
    std::vector<double> out(src.size());
    for (std::size_t p = 0; p < t.values.size(); ++p) {
        const double tp = t.values[p];
        for (std::size_t c = 0; c < nch; ++c) {
            const double h = src[p * nch + c] * tp + light.values[c] * (1.0 - tp);
            out[p * nch + c] = std::clamp(h, 0.0, 1.0);
        }
    }
    return Image(clean.width(), clean.height(), clean.channels(), std::move(out));
}

std::vector<Image> select_dusty_tiles(std::span<const Image> images, std::size_t top_k, int tile) {
    struct Candidate {
        double score;
        std::size_t image;
        PatchRegion region;
    };
    std::vector<Candidate> candidates;
    DustIndexConfig cfg;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const Image& img = images[i];
        if (img.width() < tile || img.height() < tile) {
            const PatchRegion whole{0, 0, img.width(), img.height()};
            const double score = std::min(img.width(), img.height()) >= cfg.tile ? dust_index(img, cfg) : 1.0;
            candidates.push_back({score, i, whole});
            continue;
        }
        for (int y = 0; y + tile <= img.height(); y += tile) {
            for (int x = 0; x + tile <= img.width(); x += tile) {
                const PatchRegion r{x, y, tile, tile};
                candidates.push_back({dust_index(crop_patch(img, r), cfg), i, r});
            }
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
    std::vector<Image> tiles;
    for (std::size_t k = 0; k < std::min(top_k, candidates.size()); ++k) {
        tiles.push_back(crop_patch(images[candidates[k].image], candidates[k].region));
    }
    return tiles;
}

std::uint64_t pair_seed(std::uint64_t seed, std::size_t image_index, std::size_t map_index) {
    return derive_seed(derive_seed(seed, image_index), map_index);
}

TransmissionMap replay_transmission(const ManifestRecord& record, int width, int height) {
    return make_transmission(perlin2d(record.perlin, width, height), Alpha(record.alpha));
}

Image replay_record(const ManifestRecord& record, const Image& clean) {
    const auto t = replay_transmission(record, clean.width(), clean.height());
    return synthesize_dusty(clean, t, AtmosphericLight{record.light});
}

DatasetManifest generate_pairs(const std::filesystem::path& clean_dir, const Reflexivity& phi,
                               const std::filesystem::path& out_dir, const PairGenerationOptions& options) {
    if (options.maps_per_image < 1) {
        throw ValidationError(fmt::format("maps per image must be >= 1, got {}", options.maps_per_image));
    }
    if (options.alpha_set.empty()) throw ValidationError("alpha set is empty");
    for (double a : options.alpha_set) Alpha{a};
    options.ranges.validate();

    const auto clean_files = list_png_files(clean_dir);
    if (clean_files.empty()) {
        throw ValidationError(fmt::format("no PNG images in '{}'", clean_dir.string()));
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) {
        throw IoError(fmt::format("cannot create output directory '{}'", out_dir.string()));
    }

    const auto maps = static_cast<std::size_t>(options.maps_per_image);
    std::vector<ManifestRecord> records(clean_files.size() * maps);
    parallel_for(clean_files.size(), options.jobs, [&](std::size_t i) {
        const Image clean = load_image(clean_files[i]);
        const auto light = estimate_atmospheric_light(clean, phi);

        CounterRng rng(derive_seed(options.seed, i));
        std::vector<double> alphas;
        for (std::size_t k = 0; k < maps; ++k) {
            if (k % options.alpha_set.size() == 0) {
                alphas = options.alpha_set;
                for (std::size_t j = alphas.size() - 1; j > 0; --j) std::swap(alphas[j], alphas[rng.below(j + 1)]);
            }
            const double alpha = alphas[k % alphas.size()];

            ManifestRecord rec;
            rec.clean = clean_files[i].string();
            rec.dusty = (out_dir / fmt::format("{}_d{}.png", clean_files[i].stem().string(), k)).string();
            rec.perlin = sample_params(pair_seed(options.seed, i, k), options.ranges);
            rec.alpha = alpha;
            rec.light = light.values;

            save_image(replay_record(rec, clean), rec.dusty, options.bit_depth);
            records[i * maps + k] = std::move(rec);
        }
        log::debug(fmt::format("synthesized {} dusty variants of {}", maps, clean_files[i].string()));
    });
    return DatasetManifest{std::move(records)};
}

}  // namespace marsdust
