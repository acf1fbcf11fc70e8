#include "marsdust/restore.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "marsdust/error.hpp"
#include "marsdust/metrics.hpp"
#include "marsdust/tensor.hpp"

namespace marsdust {
namespace {

void check_floor(double t_floor) {
    if (!(t_floor > 0.0 && t_floor < 1.0)) {
        throw ValidationError(fmt::format("transmission floor must be in (0,1), got {}", t_floor));
    }
}

Image restore_learned(const Image& hazy, const nn::TinyNet& net) {
    const int w = hazy.width();
    const int h = hazy.height();
    const int pad_w = (4 - w % 4) % 4;
    const int pad_h = (4 - h % 4) % 4;
    const int pw = w + pad_w;
    const int ph = h + pad_h;

    std::vector<double> padded(static_cast<std::size_t>(pw) * static_cast<std::size_t>(ph) * 3);
    for (int y = 0; y < ph; ++y) {
        for (int x = 0; x < pw; ++x) {
            const auto px = hazy.pixel(std::min(x, w - 1), std::min(y, h - 1));
            for (int c = 0; c < 3; ++c) {
                padded[(static_cast<std::size_t>(y) * static_cast<std::size_t>(pw) + static_cast<std::size_t>(x)) * 3 +
                       static_cast<std::size_t>(c)] = px[hazy.channels() == 3 ? static_cast<std::size_t>(c) : 0];
            }
        }
    }
    const Image input(pw, ph, 3, std::move(padded));
    const Image output = nn::tensor_to_image(net.infer(nn::images_to_tensor(std::span(&input, 1))));
    const Image cropped = crop_patch(output, PatchRegion{0, 0, w, h});
    if (hazy.channels() == 3) return cropped;

    std::vector<double> gray(hazy.pixel_count());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto px = cropped.pixel(x, y);
            gray[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] =
                std::clamp((px[0] + px[1] + px[2]) / 3.0, 0.0, 1.0);
        }
    }
    return Image(w, h, 1, std::move(gray));
}

}  // namespace

Image invert_degradation(const Image& hazy, const TransmissionMap& t, const AtmosphericLight& light, double t_floor) {
    check_floor(t_floor);
    if (t.width != hazy.width() || t.height != hazy.height()) {
        throw DimensionError(fmt::format("transmission {}x{} does not match image {}x{}", t.width, t.height,
                                         hazy.width(), hazy.height()));
    }
    const auto nch = static_cast<std::size_t>(hazy.channels());
    if (light.values.size() != nch) {
        throw DimensionError(fmt::format("atmospheric light has {} channels, image has {}", light.values.size(), nch));
    }
    const auto src = hazy.samples();
    std::vector<double> out(src.size());
    for (std::size_t p = 0; p < t.values.size(); ++p) {
        const double tp = std::max(t.values[p], t_floor);
        for (std::size_t c = 0; c < nch; ++c) {
            const double v = (src[p * nch + c] - light.values[c] * (1.0 - tp)) / tp;
            out[p * nch + c] = std::clamp(v, 0.0, 1.0);
        }
    }
    return Image(hazy.width(), hazy.height(), hazy.channels(), std::move(out));
}

TransmissionMap estimate_transmission(const Image& hazy, const AtmosphericLight& light,
                                      const TransmissionEstimateOptions& options) {
    check_floor(options.t_floor);
    if (options.window < 1 || options.window % 2 == 0) {
        throw ValidationError(fmt::format("window must be odd and >= 1, got {}", options.window));
    }
    if (!(options.omega > 0.0 && options.omega <= 1.0)) {
        throw ValidationError(fmt::format("omega must be in (0,1], got {}", options.omega));
    }
    const auto nch = static_cast<std::size_t>(hazy.channels());
    if (light.values.size() != nch) {
        throw DimensionError(fmt::format("atmospheric light has {} channels, image has {}", light.values.size(), nch));
    }
    for (double l : light.values) {
        if (!(l > 0.0)) throw EstimationError("atmospheric light must be positive in every channel");
    }

    // Normalized ratios may exceed 1, so they go through a plain buffer rather
    // than an Image; the erosion then mirrors dark_channel().
    const int w = hazy.width();
    const int h = hazy.height();
    const int r = options.window / 2;
    std::vector<double> ratio(hazy.pixel_count());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto px = hazy.pixel(x, y);
            double m = px[0] / light.values[0];
            for (std::size_t c = 1; c < nch; ++c) m = std::min(m, px[c] / light.values[c]);
            ratio[static_cast<std::size_t>(y * w + x)] = m;
        }
    }
    std::vector<double> rows(ratio.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double m = ratio[static_cast<std::size_t>(y * w + x)];
            for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
                m = std::min(m, ratio[static_cast<std::size_t>(y * w + xx)]);
            }
            rows[static_cast<std::size_t>(y * w + x)] = m;
        }
    }
    TransmissionMap t;
    t.width = w;
    t.height = h;
    t.values.resize(ratio.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double m = rows[static_cast<std::size_t>(y * w + x)];
            for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy) {
                m = std::min(m, rows[static_cast<std::size_t>(yy * w + x)]);
            }
            t.values[static_cast<std::size_t>(y * w + x)] = std::clamp(1.0 - options.omega * m, options.t_floor, 1.0);
        }
    }
    return t;
}

AtmosphericLight estimate_light_from_image(const Image& hazy, std::size_t top_k) {
    const auto tiles = select_dusty_tiles(std::span(&hazy, 1), top_k);
    const auto phi = estimate_reflexivity(tiles).phi;
    AtmosphericLight light;
    const double peak = hazy.max_sample();
    for (double v : phi.values) light.values.push_back(v * peak);
    return light;
}

KnownParameters KnownParameters::from_manifest(const DatasetManifest& manifest, const std::filesystem::path& dusty_path,
                                               int width, int height) {
    const auto* record = manifest.find_by_dusty_name(dusty_path.filename().string());
    if (record == nullptr) {
        throw LookupError(fmt::format("no manifest record for '{}'", dusty_path.filename().string()));
    }
    return KnownParameters{replay_transmission(*record, width, height), AtmosphericLight{record->light},
                           kDefaultTransmissionFloor};
}

LearnedModel LearnedModel::from_file(const std::filesystem::path& weights) {
    return LearnedModel{std::make_shared<const nn::TinyNet>(nn::TinyNet::from_weights(nn::load_weights(weights)))};
}

Image remove_dust(const Image& hazy, const RestoreMethod& method) {
    return std::visit(
        [&](const auto& m) -> Image {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, KnownParameters>) {
                return invert_degradation(hazy, m.transmission, m.light, m.t_floor);
            } else if constexpr (std::is_same_v<M, EstimatedParameters>) {
                const auto light = estimate_light_from_image(hazy, m.light_tiles);
                const auto t = estimate_transmission(hazy, light, m.options);
                return invert_degradation(hazy, t, light, m.options.t_floor);
            } else {
                if (!m.net) throw ValidationError("learned restoration needs a loaded model");
                return restore_learned(hazy, *m.net);
            }
        },
        method);
}

}  // namespace marsdust
