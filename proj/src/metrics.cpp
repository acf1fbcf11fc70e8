#include "marsdust/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "marsdust/error.hpp"
#include "marsdust/log.hpp"
#include "marsdust/manifest.hpp"
#include "marsdust/parallel.hpp"
#include "marsdust/png_io.hpp"

namespace marsdust {
namespace {

double luminance(std::span<const double> px) noexcept {
    if (px.size() == 1) return px[0];
    return 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
}

// Neumaier summation over a sorted copy.
double order_free_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    double compensation = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    return sum + compensation;
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) {
        throw DimensionError(fmt::format("{}: image shapes differ ({}x{}x{} vs {}x{}x{})", what, a.width(), a.height(),
                                         a.channels(), b.width(), b.height(), b.channels()));
    }
}

// Separable 1-D Gaussian taps for SSIM.
std::vector<double> gaussian_taps(int size, double sigma) {
    std::vector<double> taps(static_cast<std::size_t>(size));
    const int half = size / 2;
    double total = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - half;
        taps[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        total += taps[static_cast<std::size_t>(i)];
    }
    for (auto& t : taps) t /= total;
    return taps;
}

// Valid-mode separable filtering of a w x h plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int w, int h, const std::vector<double>& taps) {
    const int k = static_cast<int>(taps.size());
    const int ow = w - k + 1;
    const int oh = h - k + 1;
    std::vector<double> rows(static_cast<std::size_t>(ow) * static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < k; ++i) s += taps[static_cast<std::size_t>(i)] * plane[static_cast<std::size_t>(y * w + x + i)];
            rows[static_cast<std::size_t>(y * ow + x)] = s;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(ow) * static_cast<std::size_t>(oh));
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < k; ++i) s += taps[static_cast<std::size_t>(i)] * rows[static_cast<std::size_t>((y + i) * ow + x)];
            out[static_cast<std::size_t>(y * ow + x)] = s;
        }
    }
    return out;
}

nlohmann::json psnr_json(double v) {
    if (std::isinf(v)) return "inf";
    return v;
}

std::string format_optional(const std::optional<double>& v) {
    if (!v) return "-";
    if (std::isinf(*v)) return "inf";
    return fmt::format("{:.4f}", *v);
}

}  // namespace

std::vector<double> dark_channel(const Image& img, int window) {
    if (window < 1 || window % 2 == 0) {
        throw ValidationError(fmt::format("dark channel window must be odd and >= 1, got {}", window));
    }
    const int w = img.width();
    const int h = img.height();
    const int r = window / 2;
    std::vector<double> channel_min(img.pixel_count());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto px = img.pixel(x, y);
            channel_min[static_cast<std::size_t>(y * w + x)] = *std::min_element(px.begin(), px.end());
        }
    }
    // Separable erosion: rows then columns.
    std::vector<double> tmp(channel_min.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double m = 1.0;
            for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
                m = std::min(m, channel_min[static_cast<std::size_t>(y * w + xx)]);
            }
            tmp[static_cast<std::size_t>(y * w + x)] = m;
        }
    }
    std::vector<double> out(channel_min.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double m = 1.0;
            for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy) {
                m = std::min(m, tmp[static_cast<std::size_t>(yy * w + x)]);
            }
            out[static_cast<std::size_t>(y * w + x)] = m;
        }
    }
    return out;
}

MeanStd mean_std(std::span<const double> values) {
    if (values.empty()) throw ValidationError("mean of an empty set");
    const auto n = static_cast<double>(values.size());
    const double mean = order_free_sum({values.begin(), values.end()}) / n;
    std::vector<double> sq(values.size());
    std::transform(values.begin(), values.end(), sq.begin(), [mean](double v) { return (v - mean) * (v - mean); });
    return {mean, std::sqrt(order_free_sum(std::move(sq)) / n)};
}

double dust_index(const Image& img, const DustIndexConfig& cfg) {
    if (cfg.tile < 2) throw ValidationError(fmt::format("dust index tile must be >= 2, got {}", cfg.tile));
    if (img.width() < cfg.tile || img.height() < cfg.tile) {
        throw ValidationError(fmt::format("image {}x{} is smaller than the {} px dust index tile", img.width(),
                                          img.height(), cfg.tile));
    }
    const int tiles_x = img.width() / cfg.tile;
    const int tiles_y = img.height() / cfg.tile;
    std::vector<double> contrasts;
    contrasts.reserve(static_cast<std::size_t>(tiles_x) * static_cast<std::size_t>(tiles_y));
    std::vector<double> lum(static_cast<std::size_t>(cfg.tile) * static_cast<std::size_t>(cfg.tile));
    for (int ty = 0; ty < tiles_y; ++ty) {
        for (int tx = 0; tx < tiles_x; ++tx) {
            std::size_t i = 0;
            for (int y = ty * cfg.tile; y < (ty + 1) * cfg.tile; ++y) {
                for (int x = tx * cfg.tile; x < (tx + 1) * cfg.tile; ++x) lum[i++] = luminance(img.pixel(x, y));
            }
            contrasts.push_back(mean_std(lum).std);
        }
    }
    const double mean_contrast = mean_std(contrasts).mean;
    const double mean_dark = mean_std(dark_channel(img, cfg.dark_window)).mean;
    return 0.5 * (1.0 - std::min(1.0, mean_contrast / cfg.contrast_norm)) + 0.5 * mean_dark;
}

double dust_index(const Image& img, int tile) {
    DustIndexConfig cfg;
    cfg.tile = tile;
    return dust_index(img, cfg);
}

double psnr(const Image& a, const Image& b) {
    require_same_shape(a, b, "psnr");
    std::vector<double> sq(a.sample_count());
    const auto sa = a.samples();
    const auto sb = b.samples();
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = (sa[i] - sb[i]) * (sa[i] - sb[i]);
    const double mse = mean_std(sq).mean;
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
    require_same_shape(a, b, "ssim");
    constexpr int kWindow = 11;
    constexpr double kSigma = 1.5;
    constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
    constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
    if (a.width() < kWindow || a.height() < kWindow) {
        throw ValidationError(fmt::format("ssim needs images of at least {}x{} px", kWindow, kWindow));
    }
    const int w = a.width();
    const int h = a.height();
    const auto taps = gaussian_taps(kWindow, kSigma);
    double total = 0.0;
    for (int c = 0; c < a.channels(); ++c) {
        std::vector<double> pa(a.pixel_count()), pb(a.pixel_count()), paa(a.pixel_count()), pbb(a.pixel_count()),
            pab(a.pixel_count());
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const auto i = static_cast<std::size_t>(y * w + x);
                const double va = a.at(x, y, c);
                const double vb = b.at(x, y, c);
                pa[i] = va;
                pb[i] = vb;
                paa[i] = va * va;
                pbb[i] = vb * vb;
                pab[i] = va * vb;
            }
        }
        const auto mu_a = filter_valid(pa, w, h, taps);
        const auto mu_b = filter_valid(pb, w, h, taps);
        const auto e_aa = filter_valid(paa, w, h, taps);
        const auto e_bb = filter_valid(pbb, w, h, taps);
        const auto e_ab = filter_valid(pab, w, h, taps);
        std::vector<double> map(mu_a.size());
        for (std::size_t i = 0; i < map.size(); ++i) {
            const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
            const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
            const double cov = e_ab[i] - mu_a[i] * mu_b[i];
            map[i] = ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
                     ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2));
        }
        total += mean_std(map).mean;
    }
    return total / a.channels();
}

const SetSummary* CorpusReport::find(const std::string& label) const {
    for (const auto& s : sets) {
        if (s.label == label) return &s;
    }
    return nullptr;
}

std::string CorpusReport::to_json() const {
    nlohmann::json j;
    j["metric"] = "dust_index (FADE-surrogate)";
    j["sets"] = nlohmann::json::array();
    for (const auto& s : sets) {
        nlohmann::json e{{"label", s.label}, {"n", s.n}, {"dust_index_mean", s.dust_index_mean},
                         {"dust_index_std", s.dust_index_std}};
        if (s.psnr_mean) e["psnr_mean"] = psnr_json(*s.psnr_mean);
        if (s.ssim_mean) e["ssim_mean"] = *s.ssim_mean;
        j["sets"].push_back(std::move(e));
    }
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json e{{"set", r.set}, {"path", r.path}, {"dust_index", r.dust_index}};
        if (r.psnr) e["psnr"] = psnr_json(*r.psnr);
        if (r.ssim) e["ssim"] = *r.ssim;
        j["rows"].push_back(std::move(e));
    }
    j["skipped"] = skipped;
    return j.dump(2);
}

std::string CorpusReport::to_table() const {
    std::ostringstream out;
    out << fmt::format("{:<12} {:>6} {:>28} {:>10} {:>10} {:>8}\n", "set", "n", "dust_index (FADE-surrogate)", "std",
                       "psnr", "ssim");
    for (const auto& s : sets) {
        out << fmt::format("{:<12} {:>6} {:>28.4f} {:>10.4f} {:>10} {:>8}\n", s.label, s.n, s.dust_index_mean,
                           s.dust_index_std, format_optional(s.psnr_mean), format_optional(s.ssim_mean));
    }
    if (skipped > 0) out << fmt::format("skipped {} unreadable image(s)\n", skipped);
    return out.str();
}

CorpusReport corpus_report(std::span<const ImageSet> sets, const DatasetManifest* pairs, const DustIndexConfig& cfg,
                           int jobs) {
    CorpusReport report;
    for (const auto& set : sets) {
        if (set.images.empty()) throw ValidationError(fmt::format("image set '{}' is empty", set.label));

        std::vector<std::optional<ReportRow>> rows(set.images.size());
        parallel_for(set.images.size(), jobs, [&](std::size_t i) {
            const auto& path = set.images[i];
            std::optional<Image> img;
            try {
                img = load_image(path);
            } catch (const IoError& e) {
                log::warn(fmt::format("skipping {}: {}", path.string(), e.what()));
                return;
            }
            ReportRow row{set.label, path.string(), dust_index(*img, cfg), std::nullopt, std::nullopt};
            if (pairs != nullptr) {
                if (const auto* rec = pairs->find_by_dusty_name(path.filename().string())) {
                    try {
                        const Image clean = load_image(rec->clean);
                        row.psnr = psnr(*img, clean);
                        row.ssim = ssim(*img, clean);
                    } catch (const Error& e) {
                        log::warn(fmt::format("no reference metrics for {}: {}", path.string(), e.what()));
                    }
                }
            }
            rows[i] = std::move(row);
        });

        SetSummary summary;
        summary.label = set.label;
        std::vector<double> indices, psnrs, ssims;
        bool psnr_infinite = false;
        for (auto& row : rows) {
            if (!row) {
                ++report.skipped;
                continue;
            }
            indices.push_back(row->dust_index);
            if (row->psnr) {
                if (std::isinf(*row->psnr)) {
                    psnr_infinite = true;
                } else {
                    psnrs.push_back(*row->psnr);
                }
            }
            if (row->ssim) ssims.push_back(*row->ssim);
            report.rows.push_back(std::move(*row));
        }
        if (indices.empty()) {
            throw ValidationError(fmt::format("image set '{}' has no readable images", set.label));
        }
        const auto stats = mean_std(indices);
        summary.n = indices.size();
        summary.dust_index_mean = stats.mean;
        summary.dust_index_std = stats.std;
        if (psnr_infinite) {
            summary.psnr_mean = std::numeric_limits<double>::infinity();
        } else if (!psnrs.empty()) {
            summary.psnr_mean = mean_std(psnrs).mean;
        }
        if (!ssims.empty()) summary.ssim_mean = mean_std(ssims).mean;
        report.sets.push_back(std::move(summary));
    }
    return report;
}

}  // namespace marsdust
