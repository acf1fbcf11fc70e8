#include "marsdust/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "marsdust/error.hpp"

namespace marsdust {
namespace {

void check_dims(int width, int height, int channels) {
    if (width < 1 || height < 1) {
        throw ValidationError(fmt::format("image dimensions must be positive, got {}x{}", width, height));
    }
    if (channels != 1 && channels != 3) {
        throw ValidationError(fmt::format("image must have 1 or 3 channels, got {}", channels));
    }
}

bool in_unit_range(double v) noexcept { return v >= 0.0 && v <= 1.0; }

}  // namespace

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
    check_dims(width, height, channels);
    if (!in_unit_range(fill)) {
        throw ValidationError(fmt::format("fill value {} outside [0,1]", fill));
    }
    samples_.assign(pixel_count() * static_cast<std::size_t>(channels), fill);
}

Image::Image(int width, int height, int channels, std::vector<double> samples)
    : width_(width), height_(height), channels_(channels), samples_(std::move(samples)) {
    check_dims(width, height, channels);
    const std::size_t expected = pixel_count() * static_cast<std::size_t>(channels);
    if (samples_.size() != expected) {
        throw ValidationError(
            fmt::format("sample count {} does not match {}x{}x{}", samples_.size(), width, height, channels));
    }
    const auto bad = std::find_if(samples_.begin(), samples_.end(), [](double v) { return !in_unit_range(v); });
    if (bad != samples_.end()) {
        throw ValidationError(fmt::format("sample {} at index {} outside [0,1]", *bad, bad - samples_.begin()));
    }
}

void Image::set(int x, int y, int c, double value) {
    if (x < 0 || y < 0 || c < 0 || x >= width_ || y >= height_ || c >= channels_) {
        throw BoundsError(fmt::format("sample ({},{},{}) outside {}x{}x{} image", x, y, c, width_, height_, channels_));
    }
    if (!in_unit_range(value)) {
        throw ValidationError(fmt::format("sample value {} outside [0,1]", value));
    }
    samples_[index(x, y, c)] = value;
}

double Image::max_sample() const noexcept { return *std::max_element(samples_.begin(), samples_.end()); }

Image crop_patch(const Image& img, const PatchRegion& r) {
    if (r.width < 1 || r.height < 1 || r.x0 < 0 || r.y0 < 0 || r.x0 + r.width > img.width() ||
        r.y0 + r.height > img.height()) {
        throw BoundsError(fmt::format("region {}x{}+{}+{} outside {}x{} image", r.width, r.height, r.x0, r.y0,
                                      img.width(), img.height()));
    }
    const auto ch = static_cast<std::size_t>(img.channels());
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(r.width) * static_cast<std::size_t>(r.height) * ch);
    for (int y = r.y0; y < r.y0 + r.height; ++y) {
        const auto row = img.pixel(r.x0, y);
        out.insert(out.end(), row.data(), row.data() + static_cast<std::size_t>(r.width) * ch);
    }
    return Image(r.width, r.height, img.channels(), std::move(out));
}

Image augment(const Image& img, int rot90, bool hflip) {
    const int turns = ((rot90 % 4) + 4) % 4;
    const int w = img.width();
    const int h = img.height();
    const int out_w = (turns % 2 == 0) ? w : h;
    const int out_h = (turns % 2 == 0) ? h : w;
    const int ch = img.channels();
    std::vector<double> out(img.sample_count());

    for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
            // Undo the flip, then undo the counter-clockwise rotation.
            const int fx = hflip ? out_w - 1 - ox : ox;
            int sx = fx;
            int sy = oy;
            switch (turns) {
                case 1: sx = w - 1 - oy; sy = fx; break;
                case 2: sx = w - 1 - fx; sy = h - 1 - oy; break;
                case 3: sx = oy; sy = h - 1 - fx; break;
                default: break;
            }
            const auto src = img.pixel(sx, sy);
            std::copy(src.begin(), src.end(),
                      out.begin() + (static_cast<std::ptrdiff_t>(oy) * out_w + ox) * ch);
        }
    }
    return Image(out_w, out_h, ch, std::move(out));
}

}  // namespace marsdust
