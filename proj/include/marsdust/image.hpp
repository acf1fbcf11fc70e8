#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace marsdust {

/// Rectangular pixel region, used for cropping training patches and dust tiles.
struct PatchRegion {
    int x0 = 0;
    int y0 = 0;
    int width = 0;
    int height = 0;
};

/// Multi-channel raster with samples in [0,1].
///
/// Storage is row-major and channel-interleaved: sample (x, y, c) lives at
/// ((y * width + x) * channels + c). Channel index doubles as the wavelength
/// index for the scattering model. Instances are immutable except through
/// set(), which enforces the sample range.
class Image {
public:
    /// Constant image. Throws ValidationError on bad dimensions or fill value.
    Image(int width, int height, int channels, double fill = 0.0);
    /// Takes ownership of interleaved samples. Throws ValidationError if the
    /// length disagrees with the dimensions or any sample lies outside [0,1].
    Image(int width, int height, int channels, std::vector<double> samples);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }
    std::size_t sample_count() const noexcept { return samples_.size(); }

    double at(int x, int y, int c) const noexcept { return samples_[index(x, y, c)]; }
    void set(int x, int y, int c, double value);

    std::span<const double> samples() const noexcept { return samples_; }
    /// Samples of one pixel, length channels().
    std::span<const double> pixel(int x, int y) const noexcept {
        return {samples_.data() + index(x, y, 0), static_cast<std::size_t>(channels_)};
    }

    /// Largest sample over all pixels and channels.
    double max_sample() const noexcept;

    bool same_shape(const Image& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
                   static_cast<std::size_t>(channels_) +
               static_cast<std::size_t>(c);
    }

    int width_;
    int height_;
    int channels_;
    std::vector<double> samples_;
};

/// Copy of the pixels inside region. Throws BoundsError if region leaves img.
Image crop_patch(const Image& img, const PatchRegion& region);

/// Rotates by rot90 quarter turns counter-clockwise, then mirrors left-right
/// when hflip is set. A pure pixel permutation.
Image augment(const Image& img, int rot90, bool hflip);

}  // namespace marsdust
