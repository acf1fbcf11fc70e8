#include "marsdust/tensor.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "marsdust/error.hpp"

namespace marsdust::nn {

std::string Shape::str() const { return fmt::format("({}, {}, {}, {})", n, c, h, w); }

Tensor::Tensor(Shape shape, double fill) : shape_(shape), data_(shape.numel(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.numel()) {
        throw DimensionError(fmt::format("tensor data length {} does not match shape {}", data_.size(), shape_.str()));
    }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor images_to_tensor(std::span<const Image> images) {
    if (images.empty()) throw ValidationError("cannot batch zero images");
    const Image& first = images.front();
    Tensor t(Shape{static_cast<int>(images.size()), first.channels(), first.height(), first.width()});
    for (std::size_t n = 0; n < images.size(); ++n) {
        const Image& img = images[n];
        if (!img.same_shape(first)) throw DimensionError("images in a batch must share one shape");
        for (int c = 0; c < img.channels(); ++c) {
            double* dst = t.plane(static_cast<int>(n), c);
            for (int y = 0; y < img.height(); ++y) {
                for (int x = 0; x < img.width(); ++x) *dst++ = img.at(x, y, c);
            }
        }
    }
    return t;
}

Image tensor_to_image(const Tensor& t, int n) {
    const Shape& s = t.shape();
    if (n < 0 || n >= s.n) throw BoundsError(fmt::format("batch index {} outside tensor {}", n, s.str()));
    std::vector<double> samples(static_cast<std::size_t>(s.c) * s.plane());
    for (int c = 0; c < s.c; ++c) {
        const double* src = t.plane(n, c);
        for (std::size_t p = 0; p < s.plane(); ++p) {
            samples[p * static_cast<std::size_t>(s.c) + static_cast<std::size_t>(c)] = std::clamp(src[p], 0.0, 1.0);
        }
    }
    return Image(s.w, s.h, s.c, std::move(samples));
}

}  // namespace marsdust::nn
