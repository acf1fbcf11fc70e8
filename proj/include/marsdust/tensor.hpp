#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "marsdust/image.hpp"

namespace marsdust::nn {

/// NCHW extents.
struct Shape {
    int n = 1;
    int c = 1;
    int h = 1;
    int w = 1;

    std::size_t numel() const noexcept {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
               static_cast<std::size_t>(w);
    }
    std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }
    std::string str() const;

    friend bool operator==(const Shape&, const Shape&) = default;
};

/// Dense row-major NCHW tensor of doubles.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t numel() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    double& at(int n, int c, int y, int x) noexcept { return data_[offset(n, c, y, x)]; }
    double at(int n, int c, int y, int x) const noexcept { return data_[offset(n, c, y, x)]; }

    /// Pointer to the start of plane (n, c).
    double* plane(int n, int c) noexcept { return data_.data() + offset(n, c, 0, 0); }
    const double* plane(int n, int c) const noexcept { return data_.data() + offset(n, c, 0, 0); }

    void fill(double v);

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::size_t offset(int n, int c, int y, int x) const noexcept {
        return ((static_cast<std::size_t>(n) * static_cast<std::size_t>(shape_.c) + static_cast<std::size_t>(c)) *
                    static_cast<std::size_t>(shape_.h) +
                static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(shape_.w) +
               static_cast<std::size_t>(x);
    }

    Shape shape_{0, 0, 0, 0};
    std::vector<double> data_;
};

/// Stacks equally sized 3-channel images into an (N, 3, H, W) batch.
Tensor images_to_tensor(std::span<const Image> images);
/// Batch element n as an image; values are clamped into [0,1].
Image tensor_to_image(const Tensor& t, int n = 0);

}  // namespace marsdust::nn
