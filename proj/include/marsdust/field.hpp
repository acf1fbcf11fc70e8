#pragma once

#include <cstddef>
#include <vector>

namespace marsdust {

/// Single-channel row-major raster of reals.
struct ScalarField {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    double at(int x, int y) const noexcept {
        return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
    }
    std::size_t size() const noexcept { return values.size(); }

    friend bool operator==(const ScalarField&, const ScalarField&) = default;
};

/// Perlin noise realization M(x) with values in [0,1].
struct NoiseField : ScalarField {};

/// Dust transmission ratio T(x) in [0,1], shared by all channels.
struct TransmissionMap : ScalarField {};

}  // namespace marsdust
