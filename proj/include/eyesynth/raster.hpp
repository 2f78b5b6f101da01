// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace eyesynth {

/// Interleaved row-major image, origin top-left.
template <typename T>
struct Raster {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<T> data;

    Raster() = default;
    Raster(int w, int h, int c, T fill = T{})
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {
        if (w < 0 || h < 0 || c < 1) throw std::invalid_argument("invalid raster dimensions");
    }

    std::size_t index(int x, int y, int c = 0) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    T& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
    const T& at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    bool same_shape(const Raster& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
    bool operator==(const Raster&) const = default;
};

using Image8 = Raster<std::uint8_t>;
using ImageF = Raster<float>;

}  // namespace eyesynth
