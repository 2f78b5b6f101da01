// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "eyesynth/raster.hpp"

namespace eyesynth {

enum class SemanticClass : std::uint8_t {
    BackgroundSkin = 0,
    Sclera = 1,
    Iris = 2,
    Pupil = 3,
};

inline constexpr int kClassCount = 4;

const char* class_name(SemanticClass c);

struct Rgb8 {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb8&) const = default;
};

/// Visualization palette indexed by class code: background black, sclera
/// blue, iris green, pupil red.
inline constexpr std::array<Rgb8, kClassCount> kMaskPalette = {
    Rgb8{0, 0, 0}, Rgb8{0, 0, 255}, Rgb8{0, 255, 0}, Rgb8{255, 0, 0}};

std::optional<SemanticClass> class_from_palette(Rgb8 color);

/// Per-pixel class codes. Stored as a one-channel raster holding values 0..3.
struct SegMask {
    Raster<std::uint8_t> labels;

    SegMask() = default;
    SegMask(int w, int h, SemanticClass fill = SemanticClass::BackgroundSkin)
        : labels(w, h, 1, static_cast<std::uint8_t>(fill)) {}

    int width() const { return labels.width; }
    int height() const { return labels.height; }
    SemanticClass at(int x, int y) const { return static_cast<SemanticClass>(labels.at(x, y)); }
    void set(int x, int y, SemanticClass c) { labels.at(x, y) = static_cast<std::uint8_t>(c); }
    std::size_t count(SemanticClass c) const;
    /// True when every code is a valid SemanticClass.
    bool valid() const;
    bool operator==(const SegMask&) const = default;
};

/// Palette-colored RGB rendering of a mask.
Image8 mask_to_rgb(const SegMask& mask);

}  // namespace eyesynth
