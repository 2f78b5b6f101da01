// SPDX-License-Identifier: Apache-2.0
#include "eyesynth/segmask.hpp"

#include <algorithm>

namespace eyesynth {

const char* class_name(SemanticClass c) {
    switch (c) {
        case SemanticClass::BackgroundSkin: return "background";
        case SemanticClass::Sclera: return "sclera";
        case SemanticClass::Iris: return "iris";
        case SemanticClass::Pupil: return "pupil";
    }
    return "unknown";
}

std::optional<SemanticClass> class_from_palette(Rgb8 color) {
    for (int i = 0; i < kClassCount; ++i) {
        if (kMaskPalette[i] == color) return static_cast<SemanticClass>(i);
    }
    return std::nullopt;
}

std::size_t SegMask::count(SemanticClass c) const {
    const auto code = static_cast<std::uint8_t>(c);
    return static_cast<std::size_t>(std::count(labels.data.begin(), labels.data.end(), code));
}

bool SegMask::valid() const {
    return std::all_of(labels.data.begin(), labels.data.end(),
                       [](std::uint8_t v) { return v < kClassCount; });
}

Image8 mask_to_rgb(const SegMask& mask) {
    Image8 out(mask.width(), mask.height(), 3);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            const Rgb8 c = kMaskPalette[mask.labels.at(x, y) % kClassCount];
            out.at(x, y, 0) = c.r;
            out.at(x, y, 1) = c.g;
            out.at(x, y, 2) = c.b;
        }
    }
    return out;
}

}  // namespace eyesynth
