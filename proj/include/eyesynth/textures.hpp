// SPDX-License-Identifier: Apache-2.0
//
// Texture and environment assets. Everything can be synthesized procedurally
// so renders work without external files; an asset manifest can replace any
// entry with PNG textures and Radiance HDR environments.
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "eyesynth/raster.hpp"
#include "eyesynth/vec.hpp"

namespace eyesynth {

using Color = Vec3;  // linear RGB

struct EnvironmentMap {
    std::string id;
    std::string tag;  // "indoor" or "outdoor"
    ImageF hdr;       // equirectangular, 3 channels, linear, >= 0
};

struct TextureLibrary {
    std::vector<ImageF> iris;  // rubber-sheet layout: x = angle, y = radius (pupil edge at row 0)
    ImageF sclera;             // x = angle about the optical axis, y = polar angle
    std::vector<EnvironmentMap> environments;
};

inline constexpr int kIrisTextureCount = 9;
inline constexpr int kEnvironmentCount = 25;
inline constexpr int kIndoorEnvironmentCount = 9;

ImageF procedural_iris_texture(int id);
ImageF procedural_sclera_texture();
/// Indices < 9 are indoor scenes, the remaining 16 outdoor.
EnvironmentMap procedural_environment(int index);

/// 9 iris textures, one sclera texture, 25 environments (9 indoor, 16 outdoor).
std::shared_ptr<const TextureLibrary> procedural_library();

/// Loads an asset manifest (JSON). Relative paths resolve against the manifest
/// directory, or against `asset_root` when non-empty. Entries missing from the
/// manifest fall back to the procedural library. Throws AssetError naming the
/// first missing file.
std::shared_ptr<const TextureLibrary> load_asset_manifest(const std::string& path,
                                                          const std::string& asset_root = "");

/// Bilinear lookup; u wraps, v clamps. Coordinates in [0, 1).
Color sample_bilinear(const ImageF& img, double u, double v);

/// Smooth value noise in [0, 1] at a 3-D point.
double value_noise(const Vec3& p, std::uint64_t seed);

}  // namespace eyesynth
