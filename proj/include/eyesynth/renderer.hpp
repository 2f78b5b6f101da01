// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo path tracer for the eye scene, ground-truth masks and the
// per-image metadata record.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "eyesynth/scene.hpp"

namespace eyesynth {

enum class ChannelMode { IR, RGB };

struct RenderConfig {
    int samples_per_pixel = 200;
    int max_bounces = 6;
    ChannelMode mode = ChannelMode::IR;
    std::uint64_t seed = 0;
    std::uint64_t image_index = 0;  // separates RNG streams of images sharing a seed
    int tile_size = 32;
    int threads = 1;
    double exposure = 1.0;     // linear multiplier applied before quantization
    double retina_gain = 1.0;  // bright-pupil return strength
    double indirect_clamp = 4.0;  // cap on environment radiance reached after a diffuse bounce
    std::shared_ptr<const TextureLibrary> textures;

    /// Throws InvalidParameter.
    void validate() const;
};

struct MetadataRecord {
    std::string id;
    EyeParams eye;
    int head_id = 0;
    PoseParams pose;
    Vec3 pupil_center_3d;  // camera frame, mm
    Vec3 iris_center_3d;
    std::optional<Vec2> pupil_center_2d;  // empty when behind the camera
    std::optional<Vec2> iris_center_2d;
    Intrinsics intrinsics;
    int width = 0;
    int height = 0;
    RigidTransform extrinsics;  // camera <- head
    std::string emitter_layout;
    std::vector<PointEmitter> emitters;
    std::string environment_id;
    double environment_rotation[3] = {0.0, 0.0, 0.0};  // y, x, z degrees
    double environment_scale = 1.0;
    bool glasses = false;
    std::uint64_t seed = 0;
    double exposure = 1.0;
    std::string channel_mode = "ir";
};

struct RenderOutput {
    Image8 image;
    ImageF linear;  // pre-quantization radiance, same channel count as image
    SegMask mask_with_skin;
    SegMask mask_without_skin;
    MetadataRecord metadata;
};

/// Renders with `config.threads` workers.
RenderOutput render(const Scene& scene, const EyeAssembly& eye, const RenderConfig& config);
RenderOutput render_tiles_parallel(const Scene& scene, const EyeAssembly& eye, const RenderConfig& config,
                                   int worker_count);
/// Linear radiance only (no quantization, masks or metadata).
ImageF render_linear(const Scene& scene, const EyeAssembly& eye, const RenderConfig& config, int worker_count);

struct MaskPair {
    SegMask with_skin;
    SegMask without_skin;
};
MaskPair render_masks(const Scene& scene, const EyeAssembly& eye);
/// Class seen along one ray under the mask transparency rules.
SemanticClass classify_ray(const Scene& scene, const EyeAssembly& eye, const Ray& ray, bool include_skin);

MetadataRecord compute_metadata(const Scene& scene, const EyeAssembly& eye);

/// Exposure that maps the 99th percentile of a reduced-resolution render to
/// full scale. Returns 1 when the calibration render is black.
double calibrate_exposure(const Scene& scene, const EyeAssembly& eye, const RenderConfig& config,
                          int downscale = 4, int samples = 8);

/// Clamp and round half away from zero to 8 bits.
std::uint8_t quantize(double linear, double exposure);

/// Radiance of an emitter sphere seen from outside.
double emitter_radiance(const PointEmitter& e);

}  // namespace eyesynth
