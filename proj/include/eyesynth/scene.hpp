// SPDX-License-Identifier: Apache-2.0
//
// Everything around the eye. World coordinates are the head frame: eyeball
// center at the origin, +y up, +x toward the subject's right, the eye looking
// along -z at zero gaze. Cameras use x right, y down, z forward.
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eyesynth/eye_model.hpp"
#include "eyesynth/rng.hpp"
#include "eyesynth/textures.hpp"

namespace eyesynth {

struct Intrinsics {
    double fx = 560.0;
    double fy = 560.0;
    double cx = 320.0;
    double cy = 240.0;
};

struct CameraModel {
    Intrinsics intrinsics;
    int width = 640;
    int height = 480;
    RigidTransform world_to_camera;

    /// Throws InvalidParameter.
    void validate() const;
    Vec3 position() const { return world_to_camera.inverse().translation; }
    Vec3 forward() const { return world_to_camera.rotation.row(2); }
    Vec3 right() const { return world_to_camera.rotation.row(0); }
    Vec3 down() const { return world_to_camera.rotation.row(1); }
};

/// Focal length such that a 24 mm eyeball covers about 70% of the image
/// height at 40 mm; principal point at the image center.
Intrinsics default_intrinsics(int width, int height);

/// camera <- world transform for a camera at `position` looking at `target`.
RigidTransform look_at(const Vec3& position, const Vec3& target, const Vec3& world_up = {0.0, 1.0, 0.0});

/// Ray through ((px + jx - cx)/fx, (py + jy - cy)/fy, 1) in camera space,
/// returned in world space. Pixel centers are at jitter (0.5, 0.5).
Ray generate_camera_ray(const CameraModel& cam, double px, double py, const Vec2& jitter);
/// Continuous pixel coordinates of a world point; empty when the point is not
/// in front of the camera.
std::optional<Vec2> project(const CameraModel& cam, const Vec3& world_point);
Vec3 world_to_camera_point(const CameraModel& cam, const Vec3& world_point);

struct PointEmitter {
    Vec3 position;
    double intensity = 2000.0;  // radiant intensity, arbitrary linear units
    double radius = 0.5;
};

struct EmitterLayout {
    std::string id = "none";
    std::vector<PointEmitter> emitters;
};

enum class PoseKind { SNVGaze, SOpenEDS, SGeneral };

const char* pose_kind_name(PoseKind k);
/// Accepts "S-NVGaze", "S-OpenEDS", "S-General". Throws InvalidParameter.
PoseKind pose_kind_from_name(const std::string& name);

struct PoseConfig {
    double distance_min = 35.0;  // from the corneal apex
    double distance_max = 45.0;
    double offset_range = 5.0;   // +/- in-plane shift (S-NVGaze, S-OpenEDS)
    double tilt_deg = -10.0;     // S-OpenEDS camera elevation
    int ring_count = 16;
    double ring_radius = 12.0;
    double general_azimuth_min = -20.0;
    double general_azimuth_max = 60.0;
    double general_elevation_min = -20.0;
    double general_elevation_max = 40.0;
    double general_distance_min = 25.0;
    double general_distance_max = 45.0;
    double general_jitter = 1.0;
    double emitter_offset = 10.0;  // single emitter, along camera right
    double single_emitter_intensity = 2000.0;
    double ring_emitter_intensity = 250.0;
    double emitter_radius = 0.5;
};

/// The random draws that define a camera pose.
struct PoseParams {
    PoseKind kind = PoseKind::SNVGaze;
    double distance = 40.0;
    double offset_h = 0.0;  // along camera right (mm)
    double offset_v = 0.0;  // along camera up (mm)
    double azimuth_deg = 0.0;    // S-General manifold position
    double elevation_deg = 0.0;
};

struct CameraPose {
    CameraModel camera;
    EmitterLayout emitters;
};

PoseParams sample_pose_s_nvgaze(Rng& rng, const PoseConfig& cfg = {});
PoseParams sample_pose_s_openeds(Rng& rng, const PoseConfig& cfg = {});
PoseParams sample_pose_s_general(Rng& rng, const PoseConfig& cfg = {});
PoseParams sample_pose(PoseKind kind, Rng& rng, const PoseConfig& cfg = {});

/// Places the camera and emitters for an eye whose (zero-gaze) apex sits at
/// distance `apex_distance` in front of the eyeball center.
CameraPose build_pose(const PoseParams& p, double apex_distance, int width, int height,
                      const PoseConfig& cfg = {});

struct EnvironmentState {
    std::string id = "black";
    std::shared_ptr<const ImageF> hdr;  // null means black
    double rot_y_deg = 0.0;  // [0, 360)
    double rot_x_deg = 0.0;  // [-60, 60]
    double rot_z_deg = 0.0;  // [-60, 60]
    double scale = 1.0;      // [0.5, 1.5]

    /// Map-to-world rotation Ry * Rx * Rz.
    Mat3 rotation() const;
};

Color env_radiance(const EnvironmentState& env, const Vec3& direction);
/// Dark, lit or saturated bin with equal probability, then uniform inside it.
double sample_env_intensity_bin(Rng& rng);
EnvironmentState make_environment(const TextureLibrary& lib, int index, double rot_y, double rot_x, double rot_z,
                                  double scale, std::shared_ptr<const TextureLibrary> owner);

struct EyeglassesConfig {
    bool present = false;
    double front_radius = 120.0;
    double thickness = 3.0;
    double vertex_distance = 18.0;  // front vertex ahead of the zero-gaze apex
    double aperture_radius = 24.0;
    double frame_tube_radius = 1.5;
    double coating_ior = 1.5;
};

struct HeadModel {
    int id = 0;
    double skin_albedo = 0.55;
    Color skin_tint{1.0, 0.78, 0.66};
    double canthus_half_angle_deg = 55.0;
    double upper_lid_amplitude_deg = 30.0;
    double lower_lid_amplitude_deg = 16.0;
    double lid_midline_deg = -8.0;
    double caruncle_size = 1.0;
};

/// Deterministic head-surface variation for a head identity.
HeadModel make_head(int id);

struct Scene {
    CameraModel camera;
    EmitterLayout emitters;
    EnvironmentState environment;
    EyeglassesConfig glasses;
    HeadModel head;
    PoseParams pose;  // provenance of `camera` and `emitters`
};

/// Which optional parts of the scene take part in an intersection query.
struct HitFilter {
    bool skin = true;      // eyelids, caruncle, head
    bool glasses = true;   // lens surfaces and frame
    bool emitters = true;
};

struct SceneHit {
    InterfaceHit hit;
    Material material;
    SemanticClass cls = SemanticClass::BackgroundSkin;
    bool transparent = false;
};

/// Scene plus eye with the derived geometry precomputed. Holds references;
/// both must outlive it.
class SceneIntersector {
public:
    SceneIntersector(const Scene& scene, const EyeAssembly& eye);

    std::optional<SceneHit> nearest(const Ray& ray, const HitFilter& filter = {}) const;
    void for_each_hit(const Ray& ray, const HitFilter& filter, const std::function<void(const InterfaceHit&)>& fn) const;
    /// Fraction of light passing from `from` to `to`: the product of Fresnel
    /// transmissions at transparent interfaces, or 0 when anything opaque
    /// lies on the segment. Emitters are ignored.
    double transmittance(const Vec3& from, const Vec3& to) const;

    const Scene& scene() const { return *scene_; }
    const EyeAssembly& eye() const { return *eye_; }

private:
    template <typename Fn>
    void visit(const Ray& ray, const HitFilter& filter, Fn&& fn) const;

    const Scene* scene_;
    const EyeAssembly* eye_;
    double lid_radius_;
    Vec3 caruncle_center_;
    Vec3 caruncle_axes_;
    Vec3 lens_front_center_;
    Vec3 lens_back_center_;
    double frame_major_;
    double frame_z_;
};

/// Nearest hit over eye, eyelids, caruncle, head, glasses and emitters.
std::optional<SceneHit> intersect_scene(const Scene& scene, const EyeAssembly& eye, const Ray& ray,
                                        const HitFilter& filter = {});
/// Every hit of every scene surface along the ray (unordered).
void for_each_scene_hit(const Scene& scene, const EyeAssembly& eye, const Ray& ray, const HitFilter& filter,
                        const std::function<void(const InterfaceHit&)>& fn);

/// Eyelid shell radius for an eye.
double eyelid_shell_radius(const EyeAssembly& eye);
/// True when a direction from the eyeball center falls inside the lid opening.
bool inside_lid_opening(const HeadModel& head, double closure, const Vec3& p);

}  // namespace eyesynth
