// SPDX-License-Identifier: Apache-2.0
#include "eyesynth/serialize.hpp"

#include <cstdlib>

#include "eyesynth/errors.hpp"
#include "eyesynth/io.hpp"

namespace eyesynth {

namespace {

Json vec3_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

Vec3 vec3_from(const Json& j) {
    if (!j.is_array() || j.size() != 3) throw FormatError("expected a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json vec2_json(const std::optional<Vec2>& v) {
    if (!v) return nullptr;
    return Json::array({v->x, v->y});
}

std::optional<Vec2> vec2_from(const Json& j) {
    if (j.is_null()) return std::nullopt;
    if (!j.is_array() || j.size() != 2) throw FormatError("expected a 2-element array or null");
    return Vec2{j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->template get<T>();
}

const char* mode_name(ChannelMode m) { return m == ChannelMode::IR ? "ir" : "rgb"; }

ChannelMode mode_from(const std::string& s) {
    if (s == "ir") return ChannelMode::IR;
    if (s == "rgb") return ChannelMode::RGB;
    throw InvalidParameter("unknown channel mode '" + s + "' (expected ir or rgb)");
}

Json pose_config_json(const PoseConfig& c) {
    return {
        {"distance_min", c.distance_min},
        {"distance_max", c.distance_max},
        {"offset_range", c.offset_range},
        {"tilt_deg", c.tilt_deg},
        {"ring_count", c.ring_count},
        {"ring_radius", c.ring_radius},
        {"general_azimuth_min", c.general_azimuth_min},
        {"general_azimuth_max", c.general_azimuth_max},
        {"general_elevation_min", c.general_elevation_min},
        {"general_elevation_max", c.general_elevation_max},
        {"general_distance_min", c.general_distance_min},
        {"general_distance_max", c.general_distance_max},
        {"general_jitter", c.general_jitter},
        {"emitter_offset", c.emitter_offset},
        {"single_emitter_intensity", c.single_emitter_intensity},
        {"ring_emitter_intensity", c.ring_emitter_intensity},
        {"emitter_radius", c.emitter_radius},
    };
}

void pose_config_from(const Json& j, PoseConfig& c) {
    read_opt(j, "distance_min", c.distance_min);
    read_opt(j, "distance_max", c.distance_max);
    read_opt(j, "offset_range", c.offset_range);
    read_opt(j, "tilt_deg", c.tilt_deg);
    read_opt(j, "ring_count", c.ring_count);
    read_opt(j, "ring_radius", c.ring_radius);
    read_opt(j, "general_azimuth_min", c.general_azimuth_min);
    read_opt(j, "general_azimuth_max", c.general_azimuth_max);
    read_opt(j, "general_elevation_min", c.general_elevation_min);
    read_opt(j, "general_elevation_max", c.general_elevation_max);
    read_opt(j, "general_distance_min", c.general_distance_min);
    read_opt(j, "general_distance_max", c.general_distance_max);
    read_opt(j, "general_jitter", c.general_jitter);
    read_opt(j, "emitter_offset", c.emitter_offset);
    read_opt(j, "single_emitter_intensity", c.single_emitter_intensity);
    read_opt(j, "ring_emitter_intensity", c.ring_emitter_intensity);
    read_opt(j, "emitter_radius", c.emitter_radius);
}

template <typename Fn>
auto wrap_format(const std::string& origin, Fn&& fn) {
    try {
        return fn();
    } catch (const Json::exception& e) {
        throw FormatError(origin + ": " + e.what());
    }
}

}  // namespace

void check_schema_version(const Json& doc, const std::string& what) {
    if (!doc.is_object()) throw FormatError(what + ": expected a JSON object");
    const auto it = doc.find("schema_version");
    if (it == doc.end() || !it->is_string()) throw FormatError(what + ": missing schema_version");
    const std::string v = it->get<std::string>();
    char* end = nullptr;
    const long major = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || (*end != '.' && *end != '\0')) throw FormatError(what + ": malformed schema_version '" + v + "'");
    if (major != kSchemaMajor) {
        throw FormatError(what + ": unsupported schema major version " + std::to_string(major) + " (expected " +
                          std::to_string(kSchemaMajor) + ")");
    }
}

Json parse_json(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw FormatError(origin + ": " + e.what());
    }
}

Json eye_params_to_json(const EyeParams& p) {
    return {
        {"cornea_radius", p.cornea_radius},
        {"cornea_asphericity", p.cornea_asphericity},
        {"eyeball_radius", p.eyeball_radius},
        {"iris_radius", p.iris_radius},
        {"pupil_radius", p.pupil_radius},
        {"anterior_chamber_depth", p.anterior_chamber_depth},
        {"eyelid_closure", p.eyelid_closure},
        {"iris_texture_id", p.iris_texture_id},
        {"iris_rotation_deg", p.iris_rotation_deg},
        {"sclera_rotation_deg", p.sclera_rotation_deg},
        {"retina_roughness", p.retina_roughness},
        {"gaze_azimuth_deg", p.gaze_azimuth_deg},
        {"gaze_elevation_deg", p.gaze_elevation_deg},
    };
}

EyeParams eye_params_from_json(const Json& j) {
    EyeParams p;
    read_opt(j, "cornea_radius", p.cornea_radius);
    read_opt(j, "cornea_asphericity", p.cornea_asphericity);
    read_opt(j, "eyeball_radius", p.eyeball_radius);
    read_opt(j, "iris_radius", p.iris_radius);
    read_opt(j, "pupil_radius", p.pupil_radius);
    read_opt(j, "anterior_chamber_depth", p.anterior_chamber_depth);
    read_opt(j, "eyelid_closure", p.eyelid_closure);
    read_opt(j, "iris_texture_id", p.iris_texture_id);
    read_opt(j, "iris_rotation_deg", p.iris_rotation_deg);
    read_opt(j, "sclera_rotation_deg", p.sclera_rotation_deg);
    read_opt(j, "retina_roughness", p.retina_roughness);
    read_opt(j, "gaze_azimuth_deg", p.gaze_azimuth_deg);
    read_opt(j, "gaze_elevation_deg", p.gaze_elevation_deg);
    return p;
}

Json pose_params_to_json(const PoseParams& p) {
    return {
        {"sampler", pose_kind_name(p.kind)},
        {"distance", p.distance},
        {"offset_h", p.offset_h},
        {"offset_v", p.offset_v},
        {"azimuth_deg", p.azimuth_deg},
        {"elevation_deg", p.elevation_deg},
    };
}

PoseParams pose_params_from_json(const Json& j) {
    PoseParams p;
    if (auto it = j.find("sampler"); it != j.end()) p.kind = pose_kind_from_name(it->get<std::string>());
    read_opt(j, "distance", p.distance);
    read_opt(j, "offset_h", p.offset_h);
    read_opt(j, "offset_v", p.offset_v);
    read_opt(j, "azimuth_deg", p.azimuth_deg);
    read_opt(j, "elevation_deg", p.elevation_deg);
    return p;
}

Json metadata_to_json(const MetadataRecord& m) {
    Json rot = Json::array();
    for (int i = 0; i < 3; ++i) rot.push_back(vec3_json(m.extrinsics.rotation.row(i)));
    Json emitters = Json::array();
    for (const auto& e : m.emitters) {
        emitters.push_back({{"position", vec3_json(e.position)}, {"intensity", e.intensity}, {"radius", e.radius}});
    }
    return {
        {"schema_version", kSchemaVersion},
        {"id", m.id},
        {"eye", eye_params_to_json(m.eye)},
        {"head_id", m.head_id},
        {"pose", pose_params_to_json(m.pose)},
        {"pupil_center_3d", vec3_json(m.pupil_center_3d)},
        {"iris_center_3d", vec3_json(m.iris_center_3d)},
        {"pupil_center_2d", vec2_json(m.pupil_center_2d)},
        {"iris_center_2d", vec2_json(m.iris_center_2d)},
        {"intrinsics", {{"fx", m.intrinsics.fx}, {"fy", m.intrinsics.fy}, {"cx", m.intrinsics.cx}, {"cy", m.intrinsics.cy}}},
        {"width", m.width},
        {"height", m.height},
        {"extrinsics", {{"rotation", rot}, {"translation", vec3_json(m.extrinsics.translation)}}},
        {"emitter_layout", m.emitter_layout},
        {"emitters", emitters},
        {"environment",
         {{"id", m.environment_id},
          {"rotation_deg", Json::array({m.environment_rotation[0], m.environment_rotation[1], m.environment_rotation[2]})},
          {"scale", m.environment_scale}}},
        {"glasses", m.glasses},
        {"seed", m.seed},
        {"exposure", m.exposure},
        {"channel_mode", m.channel_mode},
    };
}

MetadataRecord metadata_from_json(const Json& j) {
    check_schema_version(j, "metadata");
    return wrap_format("metadata", [&] {
        MetadataRecord m;
        m.id = j.at("id").get<std::string>();
        m.eye = eye_params_from_json(j.at("eye"));
        m.head_id = j.at("head_id").get<int>();
        m.pose = pose_params_from_json(j.at("pose"));
        m.pupil_center_3d = vec3_from(j.at("pupil_center_3d"));
        m.iris_center_3d = vec3_from(j.at("iris_center_3d"));
        m.pupil_center_2d = vec2_from(j.at("pupil_center_2d"));
        m.iris_center_2d = vec2_from(j.at("iris_center_2d"));
        const Json& in = j.at("intrinsics");
        m.intrinsics = {in.at("fx").get<double>(), in.at("fy").get<double>(), in.at("cx").get<double>(),
                        in.at("cy").get<double>()};
        m.width = j.at("width").get<int>();
        m.height = j.at("height").get<int>();
        const Json& ex = j.at("extrinsics");
        const Json& rot = ex.at("rotation");
        if (!rot.is_array() || rot.size() != 3) throw FormatError("metadata: extrinsics rotation must have 3 rows");
        m.extrinsics.rotation = Mat3::from_rows(vec3_from(rot[0]), vec3_from(rot[1]), vec3_from(rot[2]));
        m.extrinsics.translation = vec3_from(ex.at("translation"));
        m.emitter_layout = j.at("emitter_layout").get<std::string>();
        for (const auto& e : j.at("emitters")) {
            m.emitters.push_back({vec3_from(e.at("position")), e.at("intensity").get<double>(), e.at("radius").get<double>()});
        }
        const Json& env = j.at("environment");
        m.environment_id = env.at("id").get<std::string>();
        const Json& er = env.at("rotation_deg");
        if (!er.is_array() || er.size() != 3) throw FormatError("metadata: environment rotation must have 3 angles");
        for (int i = 0; i < 3; ++i) m.environment_rotation[i] = er[i].get<double>();
        m.environment_scale = env.at("scale").get<double>();
        m.glasses = j.at("glasses").get<bool>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.exposure = j.at("exposure").get<double>();
        m.channel_mode = j.at("channel_mode").get<std::string>();
        return m;
    });
}

MetadataRecord read_metadata_file(const std::string& path) {
    try {
        return metadata_from_json(parse_json(read_text_file(path), path));
    } catch (const FormatError& e) {
        const std::string what = e.what();
        if (what.rfind(path, 0) == 0) throw;
        throw FormatError(path + ": " + what);
    }
}

Json recipe_to_json(const DatasetRecipe& r) {
    return {
        {"schema_version", kSchemaVersion},
        {"name", r.name},
        {"pose_sampler", pose_kind_name(r.pose_sampler)},
        {"scale", r.scale},
        {"total_images", r.total_images},
        {"composition", {{"open", r.composition.open}, {"partial", r.composition.partial}, {"closed", r.composition.closed}}},
        {"test_images", r.test_images},
        {"resolution", Json::array({r.width, r.height})},
        {"glasses_fraction", r.glasses_fraction},
        {"gaze_range_deg", r.gaze_range_deg},
        {"pupil_radius_range", Json::array({r.pupil_min, r.pupil_max})},
        {"asphericities", r.asphericities},
        {"partial_closure_min", r.partial_min},
        {"closure_gaze_coefficients", Json::array({r.closure_c0, r.closure_c1})},
        {"head_pool", {{"train", r.train_heads}, {"test", r.test_heads}}},
        {"master_seed", r.master_seed},
        {"pose", pose_config_json(r.pose)},
        {"render",
         {{"samples_per_pixel", r.samples_per_pixel},
          {"max_bounces", r.max_bounces},
          {"mode", mode_name(r.mode)},
          {"tile_size", r.tile_size},
          {"exposure", r.exposure}}},
    };
}

DatasetRecipe recipe_from_json(const Json& j) {
    check_schema_version(j, "recipe");
    return wrap_format("recipe", [&] {
        const std::string name = j.value("name", std::string("S-NVGaze"));
        const double scale = j.value("scale", 0.01);
        DatasetRecipe r = make_recipe(name, scale);
        if (auto it = j.find("pose_sampler"); it != j.end()) r.pose_sampler = pose_kind_from_name(it->get<std::string>());
        read_opt(j, "total_images", r.total_images);
        if (auto it = j.find("composition"); it != j.end()) {
            read_opt(*it, "open", r.composition.open);
            read_opt(*it, "partial", r.composition.partial);
            read_opt(*it, "closed", r.composition.closed);
        }
        read_opt(j, "test_images", r.test_images);
        if (auto it = j.find("resolution"); it != j.end()) {
            if (!it->is_array() || it->size() != 2) throw FormatError("recipe: resolution must be [width, height]");
            r.width = (*it)[0].get<int>();
            r.height = (*it)[1].get<int>();
        }
        read_opt(j, "glasses_fraction", r.glasses_fraction);
        read_opt(j, "gaze_range_deg", r.gaze_range_deg);
        if (auto it = j.find("pupil_radius_range"); it != j.end()) {
            if (!it->is_array() || it->size() != 2) throw FormatError("recipe: pupil_radius_range must be [min, max]");
            r.pupil_min = (*it)[0].get<double>();
            r.pupil_max = (*it)[1].get<double>();
        }
        read_opt(j, "asphericities", r.asphericities);
        read_opt(j, "partial_closure_min", r.partial_min);
        if (auto it = j.find("closure_gaze_coefficients"); it != j.end()) {
            if (!it->is_array() || it->size() != 2) throw FormatError("recipe: closure_gaze_coefficients must be [c0, c1]");
            r.closure_c0 = (*it)[0].get<double>();
            r.closure_c1 = (*it)[1].get<double>();
        }
        if (auto it = j.find("head_pool"); it != j.end()) {
            read_opt(*it, "train", r.train_heads);
            read_opt(*it, "test", r.test_heads);
        }
        read_opt(j, "master_seed", r.master_seed);
        if (auto it = j.find("pose"); it != j.end()) pose_config_from(*it, r.pose);
        if (auto it = j.find("render"); it != j.end()) {
            read_opt(*it, "samples_per_pixel", r.samples_per_pixel);
            read_opt(*it, "max_bounces", r.max_bounces);
            if (auto m = it->find("mode"); m != it->end()) r.mode = mode_from(m->get<std::string>());
            read_opt(*it, "tile_size", r.tile_size);
            read_opt(*it, "exposure", r.exposure);
        }
        r.validate();
        return r;
    });
}

DatasetRecipe read_recipe_file(const std::string& path) {
    return recipe_from_json(parse_json(read_text_file(path), path));
}

Json manifest_to_json(const Manifest& m) {
    Json entries = Json::array();
    for (const auto& e : m.entries) {
        Json je = {{"id", e.id}, {"split", e.test ? "test" : "train"}, {"status", e.ok ? "ok" : "failed"}};
        if (e.ok) {
            je["files"] = {
                {"image", {{"path", e.image}, {"sha256", e.image_sha256}}},
                {"mask", {{"path", e.mask}, {"sha256", e.mask_sha256}}},
                {"mask_noskin", {{"path", e.mask_noskin}, {"sha256", e.mask_noskin_sha256}}},
                {"meta", {{"path", e.meta}, {"sha256", e.meta_sha256}}},
            };
        } else {
            je["error"] = e.error;
        }
        entries.push_back(std::move(je));
    }
    return {
        {"schema_version", m.schema_version},
        {"recipe", recipe_to_json(m.recipe)},
        {"master_seed", m.master_seed},
        {"generated_at", m.generated_at},
        {"exposure", m.exposure},
        {"failed", m.failed_count()},
        {"entries", entries},
    };
}

Manifest manifest_from_json(const Json& j) {
    check_schema_version(j, "manifest");
    return wrap_format("manifest", [&] {
        Manifest m;
        m.schema_version = j.at("schema_version").get<std::string>();
        m.recipe = recipe_from_json(j.at("recipe"));
        m.master_seed = j.at("master_seed").get<std::uint64_t>();
        m.generated_at = j.at("generated_at").get<std::string>();
        m.exposure = j.at("exposure").get<double>();
        for (const auto& je : j.at("entries")) {
            ManifestEntry e;
            e.id = je.at("id").get<std::string>();
            e.test = je.at("split").get<std::string>() == "test";
            e.ok = je.at("status").get<std::string>() == "ok";
            if (e.ok) {
                const Json& f = je.at("files");
                e.image = f.at("image").at("path").get<std::string>();
                e.image_sha256 = f.at("image").at("sha256").get<std::string>();
                e.mask = f.at("mask").at("path").get<std::string>();
                e.mask_sha256 = f.at("mask").at("sha256").get<std::string>();
                e.mask_noskin = f.at("mask_noskin").at("path").get<std::string>();
                e.mask_noskin_sha256 = f.at("mask_noskin").at("sha256").get<std::string>();
                e.meta = f.at("meta").at("path").get<std::string>();
                e.meta_sha256 = f.at("meta").at("sha256").get<std::string>();
            } else {
                e.error = je.value("error", std::string());
            }
            m.entries.push_back(std::move(e));
        }
        return m;
    });
}

Manifest read_manifest_file(const std::string& path) {
    return manifest_from_json(parse_json(read_text_file(path), path));
}

}  // namespace eyesynth
