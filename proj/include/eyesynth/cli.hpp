// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eyesynth/recipes.hpp"

namespace eyesynth {

/// Exit codes: 0 success, 1 validation error (bad flags, parameters, missing
/// assets, malformed inputs), 2 runtime error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Asset library from a manifest path, or the procedural library when empty.
/// EYESYNTH_ASSET_ROOT, when set, resolves relative paths in the manifest.
std::shared_ptr<const TextureLibrary> load_textures(const std::string& manifest_path);

/// Single-image description used by `render --config`.
struct SceneSpec {
    DatasetRecipe recipe;  // resolution, pose ranges and render settings
    SampledImageSpec image;
    std::string assets;
};
SceneSpec scene_spec_from_json(const nlohmann::json& j);

/// Grid of (image, colorized mask) pairs, `columns` pairs per row.
Image8 contact_sheet(const std::vector<std::pair<Image8, SegMask>>& cells, int columns, int padding = 4);

}  // namespace eyesynth
