// SPDX-License-Identifier: Apache-2.0
//
// JSON documents written by the tool. Angles are degrees, lengths millimeters,
// pixel coordinates have their origin at the top-left corner. Every document
// carries "schema_version" ("major.minor"); readers reject other majors.
#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "eyesynth/recipes.hpp"

namespace eyesynth {

using Json = nlohmann::json;

inline constexpr int kSchemaMajor = 1;

/// Throws FormatError when the field is missing or its major version differs.
void check_schema_version(const Json& doc, const std::string& what);

Json eye_params_to_json(const EyeParams& p);
EyeParams eye_params_from_json(const Json& j);

Json pose_params_to_json(const PoseParams& p);
PoseParams pose_params_from_json(const Json& j);

Json metadata_to_json(const MetadataRecord& m);
MetadataRecord metadata_from_json(const Json& j);
MetadataRecord read_metadata_file(const std::string& path);

Json recipe_to_json(const DatasetRecipe& r);
/// Fields absent from `j` keep the defaults of the named preset.
DatasetRecipe recipe_from_json(const Json& j);
DatasetRecipe read_recipe_file(const std::string& path);

Json manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const Json& j);
Manifest read_manifest_file(const std::string& path);

/// Parses text, turning parse errors into FormatError that names `origin`.
Json parse_json(const std::string& text, const std::string& origin);

}  // namespace eyesynth
