#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "loosectl/conditions.hpp"
#include "loosectl/proxy.hpp"
#include "loosectl/scene.hpp"

namespace lc {

struct SceneLoadResult {
    SceneSpec scene;
    /// Normalizations applied while loading (e.g. yaw canonicalization).
    std::vector<std::string> notes;
};

/// Parse and validate. Collects every violation before throwing
/// ValidationError. Newer schema versions are rejected.
SceneLoadResult scene_from_json(const nlohmann::json& doc);
SceneLoadResult parse_scene(std::string_view text);
SceneLoadResult load_scene(const std::filesystem::path& path);

/// Canonical document: sorted keys, floats at 9 significant digits,
/// canonical box yaw.
nlohmann::json scene_to_json(const SceneSpec& scene);
std::string dump_scene(const SceneSpec& scene);
void save_scene(const SceneSpec& scene, const std::filesystem::path& path);

nlohmann::json box_to_json(const OrientedBox3D& box);
/// Throws ValidationError.
OrientedBox3D box_from_json(const nlohmann::json& j, const std::string& pointer = "");

/// Box pipeline output document: {"boxes": [...], "skipped": [...]}.
nlohmann::json box_result_to_json(const BoxPipelineResult& result);
std::vector<OrientedBox3D> boxes_from_json(const nlohmann::json& doc);

/// Report summary (per-pixel violations are left out).
nlohmann::json report_to_json(const ConditionReport& report);

/// [{"pointer": ..., "message": ...}], the "issues" member of error bodies.
nlohmann::json issues_to_json(const std::vector<ValidationIssue>& issues);

}  // namespace lc
