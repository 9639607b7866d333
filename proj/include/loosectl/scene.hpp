#pragma once

#include <optional>
#include <string>
#include <vector>

#include "loosectl/error.hpp"
#include "loosectl/raster.hpp"

namespace lc {

inline constexpr int kSceneSchemaVersion = 1;

struct SceneCamera {
    double fov_deg = 50.0;
    int width = 512;
    int height = 512;
    /// Explicit pinhole values when the camera is not a plain FOV camera.
    std::optional<double> fx, fy, cx, cy;

    CameraIntrinsics intrinsics() const;
    static SceneCamera from_intrinsics(const CameraIntrinsics& cam);
};

/// Authorable scene: extruded footprint walls, optional floor/ceiling and
/// oriented boxes, seen from a camera at the origin.
struct SceneSpec {
    int version = kSceneSchemaVersion;
    std::string units = "meters";
    SceneCamera camera;
    Polygon2D footprint;  // empty = no walls
    double y_min = -1.5;
    double y_max = 1.5;
    bool include_floor = true;
    bool include_ceiling = false;
    double far_m = 20.0;
    std::vector<OrientedBox3D> boxes;

    /// Every invariant violation, as JSON-pointer issues. Empty when valid.
    std::vector<ValidationIssue> check() const;
    RenderScene to_render_scene() const;
};

/// Round to 9 significant digits; the canonical float form of scene files.
double canonical_float(double v);

/// Canonical box yaw and every float rounded to 9 significant digits, so the
/// in-memory scene renders exactly like its saved-and-reloaded file.
void canonicalize(SceneSpec& scene);

/// Render the scene's condition depth from its own camera (optionally at a
/// different resolution).
DepthMap render_scene(const SceneSpec& scene, std::optional<int> width = std::nullopt,
                      std::optional<int> height = std::nullopt,
                      const RenderOptions& opts = {});

}  // namespace lc
