#include "loosectl/scene.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <string>

namespace lc {

CameraIntrinsics SceneCamera::intrinsics() const {
    if (fx && fy && cx && cy) {
        CameraIntrinsics cam{width, height, *fx, *fy, *cx, *cy};
        cam.validate();
        return cam;
    }
    return intrinsics_from_fov(fov_deg, width, height);
}

SceneCamera SceneCamera::from_intrinsics(const CameraIntrinsics& cam) {
    SceneCamera sc;
    sc.width = cam.width;
    sc.height = cam.height;
    sc.fov_deg = cam.horizontal_fov_deg();
    const CameraIntrinsics plain = intrinsics_from_fov(sc.fov_deg, cam.width, cam.height);
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
    if (!(close(plain.fx, cam.fx) && close(plain.fy, cam.fy) && close(plain.cx, cam.cx) &&
          close(plain.cy, cam.cy))) {
        sc.fx = cam.fx;
        sc.fy = cam.fy;
        sc.cx = cam.cx;
        sc.cy = cam.cy;
    }
    return sc;
}

std::vector<ValidationIssue> SceneSpec::check() const {
    std::vector<ValidationIssue> issues;
    auto add = [&](std::string ptr, std::string msg) { issues.push_back({std::move(ptr), std::move(msg)}); };
    if (version > kSceneSchemaVersion)
        add("/version", "unsupported newer schema version " + std::to_string(version));
    else if (version < 1)
        add("/version", "version must be >= 1");
    if (units != "meters") add("/units", "units must be \"meters\"");

    if (!(camera.fov_deg > 0.0 && camera.fov_deg < 180.0))
        add("/camera/fov_deg", "fov_deg must lie in (0, 180)");
    if (camera.width <= 0) add("/camera/width", "width must be positive");
    if (camera.height <= 0) add("/camera/height", "height must be positive");
    const int explicit_count = (camera.fx ? 1 : 0) + (camera.fy ? 1 : 0) + (camera.cx ? 1 : 0) + (camera.cy ? 1 : 0);
    if (explicit_count != 0 && explicit_count != 4) {
        add("/camera", "fx, fy, cx, cy must be given together");
    } else if (explicit_count == 4 && camera.width > 0 && camera.height > 0) {
        try {
            CameraIntrinsics{camera.width, camera.height, *camera.fx, *camera.fy, *camera.cx, *camera.cy}
                .validate();
        } catch (const std::exception& e) {
            add("/camera", e.what());
        }
    }

    if (!footprint.vertices.empty()) {
        bool finite = true;
        for (const auto& v : footprint.vertices) finite = finite && v.allFinite();
        if (!finite)
            add("/footprint", "footprint vertices must be finite");
        else if (footprint.vertices.size() < 3)
            add("/footprint", "footprint needs at least 3 vertices");
        else if (!footprint.is_simple())
            add("/footprint", "footprint polygon is self-intersecting");
        else if (!(footprint.signed_area() > 0.0))
            add("/footprint", "footprint must be counter-clockwise");
    }
    if (!std::isfinite(y_min)) add("/y_min", "y_min must be finite");
    if (!std::isfinite(y_max)) add("/y_max", "y_max must be finite");
    if (!(y_min < y_max)) add("/y_max", "y_max must exceed y_min");
    if (!(far_m > 0.0) || !std::isfinite(far_m)) add("/far_m", "far_m must be positive and finite");

    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const auto& b = boxes[i];
        const std::string base = "/boxes/" + std::to_string(i);
        if (!b.center.allFinite()) add(base + "/center", "center must be finite");
        if (!b.half_extents.allFinite() || !(b.half_extents.minCoeff() > 0.0))
            add(base + "/half_extents", "half extents must be strictly positive");
        if (!std::isfinite(b.yaw)) add(base + "/yaw_deg", "yaw must be finite");
        if (b.center.allFinite() && b.half_extents.allFinite() && std::isfinite(b.yaw) && far_m > 0.0) {
            for (const auto& c : b.corners())
                if (c.z() > far_m) {
                    add(base, "box extends beyond far_m");
                    break;
                }
        }
    }
    for (const auto& v : footprint.vertices)
        if (v.allFinite() && v.y() > far_m) {
            add("/far_m", "footprint extends beyond far_m");
            break;
        }
    return issues;
}

RenderScene SceneSpec::to_render_scene() const {
    auto issues = check();
    if (!issues.empty()) throw ValidationError(std::move(issues));
    RenderScene rs;
    if (!footprint.vertices.empty()) rs.meshes.push_back(extrude_polygon_to_planes(footprint, y_min, y_max));
    rs.boxes = boxes;
    if (include_floor) rs.floor_y = y_min;
    if (include_ceiling) rs.ceiling_y = y_max;
    rs.far_m = far_m;
    return rs;
}

DepthMap render_scene(const SceneSpec& scene, std::optional<int> width, std::optional<int> height,
                      const RenderOptions& opts) {
    CameraIntrinsics cam = scene.camera.intrinsics();
    if (width || height) cam = cam.resized(width.value_or(cam.width), height.value_or(cam.height));
    return render_depth(scene.to_render_scene(), cam, opts);
}

double canonical_float(double v) {
    if (!std::isfinite(v) || v == 0.0) return v == 0.0 ? 0.0 : v;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::strtod(buf, nullptr);
}

void canonicalize(SceneSpec& scene) {
    auto& c = scene.camera;
    c.fov_deg = canonical_float(c.fov_deg);
    for (auto* o : {&c.fx, &c.fy, &c.cx, &c.cy})
        if (*o) **o = canonical_float(**o);
    for (auto& v : scene.footprint.vertices) v = Vec2(canonical_float(v.x()), canonical_float(v.y()));
    scene.y_min = canonical_float(scene.y_min);
    scene.y_max = canonical_float(scene.y_max);
    scene.far_m = canonical_float(scene.far_m);
    for (auto& b : scene.boxes) {
        b = b.canonical();
        for (int k = 0; k < 3; ++k) {
            b.center[k] = canonical_float(b.center[k]);
            b.half_extents[k] = canonical_float(b.half_extents[k]);
        }
        // Yaw is stored in degrees; round there so reload is a fixed point.
        const double deg = canonical_float(b.yaw * 180.0 / std::numbers::pi);
        b.yaw = deg * std::numbers::pi / 180.0;
    }
}

}  // namespace lc
