#pragma once

#include <optional>
#include <vector>

#include "loosectl/geometry.hpp"

namespace lc {

struct RenderScene {
    std::vector<TriangleMesh> meshes;
    std::vector<OrientedBox3D> boxes;
    std::optional<double> floor_y;
    std::optional<double> ceiling_y;
    double far_m = 20.0;
};

struct RenderOptions {
    /// Worker threads for tile parallelism; 0 picks hardware concurrency.
    unsigned threads = 0;
    int tile_size = 32;
};

/// 12-triangle tessellation of a box.
TriangleMesh box_mesh(const OrientedBox3D& box);

/// Every triangle of the scene in submission order (meshes, boxes, floor,
/// ceiling). Floor/ceiling quads span 4x the plan bound of the other
/// geometry. Throws InvalidScene when a mesh or box vertex lies beyond far_m.
std::vector<std::array<Vec3, 3>> scene_triangles(const RenderScene& scene);

/// Z-buffer render of camera-frame z-depth. Misses get far_m; hits are
/// clamped to far_m. Equal depths resolve to the lowest triangle index,
/// so output is bitwise independent of tiling and thread count.
DepthMap render_depth(const RenderScene& scene, const CameraIntrinsics& cam,
                      const RenderOptions& opts = {});

/// Per-pixel exact ray/triangle intersection; test oracle for render_depth.
DepthMap render_depth_ray_oracle(const RenderScene& scene, const CameraIntrinsics& cam);

}  // namespace lc
