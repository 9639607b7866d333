#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "loosectl/camera.hpp"

namespace lc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// World frame: camera at origin, x right, y up, z forward.
struct PointCloud {
    std::vector<Vec3> points;

    bool empty() const noexcept { return points.empty(); }
    std::size_t size() const noexcept { return points.size(); }
};

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
};

/// Plan-view polygon over (x, z), counter-clockwise, implicitly closed.
struct Polygon2D {
    std::vector<Vec2> vertices;

    /// Shoelace area, positive for counter-clockwise order.
    double signed_area() const;
    bool is_simple() const;
    /// Throws InvalidArgument unless >= 3 vertices, simple and CCW.
    void validate() const;
    bool contains(const Vec2& p) const;
    /// Euclidean distance from p to the polygon boundary.
    double boundary_distance(const Vec2& p) const;
};

/// Gravity-aligned cuboid. Local axis u = (cos yaw, sin yaw) in the (x, z)
/// plan carries half_extents.x(); w = (-sin yaw, cos yaw) carries
/// half_extents.z(). Yaw is kept in [-pi/4, pi/4) by canonical().
struct OrientedBox3D {
    Vec3 center = Vec3::Zero();
    Vec3 half_extents = Vec3::Constant(0.5);
    double yaw = 0.0;
    std::string label;

    /// Equivalent box with yaw in [-pi/4, pi/4); 90 degree turns swap hx/hz.
    OrientedBox3D canonical() const;
    double volume() const { return 8.0 * half_extents.prod(); }
    std::array<Vec3, 8> corners() const;
    /// Point in box-local coordinates (offset from center, rotated by -yaw).
    Vec3 to_local(const Vec3& p) const;
    bool contains(const Vec3& p, double tol = 0.0) const;
    /// Throws InvalidArgument on non-positive or non-finite extents.
    void validate() const;
};

/// Canonical-form comparison with an absolute tolerance.
bool same_box(const OrientedBox3D& a, const OrientedBox3D& b, double tol = 1e-9);

/// Lift valid pixels to camera-frame points, row-major scan order.
PointCloud backproject_depth(const DepthMap& depth);

/// Camera-frame point for pixel (u, v) at depth d.
Vec3 backproject_pixel(const CameraIntrinsics& cam, double u, double v, double d);

/// Grid mesh over valid pixels; triangles spanning a relative depth jump
/// larger than max_edge_jump are dropped.
TriangleMesh depth_to_mesh(const DepthMap& depth, double max_edge_jump = 0.1);

/// One vertical quad per polygon edge spanning [y_min, y_max].
TriangleMesh extrude_polygon_to_planes(const Polygon2D& poly, double y_min, double y_max);

/// MAD-based z outlier removal. Never returns an empty cloud.
PointCloud trim_outliers(const PointCloud& cloud, double k_mad = 3.0);

/// Linear-interpolated percentile (0..100) of a sample; values is copied.
double percentile(std::vector<double> values, double pct);

}  // namespace lc
