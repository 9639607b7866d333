#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "loosectl/geometry.hpp"

namespace lc {

/// Minimal-volume gravity-aligned box containing every point. The plan
/// rectangle is the minimal-area rectangle over the convex hull of the
/// (x, z) projection, which always has a side collinear with a hull edge.
/// Throws DegenerateInput on fewer than 3 points or a collinear plan.
OrientedBox3D fit_min_obb_yaw(const PointCloud& cloud);

/// Exhaustive yaw sweep at step_deg over [0, 90); validation mode.
OrientedBox3D fit_min_obb_yaw_sweep(const PointCloud& cloud, double step_deg = 0.1);

/// Box with an arbitrary rotation (columns of rotation are the local axes).
struct FreeBox {
    Vec3 center = Vec3::Zero();
    Vec3 half_extents = Vec3::Zero();
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();

    double volume() const { return 8.0 * half_extents.prod(); }
    bool contains(const Vec3& p, double tol = 0.0) const;
};

/// Unrestricted orientation search: 5 degree grid over three Euler angles,
/// then a local 0.5 degree refinement around the best candidate.
FreeBox fit_min_obb_sweep3d(const PointCloud& cloud);

enum class ObbMode { yaw_only, sweep3d };

/// Intersection over union. Equal canonical yaws use the exact
/// axis-aligned overlap in the shared frame; otherwise the intersection
/// volume is estimated by jittered stratified sampling of the union's
/// axis-aligned bound (samples >= 10000).
double obb_iou(const OrientedBox3D& a, const OrientedBox3D& b,
               std::size_t samples = 100000, std::uint64_t seed = 0);

/// The sampling estimator alone, regardless of yaw.
double obb_iou_sampled(const OrientedBox3D& a, const OrientedBox3D& b,
                       std::size_t samples = 100000, std::uint64_t seed = 0);

}  // namespace lc
