#pragma once

#include <optional>

#include "loosectl/geometry.hpp"

namespace lc {

struct FootprintOptions {
    double cell_m = 0.05;
    double simplify_eps_cells = 3.0;
    /// When set, the straight plan-view segment from this point to every
    /// observed point is known free space and is added to the occupancy.
    /// Pipelines pass the camera position here.
    std::optional<Vec2> viewpoint;
    /// Re-fit each simplified edge to the outermost input points it covers.
    bool refine_edges = true;
};

/// Plan-view boundary polygon of a cloud's orthographic (x, z) projection.
///
/// Occupancy grid at cell_m -> closing (radius 1 cell) -> largest
/// 8-connected component -> outer contour along cell edges ->
/// Douglas-Peucker with eps = simplify_eps_cells * cell_m -> optional
/// edge re-fit. Throws DegenerateInput when the cloud covers fewer than
/// three distinct cells.
Polygon2D extract_footprint_polygon(const PointCloud& cloud, const FootprintOptions& opts = {});

/// Douglas-Peucker on a closed ring. The first vertex is always kept.
std::vector<Vec2> simplify_closed_ring(const std::vector<Vec2>& ring, double eps);

}  // namespace lc
