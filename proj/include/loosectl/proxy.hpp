#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "loosectl/footprint.hpp"
#include "loosectl/scene.hpp"

namespace lc {

inline constexpr std::size_t kDefaultMinMaskArea = 10000;

struct BoundaryOptions {
    double cell_m = 0.05;
    double simplify_eps_cells = 3.0;
    bool include_floor = true;
    bool include_ceiling = false;
    double y_percentile_low = 1.0;
    double y_percentile_high = 99.0;
    /// Defaults to twice the largest input depth.
    std::optional<double> far_m;
    double max_edge_jump = 0.1;

    void validate() const;
};

struct BoundaryResult {
    DepthMap condition;
    SceneSpec scene;
};

/// Scene-boundary condition from an estimated depth map: back-project,
/// footprint polygon, extrude to walls, add floor/ceiling, render.
BoundaryResult boundary_proxy(const DepthMap& depth, const BoundaryOptions& opts = {});

struct FittedBox {
    OrientedBox3D box;
    std::uint32_t segment_id = 0;
};

struct SkippedSegment {
    std::uint32_t segment_id = 0;
    std::string reason;  // "below-min-area" | "degenerate"
};

struct BoxPipelineResult {
    DepthMap condition;
    std::vector<FittedBox> boxes;
    std::vector<SkippedSegment> skipped_segments;
};

struct BoxProxyOptions {
    std::size_t min_mask_area = kDefaultMinMaskArea;
    std::optional<double> k_mad;  // z-MAD trim before fitting; off when unset
    std::optional<double> far_m;
};

/// 3D-box condition: one yaw-only minimal box per large-enough segment,
/// rendered with the input intrinsics.
BoxPipelineResult box_proxy(const DepthMap& depth, const SegmentMap& segments,
                            const BoxProxyOptions& opts = {});

/// Boxes rendered from the input camera; shared by box_proxy and callers
/// that hold a box list.
DepthMap render_boxes(const std::vector<OrientedBox3D>& boxes, const CameraIntrinsics& cam,
                      double far_m);

}  // namespace lc
