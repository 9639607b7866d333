#pragma once

#include <string>
#include <vector>

#include "loosectl/proxy.hpp"

namespace lc {

enum class ScaleAlignment {
    none,
    /// gen is rescaled by median(cond / gen) over pixels valid in both.
    median_ratio,
};

struct ExactCheckOptions {
    double tau_rel = 0.05;
    ScaleAlignment align = ScaleAlignment::median_ratio;
};

struct BoundaryCheckOptions {
    double tau_rel = 0.05;
    double eta = 0.01;
    ScaleAlignment align = ScaleAlignment::none;
};

struct BoxCheckOptions {
    double iou_theta = 0.5;
    std::size_t min_mask_area = kDefaultMinMaskArea;
    std::size_t iou_samples = 100000;
    std::uint64_t seed = 0;
};

struct BoxMatch {
    int specified = -1;
    int fitted = -1;  // -1 when unmatched
    double iou = 0.0;
    double center_distance_m = 0.0;
    double volume_ratio = 0.0;  // fitted / specified
};

struct ConditionReport {
    std::string mode;  // exact | boundary | boxes
    bool passed = false;
    double violation_fraction = 0.0;
    double mean_violation_m = 0.0;
    /// exact mode: mean |gen - cond| / cond after alignment.
    double mean_relative_error = 0.0;
    double scale = 1.0;
    std::size_t valid_pixels = 0;
    /// Same shape as the inputs; empty in boxes mode.
    std::vector<float> per_pixel_violation;
    int width = 0;
    int height = 0;
    std::vector<BoxMatch> matches;
    std::vector<OrientedBox3D> fitted_boxes;
};

/// Ordinary control: mean relative error within tau_rel.
ConditionReport check_exact(const DepthMap& gen, const DepthMap& cond,
                            const ExactCheckOptions& opts = {});

/// Upper-bound control: violation(p) = max(0, gen - (1 + tau_rel) cond);
/// passes when at most eta of the valid pixels violate.
ConditionReport check_boundary(const DepthMap& gen, const DepthMap& cond,
                               const BoundaryCheckOptions& opts = {});

/// Box control: boxes fitted on the generated depth/segments are greedily
/// matched to the specified boxes by descending IoU; passes when every
/// specified box has a match with IoU >= iou_theta.
ConditionReport check_boxes(const DepthMap& gen, const SegmentMap& gen_segments,
                            const std::vector<OrientedBox3D>& boxes,
                            const BoxCheckOptions& opts = {});

/// Greedy IoU assignment without reuse; pairs with IoU 0 are never matched.
std::vector<BoxMatch> greedy_match(const std::vector<OrientedBox3D>& specified,
                                   const std::vector<OrientedBox3D>& fitted,
                                   std::size_t samples = 100000, std::uint64_t seed = 0);

}  // namespace lc
