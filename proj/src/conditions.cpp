#include "loosectl/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "loosectl/error.hpp"
#include "loosectl/obb.hpp"

namespace lc {

namespace {

void require_same_shape(const DepthMap& gen, const DepthMap& cond) {
    if (gen.width() != cond.width() || gen.height() != cond.height())
        throw InvalidArgument("generated and condition depth maps differ in size");
}

double alignment_scale(const DepthMap& gen, const DepthMap& cond, ScaleAlignment align) {
    if (align == ScaleAlignment::none) return 1.0;
    std::vector<double> ratios;
    const auto g = gen.data();
    const auto c = cond.data();
    for (std::size_t i = 0; i < g.size(); ++i)
        if (DepthMap::valid(g[i]) && DepthMap::valid(c[i])) ratios.push_back(double(c[i]) / double(g[i]));
    if (ratios.empty()) return 1.0;
    const std::size_t mid = ratios.size() / 2;
    std::nth_element(ratios.begin(), ratios.begin() + static_cast<std::ptrdiff_t>(mid), ratios.end());
    double m = ratios[mid];
    if (ratios.size() % 2 == 0)
        m = 0.5 * (m + *std::max_element(ratios.begin(), ratios.begin() + static_cast<std::ptrdiff_t>(mid)));
    return m;
}

}  // namespace

ConditionReport check_exact(const DepthMap& gen, const DepthMap& cond, const ExactCheckOptions& opts) {
    require_same_shape(gen, cond);
    if (!(opts.tau_rel > 0.0)) throw InvalidArgument("tau_rel must be positive");
    ConditionReport r;
    r.mode = "exact";
    r.width = gen.width();
    r.height = gen.height();
    r.scale = alignment_scale(gen, cond, opts.align);
    r.per_pixel_violation.assign(gen.size(), 0.0f);
    const auto g = gen.data();
    const auto c = cond.data();
    double sum_rel = 0.0, sum_abs = 0.0;
    std::size_t over = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!DepthMap::valid(g[i]) || !DepthMap::valid(c[i])) continue;
        const double err = std::abs(r.scale * g[i] - double(c[i]));
        const double rel = err / c[i];
        r.per_pixel_violation[i] = static_cast<float>(err);
        sum_rel += rel;
        sum_abs += err;
        if (rel > opts.tau_rel) ++over;
        ++r.valid_pixels;
    }
    if (r.valid_pixels == 0) throw InvalidArgument("no pixel is valid in both maps");
    const auto n = static_cast<double>(r.valid_pixels);
    r.mean_relative_error = sum_rel / n;
    r.mean_violation_m = sum_abs / n;
    r.violation_fraction = static_cast<double>(over) / n;
    r.passed = r.mean_relative_error <= opts.tau_rel;
    return r;
}

ConditionReport check_boundary(const DepthMap& gen, const DepthMap& cond, const BoundaryCheckOptions& opts) {
    require_same_shape(gen, cond);
    if (!(opts.tau_rel >= 0.0)) throw InvalidArgument("tau_rel must be non-negative");
    if (!(opts.eta >= 0.0 && opts.eta <= 1.0)) throw InvalidArgument("eta must lie in [0, 1]");
    ConditionReport r;
    r.mode = "boundary";
    r.width = gen.width();
    r.height = gen.height();
    r.scale = alignment_scale(gen, cond, opts.align);
    r.per_pixel_violation.assign(gen.size(), 0.0f);
    const auto g = gen.data();
    const auto c = cond.data();
    double sum = 0.0, sum_rel = 0.0;
    std::size_t violating = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!DepthMap::valid(g[i]) || !DepthMap::valid(c[i])) continue;
        const double aligned = r.scale * g[i];
        const double v = std::max(0.0, aligned - (1.0 + opts.tau_rel) * c[i]);
        r.per_pixel_violation[i] = static_cast<float>(v);
        sum += v;
        sum_rel += std::abs(aligned - c[i]) / c[i];
        if (v > 0.0) ++violating;
        ++r.valid_pixels;
    }
    if (r.valid_pixels == 0) throw InvalidArgument("no pixel is valid in both maps");
    const auto n = static_cast<double>(r.valid_pixels);
    r.violation_fraction = static_cast<double>(violating) / n;
    r.mean_violation_m = sum / n;
    r.mean_relative_error = sum_rel / n;
    r.passed = r.violation_fraction <= opts.eta;
    return r;
}

std::vector<BoxMatch> greedy_match(const std::vector<OrientedBox3D>& specified,
                                   const std::vector<OrientedBox3D>& fitted, std::size_t samples,
                                   std::uint64_t seed) {
    std::vector<std::tuple<double, int, int>> pairs;
    for (std::size_t i = 0; i < specified.size(); ++i)
        for (std::size_t j = 0; j < fitted.size(); ++j) {
            const double iou = obb_iou(specified[i], fitted[j], samples, seed);
            if (iou > 0.0) pairs.emplace_back(iou, static_cast<int>(i), static_cast<int>(j));
        }
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
        return std::tie(std::get<1>(a), std::get<2>(a)) < std::tie(std::get<1>(b), std::get<2>(b));
    });
    std::vector<BoxMatch> matches(specified.size());
    for (std::size_t i = 0; i < specified.size(); ++i) matches[i].specified = static_cast<int>(i);
    std::vector<bool> used(fitted.size(), false);
    for (const auto& [iou, i, j] : pairs) {
        auto& m = matches[static_cast<std::size_t>(i)];
        if (m.fitted >= 0 || used[static_cast<std::size_t>(j)]) continue;
        used[static_cast<std::size_t>(j)] = true;
        const auto& s = specified[static_cast<std::size_t>(i)];
        const auto& f = fitted[static_cast<std::size_t>(j)];
        m.fitted = j;
        m.iou = iou;
        m.center_distance_m = (s.center - f.center).norm();
        m.volume_ratio = f.volume() / s.volume();
    }
    return matches;
}

ConditionReport check_boxes(const DepthMap& gen, const SegmentMap& gen_segments,
                            const std::vector<OrientedBox3D>& boxes, const BoxCheckOptions& opts) {
    if (gen_segments.width != gen.width() || gen_segments.height != gen.height())
        throw InvalidArgument("segment map and depth map dimensions differ");
    if (!(opts.iou_theta >= 0.0 && opts.iou_theta <= 1.0))
        throw InvalidArgument("iou_theta must lie in [0, 1]");
    for (const auto& b : boxes) b.validate();
    ConditionReport r;
    r.mode = "boxes";
    r.width = gen.width();
    r.height = gen.height();
    BoxProxyOptions bo;
    bo.min_mask_area = opts.min_mask_area;
    const BoxPipelineResult fitted = box_proxy(gen, gen_segments, bo);
    for (const auto& fb : fitted.boxes) r.fitted_boxes.push_back(fb.box);
    r.matches = greedy_match(boxes, r.fitted_boxes, opts.iou_samples, opts.seed);

    std::size_t failing = 0;
    double dist = 0.0;
    std::size_t matched = 0;
    for (const auto& m : r.matches) {
        if (m.fitted < 0 || m.iou < opts.iou_theta) ++failing;
        if (m.fitted >= 0) {
            dist += m.center_distance_m;
            ++matched;
        }
    }
    r.violation_fraction = boxes.empty() ? 0.0 : static_cast<double>(failing) / static_cast<double>(boxes.size());
    r.mean_violation_m = matched ? dist / static_cast<double>(matched) : 0.0;
    r.passed = failing == 0;
    return r;
}

}  // namespace lc
