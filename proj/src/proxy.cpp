#include "loosectl/proxy.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Eigenvalues>

#include "loosectl/error.hpp"
#include "loosectl/obb.hpp"

namespace lc {

void BoundaryOptions::validate() const {
    if (!(cell_m > 0.0)) throw InvalidArgument("cell_m must be positive");
    if (!(simplify_eps_cells >= 0.0)) throw InvalidArgument("simplify_eps_cells must be >= 0");
    if (!(y_percentile_low >= 0.0 && y_percentile_low < y_percentile_high && y_percentile_high <= 100.0))
        throw InvalidArgument("y percentiles must satisfy 0 <= low < high <= 100");
    if (far_m && !(*far_m > 0.0)) throw InvalidArgument("far_m must be positive");
    if (!(max_edge_jump > 0.0)) throw InvalidArgument("max_edge_jump must be positive");
}

namespace {

bool plan_collinear(const PointCloud& cloud) {
    Vec2 mean = Vec2::Zero();
    for (const auto& p : cloud.points) mean += Vec2(p.x(), p.z());
    mean /= static_cast<double>(cloud.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& p : cloud.points) {
        const Vec2 d = Vec2(p.x(), p.z()) - mean;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    const double lmax = eig.eigenvalues()(1);
    return lmax <= 0.0 || eig.eigenvalues()(0) <= 1e-10 * lmax;
}

double default_far(float max_depth) { return std::max(2.0 * static_cast<double>(max_depth), 1.0); }

}  // namespace

BoundaryResult boundary_proxy(const DepthMap& depth, const BoundaryOptions& opts) {
    opts.validate();
    const PointCloud cloud = backproject_depth(depth);
    if (cloud.size() < 3) throw DegenerateInput("boundary extraction needs at least 3 valid pixels");
    if (plan_collinear(cloud))
        throw DegenerateInput("valid pixels project to collinear plan positions");

    FootprintOptions fo;
    fo.cell_m = opts.cell_m;
    fo.simplify_eps_cells = opts.simplify_eps_cells;
    fo.viewpoint = Vec2::Zero();
    const Polygon2D footprint = extract_footprint_polygon(cloud, fo);

    std::vector<double> ys;
    ys.reserve(cloud.size());
    for (const auto& p : cloud.points) ys.push_back(p.y());
    const double y_lo = percentile(ys, opts.y_percentile_low);
    const double y_hi = percentile(std::move(ys), opts.y_percentile_high);
    if (!(y_lo < y_hi)) throw DegenerateInput("scene has no vertical extent");

    double far = opts.far_m.value_or(default_far(depth.max_depth()));
    if (!opts.far_m) {
        for (const auto& v : footprint.vertices) far = std::max(far, 1.01 * v.y() + 1e-3);
    }

    BoundaryResult out;
    SceneSpec& scene = out.scene;
    scene.camera = SceneCamera::from_intrinsics(depth.intrinsics());
    scene.footprint = footprint;
    scene.y_min = y_lo;
    scene.y_max = y_hi;
    scene.include_floor = opts.include_floor;
    scene.include_ceiling = opts.include_ceiling;
    scene.far_m = far;
    canonicalize(scene);
    out.condition = render_scene(scene);
    return out;
}

DepthMap render_boxes(const std::vector<OrientedBox3D>& boxes, const CameraIntrinsics& cam, double far_m) {
    RenderScene rs;
    rs.boxes = boxes;
    rs.far_m = far_m;
    return render_depth(rs, cam);
}

BoxPipelineResult box_proxy(const DepthMap& depth, const SegmentMap& segments, const BoxProxyOptions& opts) {
    if (segments.width != depth.width() || segments.height != depth.height())
        throw InvalidArgument("segment map and depth map dimensions differ");

    std::map<std::uint32_t, std::vector<std::size_t>> pixels;
    for (std::size_t i = 0; i < segments.labels.size(); ++i) {
        const std::uint32_t id = segments.labels[i];
        if (id != 0) pixels[id].push_back(i);
    }

    BoxPipelineResult out;
    const auto& cam = depth.intrinsics();
    const auto data = depth.data();
    for (const auto& [id, idx] : pixels) {
        if (idx.size() < opts.min_mask_area) {
            out.skipped_segments.push_back({id, "below-min-area"});
            continue;
        }
        PointCloud cloud;
        cloud.points.reserve(idx.size());
        for (std::size_t i : idx) {
            const float d = data[i];
            if (!DepthMap::valid(d)) continue;
            const auto u = static_cast<double>(i % static_cast<std::size_t>(cam.width));
            const auto v = static_cast<double>(i / static_cast<std::size_t>(cam.width));
            cloud.points.push_back(backproject_pixel(cam, u, v, d));
        }
        try {
            OrientedBox3D box = fit_min_obb_yaw(opts.k_mad ? trim_outliers(cloud, *opts.k_mad) : cloud);
            box.label = "segment " + std::to_string(id);
            out.boxes.push_back({std::move(box), id});
        } catch (const DegenerateInput&) {
            out.skipped_segments.push_back({id, "degenerate"});
        }
    }

    double far = opts.far_m.value_or(default_far(depth.max_depth()));
    std::vector<OrientedBox3D> boxes;
    for (const auto& fb : out.boxes) {
        boxes.push_back(fb.box);
        if (!opts.far_m)
            for (const auto& c : fb.box.corners()) far = std::max(far, 1.01 * c.z() + 1e-3);
    }
    out.condition = render_boxes(boxes, cam, far);
    return out;
}

}  // namespace lc
