#include "loosectl/obb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

#include "loosectl/error.hpp"
#include "loosectl/rng.hpp"

namespace lc {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kMinHalfExtent = 1e-9;

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Andrew's monotone chain, counter-clockwise, no collinear points.
std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Vec2> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

struct PlanRect {
    double yaw = 0.0;
    double u_min = 0, u_max = 0, w_min = 0, w_max = 0;
    double area() const { return (u_max - u_min) * (w_max - w_min); }
};

PlanRect rect_at(const std::vector<Vec2>& pts, double yaw) {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    PlanRect r;
    r.yaw = yaw;
    r.u_min = r.w_min = std::numeric_limits<double>::infinity();
    r.u_max = r.w_max = -std::numeric_limits<double>::infinity();
    for (const auto& p : pts) {
        const double u = p.x() * c + p.y() * s;
        const double w = -p.x() * s + p.y() * c;
        r.u_min = std::min(r.u_min, u);
        r.u_max = std::max(r.u_max, u);
        r.w_min = std::min(r.w_min, w);
        r.w_max = std::max(r.w_max, w);
    }
    return r;
}

struct PlanData {
    std::vector<Vec2> hull;
    double y_min = 0.0;
    double y_max = 0.0;
};

PlanData prepare(const PointCloud& cloud) {
    if (cloud.size() < 3) throw DegenerateInput("box fit needs at least 3 points");
    std::vector<Vec2> plan;
    plan.reserve(cloud.size());
    PlanData d;
    d.y_min = std::numeric_limits<double>::infinity();
    d.y_max = -d.y_min;
    for (const auto& p : cloud.points) {
        if (!p.allFinite()) throw InvalidArgument("cloud contains non-finite points");
        plan.emplace_back(p.x(), p.z());
        d.y_min = std::min(d.y_min, p.y());
        d.y_max = std::max(d.y_max, p.y());
    }
    d.hull = convex_hull(std::move(plan));
    if (d.hull.size() < 3) throw DegenerateInput("plan projection of the cloud is collinear");
    double area = 0.0;
    double extent = 0.0;
    for (std::size_t i = 0; i < d.hull.size(); ++i) {
        area += cross(d.hull[0], d.hull[i], d.hull[(i + 1) % d.hull.size()]);
        extent = std::max(extent, (d.hull[i] - d.hull[0]).norm());
    }
    if (0.5 * area <= 1e-12 * std::max(extent * extent, 1e-300))
        throw DegenerateInput("plan projection of the cloud is collinear");
    return d;
}

OrientedBox3D box_from_rect(const PlanRect& r, const PlanData& d) {
    const double c = std::cos(r.yaw);
    const double s = std::sin(r.yaw);
    const double um = 0.5 * (r.u_min + r.u_max);
    const double wm = 0.5 * (r.w_min + r.w_max);
    OrientedBox3D box;
    box.center = Vec3(um * c - wm * s, 0.5 * (d.y_min + d.y_max), um * s + wm * c);
    box.half_extents = Vec3(std::max(0.5 * (r.u_max - r.u_min), kMinHalfExtent),
                            std::max(0.5 * (d.y_max - d.y_min), kMinHalfExtent),
                            std::max(0.5 * (r.w_max - r.w_min), kMinHalfExtent));
    box.yaw = r.yaw;
    return box.canonical();
}

}  // namespace

OrientedBox3D fit_min_obb_yaw(const PointCloud& cloud) {
    const PlanData d = prepare(cloud);
    // The minimal-area enclosing rectangle of a convex polygon has a side
    // collinear with one of its edges; enumerate the edge directions.
    PlanRect best;
    double best_area = std::numeric_limits<double>::infinity();
    const std::size_t h = d.hull.size();
    for (std::size_t i = 0; i < h; ++i) {
        const Vec2 e = d.hull[(i + 1) % h] - d.hull[i];
        const PlanRect r = rect_at(d.hull, std::atan2(e.y(), e.x()));
        if (r.area() < best_area) {
            best_area = r.area();
            best = r;
        }
    }
    return box_from_rect(best, d);
}

OrientedBox3D fit_min_obb_yaw_sweep(const PointCloud& cloud, double step_deg) {
    if (!(step_deg > 0.0)) throw InvalidArgument("sweep step must be positive");
    const PlanData d = prepare(cloud);
    PlanRect best;
    double best_area = std::numeric_limits<double>::infinity();
    const int steps = static_cast<int>(std::ceil(90.0 / step_deg));
    for (int k = 0; k < steps; ++k) {
        const PlanRect r = rect_at(d.hull, k * step_deg * kDeg);
        if (r.area() < best_area) {
            best_area = r.area();
            best = r;
        }
    }
    return box_from_rect(best, d);
}

bool FreeBox::contains(const Vec3& p, double tol) const {
    const Vec3 l = rotation.transpose() * (p - center);
    return (l.cwiseAbs() - half_extents).maxCoeff() <= tol;
}

namespace {

Eigen::Matrix3d euler(double yaw, double pitch, double roll) {
    return (Eigen::AngleAxisd(yaw, Vec3::UnitY()) * Eigen::AngleAxisd(pitch, Vec3::UnitX()) *
            Eigen::AngleAxisd(roll, Vec3::UnitZ()))
        .toRotationMatrix();
}

FreeBox box_in_frame(const std::vector<Vec3>& pts, const Eigen::Matrix3d& R) {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const auto& p : pts) {
        const Vec3 l = R.transpose() * p;
        lo = lo.cwiseMin(l);
        hi = hi.cwiseMax(l);
    }
    FreeBox b;
    b.rotation = R;
    b.half_extents = (0.5 * (hi - lo)).cwiseMax(kMinHalfExtent);
    b.center = R * (0.5 * (lo + hi));
    return b;
}

}  // namespace

FreeBox fit_min_obb_sweep3d(const PointCloud& cloud) {
    const PlanData d = prepare(cloud);
    const OrientedBox3D yaw_box = fit_min_obb_yaw(cloud);
    double best_yaw = yaw_box.yaw, best_pitch = 0.0, best_roll = 0.0;
    FreeBox best = box_in_frame(cloud.points, euler(best_yaw, 0.0, 0.0));

    auto consider = [&](double y, double p, double r) {
        FreeBox b = box_in_frame(cloud.points, euler(y, p, r));
        if (b.volume() < best.volume()) {
            best = b;
            best_yaw = y;
            best_pitch = p;
            best_roll = r;
        }
    };
    for (int yi = 0; yi < 18; ++yi)
        for (int pi = -9; pi <= 9; ++pi)
            for (int ri = -9; ri <= 9; ++ri) consider(yi * 5 * kDeg, pi * 5 * kDeg, ri * 5 * kDeg);
    const double y0 = best_yaw, p0 = best_pitch, r0 = best_roll;
    for (int a = -10; a <= 10; ++a)
        for (int b = -10; b <= 10; ++b)
            for (int c = -10; c <= 10; ++c)
                consider(y0 + a * 0.5 * kDeg, p0 + b * 0.5 * kDeg, r0 + c * 0.5 * kDeg);
    (void)d;
    return best;
}

namespace {

double overlap_1d(double c1, double h1, double c2, double h2) {
    return std::max(0.0, std::min(c1 + h1, c2 + h2) - std::max(c1 - h1, c2 - h2));
}

}  // namespace

double obb_iou_sampled(const OrientedBox3D& a, const OrientedBox3D& b, std::size_t samples,
                       std::uint64_t seed) {
    if (samples < 10000) throw InvalidArgument("obb_iou needs at least 10000 samples");
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const auto* box : {&a, &b})
        for (const auto& c : box->corners()) {
            lo = lo.cwiseMin(c);
            hi = hi.cwiseMax(c);
        }
    const auto k = static_cast<int>(std::ceil(std::cbrt(static_cast<double>(samples))));
    const Vec3 step = (hi - lo) / k;
    Rng rng(mix64(seed));
    std::size_t both = 0;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            for (int l = 0; l < k; ++l) {
                const Vec3 p(lo.x() + (i + rng.uniform()) * step.x(),
                             lo.y() + (j + rng.uniform()) * step.y(),
                             lo.z() + (l + rng.uniform()) * step.z());
                if (a.contains(p) && b.contains(p)) ++both;
            }
    const double total = static_cast<double>(k) * k * k;
    const double inter = (hi - lo).prod() * static_cast<double>(both) / total;
    const double uni = a.volume() + b.volume() - inter;
    if (uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

double obb_iou(const OrientedBox3D& a, const OrientedBox3D& b, std::size_t samples,
               std::uint64_t seed) {
    if (samples < 10000) throw InvalidArgument("obb_iou needs at least 10000 samples");
    const OrientedBox3D ca = a.canonical();
    const OrientedBox3D cb = b.canonical();
    if (ca.yaw == cb.yaw) {
        // Shared frame: axis-aligned overlap of the local extents.
        const Vec3 rel = ca.to_local(cb.center);
        const double inter = overlap_1d(0.0, ca.half_extents.x(), rel.x(), cb.half_extents.x()) *
                             overlap_1d(0.0, ca.half_extents.y(), rel.y(), cb.half_extents.y()) *
                             overlap_1d(0.0, ca.half_extents.z(), rel.z(), cb.half_extents.z());
        const double uni = ca.volume() + cb.volume() - inter;
        return uni > 0.0 ? inter / uni : 0.0;
    }
    return obb_iou_sampled(ca, cb, samples, seed);
}

}  // namespace lc
