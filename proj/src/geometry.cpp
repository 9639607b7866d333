#include "loosectl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "loosectl/error.hpp"

namespace lc {

namespace {

constexpr double kPi = std::numbers::pi;

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

int orientation(const Vec2& a, const Vec2& b, const Vec2& c) {
    const double v = cross2(b - a, c - a);
    const double scale = std::max({(b - a).norm() * (c - a).norm(), 1e-300});
    if (std::abs(v) <= 1e-12 * scale) return 0;
    return v > 0 ? 1 : -1;
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
    return std::min(a.x(), b.x()) - 1e-12 <= p.x() && p.x() <= std::max(a.x(), b.x()) + 1e-12 &&
           std::min(a.y(), b.y()) - 1e-12 <= p.y() && p.y() <= std::max(a.y(), b.y()) + 1e-12;
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
    const int o1 = orientation(p1, p2, q1);
    const int o2 = orientation(p1, p2, q2);
    const int o3 = orientation(q1, q2, p1);
    const int o4 = orientation(q1, q2, p2);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(p1, p2, q1)) return true;
    if (o2 == 0 && on_segment(p1, p2, q2)) return true;
    if (o3 == 0 && on_segment(q1, q2, p1)) return true;
    if (o4 == 0 && on_segment(q1, q2, p2)) return true;
    return false;
}

double segment_distance(const Vec2& a, const Vec2& b, const Vec2& p) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (a + t * ab - p).norm();
}

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (n % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

}  // namespace

double Polygon2D::signed_area() const {
    double a = 0.0;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) a += cross2(vertices[i], vertices[(i + 1) % n]);
    return 0.5 * a;
}

bool Polygon2D::is_simple() const {
    const std::size_t n = vertices.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        if ((vertices[i] - vertices[(i + 1) % n]).norm() <= 1e-12) return false;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a1 = vertices[i];
        const Vec2& a2 = vertices[(i + 1) % n];
        for (std::size_t j = i + 1; j < n; ++j) {
            const Vec2& b1 = vertices[j];
            const Vec2& b2 = vertices[(j + 1) % n];
            const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if (adjacent) {
                // Adjacent edges share one vertex; they must not fold back onto each other.
                const Vec2& shared = (j == i + 1) ? a2 : a1;
                const Vec2& other_a = (j == i + 1) ? a1 : a2;
                const Vec2& other_b = (j == i + 1) ? b2 : b1;
                if (orientation(other_a, shared, other_b) == 0 &&
                    (other_a - shared).dot(other_b - shared) > 0.0)
                    return false;
                continue;
            }
            if (segments_intersect(a1, a2, b1, b2)) return false;
        }
    }
    return true;
}

void Polygon2D::validate() const {
    if (vertices.size() < 3) throw InvalidArgument("polygon needs at least 3 vertices");
    for (const auto& v : vertices) {
        if (!v.allFinite()) throw InvalidArgument("polygon vertices must be finite");
    }
    if (!is_simple()) throw InvalidArgument("polygon is not simple");
    if (!(signed_area() > 0.0)) throw InvalidArgument("polygon must be counter-clockwise");
}

bool Polygon2D::contains(const Vec2& p) const {
    bool inside = false;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = vertices[i];
        const Vec2& b = vertices[j];
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
            if (p.x() < x) inside = !inside;
        }
    }
    return inside;
}

double Polygon2D::boundary_distance(const Vec2& p) const {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i)
        best = std::min(best, segment_distance(vertices[i], vertices[(i + 1) % n], p));
    return best;
}

OrientedBox3D OrientedBox3D::canonical() const {
    OrientedBox3D out = *this;
    const double quarter = kPi / 2.0;
    auto k = static_cast<long long>(std::floor((yaw + kPi / 4.0) / quarter));
    double y = yaw - static_cast<double>(k) * quarter;
    if (y >= kPi / 4.0) {
        y -= quarter;
        ++k;
    } else if (y < -kPi / 4.0) {
        y += quarter;
        --k;
    }
    out.yaw = y;
    if (k % 2 != 0) std::swap(out.half_extents.x(), out.half_extents.z());
    return out;
}

Vec3 OrientedBox3D::to_local(const Vec3& p) const {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    const Vec3 d = p - center;
    return {d.x() * c + d.z() * s, d.y(), -d.x() * s + d.z() * c};
}

std::array<Vec3, 8> OrientedBox3D::corners() const {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    const Vec3 u(c * half_extents.x(), 0.0, s * half_extents.x());
    const Vec3 up(0.0, half_extents.y(), 0.0);
    const Vec3 w(-s * half_extents.z(), 0.0, c * half_extents.z());
    std::array<Vec3, 8> out;
    for (int i = 0; i < 8; ++i) {
        const double sx = (i & 1) ? 1.0 : -1.0;
        const double sy = (i & 2) ? 1.0 : -1.0;
        const double sz = (i & 4) ? 1.0 : -1.0;
        out[static_cast<std::size_t>(i)] = center + sx * u + sy * up + sz * w;
    }
    return out;
}

bool OrientedBox3D::contains(const Vec3& p, double tol) const {
    const Vec3 l = to_local(p);
    return std::abs(l.x()) <= half_extents.x() + tol && std::abs(l.y()) <= half_extents.y() + tol &&
           std::abs(l.z()) <= half_extents.z() + tol;
}

void OrientedBox3D::validate() const {
    if (!center.allFinite() || !half_extents.allFinite() || !std::isfinite(yaw))
        throw InvalidArgument("box fields must be finite");
    if (!(half_extents.minCoeff() > 0.0))
        throw InvalidArgument("box half extents must be strictly positive");
}

bool same_box(const OrientedBox3D& a, const OrientedBox3D& b, double tol) {
    const OrientedBox3D ca = a.canonical();
    OrientedBox3D cb = b.canonical();
    // Yaws on either side of the -pi/4 seam describe the same orientation.
    if (std::abs(ca.yaw - cb.yaw) > kPi / 4.0) {
        cb.yaw += (ca.yaw > cb.yaw) ? kPi / 2.0 : -kPi / 2.0;
        std::swap(cb.half_extents.x(), cb.half_extents.z());
    }
    return (ca.center - cb.center).cwiseAbs().maxCoeff() <= tol &&
           (ca.half_extents - cb.half_extents).cwiseAbs().maxCoeff() <= tol &&
           std::abs(ca.yaw - cb.yaw) <= tol;
}

Vec3 backproject_pixel(const CameraIntrinsics& cam, double u, double v, double d) {
    return {(u - cam.cx) * d / cam.fx, -(v - cam.cy) * d / cam.fy, d};
}

PointCloud backproject_depth(const DepthMap& depth) {
    PointCloud cloud;
    const auto& cam = depth.intrinsics();
    cloud.points.reserve(depth.size());
    for (int v = 0; v < depth.height(); ++v) {
        for (int u = 0; u < depth.width(); ++u) {
            const float d = depth.at(u, v);
            if (DepthMap::valid(d)) cloud.points.push_back(backproject_pixel(cam, u, v, d));
        }
    }
    return cloud;
}

TriangleMesh depth_to_mesh(const DepthMap& depth, double max_edge_jump) {
    if (!(max_edge_jump > 0.0)) throw InvalidArgument("max_edge_jump must be positive");
    const int w = depth.width();
    const int h = depth.height();
    const auto& cam = depth.intrinsics();
    TriangleMesh mesh;
    std::vector<int> vertex_of(depth.size(), -1);
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            const float d = depth.at(u, v);
            if (!DepthMap::valid(d)) continue;
            vertex_of[static_cast<std::size_t>(v) * w + u] = static_cast<int>(mesh.vertices.size());
            mesh.vertices.push_back(backproject_pixel(cam, u, v, d));
        }
    }

    auto pair_ok = [&](double a, double b) {
        return std::abs(a - b) <= max_edge_jump * std::min(a, b);
    };
    auto try_add = [&](std::array<std::pair<int, int>, 3> px) {
        std::array<int, 3> idx{};
        std::array<double, 3> d{};
        for (std::size_t k = 0; k < 3; ++k) {
            const auto [u, v] = px[k];
            idx[k] = vertex_of[static_cast<std::size_t>(v) * w + u];
            if (idx[k] < 0) return;
            d[k] = depth.at(u, v);
        }
        if (!pair_ok(d[0], d[1]) || !pair_ok(d[1], d[2]) || !pair_ok(d[0], d[2])) return;
        const Vec3& a = mesh.vertices[static_cast<std::size_t>(idx[0])];
        const Vec3& b = mesh.vertices[static_cast<std::size_t>(idx[1])];
        const Vec3& c = mesh.vertices[static_cast<std::size_t>(idx[2])];
        if (0.5 * (b - a).cross(c - a).norm() <= 1e-12) return;
        mesh.triangles.push_back(idx);
    };

    for (int v = 0; v + 1 < h; ++v) {
        for (int u = 0; u + 1 < w; ++u) {
            try_add({{{u, v}, {u + 1, v}, {u, v + 1}}});
            try_add({{{u + 1, v}, {u + 1, v + 1}, {u, v + 1}}});
        }
    }
    return mesh;
}

TriangleMesh extrude_polygon_to_planes(const Polygon2D& poly, double y_min, double y_max) {
    if (!(y_min < y_max)) throw InvalidArgument("extrusion requires y_min < y_max");
    if (poly.vertices.size() < 3) throw InvalidArgument("polygon needs at least 3 vertices");
    TriangleMesh mesh;
    const int n = static_cast<int>(poly.vertices.size());
    for (const auto& p : poly.vertices) {
        mesh.vertices.emplace_back(p.x(), y_min, p.y());
        mesh.vertices.emplace_back(p.x(), y_max, p.y());
    }
    for (int i = 0; i < n; ++i) {
        const int j = (i + 1) % n;
        mesh.triangles.push_back({2 * i, 2 * j, 2 * j + 1});
        mesh.triangles.push_back({2 * i, 2 * j + 1, 2 * i + 1});
    }
    return mesh;
}

PointCloud trim_outliers(const PointCloud& cloud, double k_mad) {
    if (cloud.empty()) return cloud;
    if (!(k_mad > 0.0)) throw InvalidArgument("k_mad must be positive");
    std::vector<double> z;
    z.reserve(cloud.size());
    for (const auto& p : cloud.points) z.push_back(p.z());
    const double med = median_of(z);
    std::vector<double> dev;
    dev.reserve(z.size());
    for (double v : z) dev.push_back(std::abs(v - med));
    const double mad = median_of(dev);
    if (mad == 0.0) return cloud;
    const double limit = k_mad * 1.4826 * mad;
    PointCloud out;
    for (const auto& p : cloud.points) {
        if (std::abs(p.z() - med) <= limit) out.points.push_back(p);
    }
    if (out.empty()) return cloud;
    return out;
}

double percentile(std::vector<double> values, double pct) {
    if (values.empty()) throw InvalidArgument("percentile of an empty sample");
    if (!(pct >= 0.0 && pct <= 100.0)) throw InvalidArgument("percentile must be in [0, 100]");
    std::sort(values.begin(), values.end());
    const double pos = pct / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double t = pos - static_cast<double>(lo);
    return values[lo] + t * (values[hi] - values[lo]);
}

}  // namespace lc
