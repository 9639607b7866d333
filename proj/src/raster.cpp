#include "loosectl/raster.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "loosectl/error.hpp"

namespace lc {

namespace {

constexpr double kNearZ = 1e-4;
// Screen-space barycentric slack; pixels on shared edges and vertices are
// covered by every incident triangle.
constexpr double kCoverSlack = 1e-9;

using Tri = std::array<Vec3, 3>;

void append_quad(std::vector<Tri>& out, const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    out.push_back({a, b, c});
    out.push_back({a, c, d});
}

struct ScreenTri {
    std::size_t index;
    std::array<double, 3> su, sv, inv_z;
    double inv_area2;
    int u_lo, u_hi, v_lo, v_hi;
};

// Clip a triangle against z >= kNearZ; returns 0, 3 or 4 vertices.
std::vector<Vec3> clip_near(const Tri& t) {
    std::vector<Vec3> out;
    for (std::size_t i = 0; i < 3; ++i) {
        const Vec3& a = t[i];
        const Vec3& b = t[(i + 1) % 3];
        const bool ain = a.z() >= kNearZ;
        const bool bin = b.z() >= kNearZ;
        if (ain) out.push_back(a);
        if (ain != bin) {
            const double s = (kNearZ - a.z()) / (b.z() - a.z());
            Vec3 p = a + s * (b - a);
            p.z() = kNearZ;
            out.push_back(p);
        }
    }
    return out;
}

std::vector<ScreenTri> project_all(const std::vector<Tri>& tris, const CameraIntrinsics& cam) {
    std::vector<ScreenTri> out;
    out.reserve(tris.size());
    for (std::size_t idx = 0; idx < tris.size(); ++idx) {
        const Tri& t = tris[idx];
        if ((t[1] - t[0]).cross(t[2] - t[0]).norm() <= 2e-12) continue;
        const std::vector<Vec3> poly = clip_near(t);
        for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
            const std::array<const Vec3*, 3> p{&poly[0], &poly[k], &poly[k + 1]};
            ScreenTri s{};
            s.index = idx;
            double umin = std::numeric_limits<double>::infinity(), umax = -umin;
            double vmin = umin, vmax = -umin;
            for (std::size_t i = 0; i < 3; ++i) {
                s.inv_z[i] = 1.0 / p[i]->z();
                s.su[i] = cam.fx * p[i]->x() * s.inv_z[i] + cam.cx;
                s.sv[i] = cam.cy - cam.fy * p[i]->y() * s.inv_z[i];
                umin = std::min(umin, s.su[i]);
                umax = std::max(umax, s.su[i]);
                vmin = std::min(vmin, s.sv[i]);
                vmax = std::max(vmax, s.sv[i]);
            }
            const double area2 =
                (s.su[1] - s.su[0]) * (s.sv[2] - s.sv[0]) - (s.su[2] - s.su[0]) * (s.sv[1] - s.sv[0]);
            if (area2 == 0.0 || !std::isfinite(area2)) continue;
            s.inv_area2 = 1.0 / area2;
            auto clamp_px = [](double v, int hi) {
                return static_cast<int>(std::clamp(v, -1.0, static_cast<double>(hi) + 1.0));
            };
            s.u_lo = clamp_px(std::floor(umin), cam.width);
            s.u_hi = clamp_px(std::ceil(umax), cam.width);
            s.v_lo = clamp_px(std::floor(vmin), cam.height);
            s.v_hi = clamp_px(std::ceil(vmax), cam.height);
            if (s.u_hi < 0 || s.v_hi < 0 || s.u_lo >= cam.width || s.v_lo >= cam.height) continue;
            out.push_back(s);
        }
    }
    return out;
}

void raster_tile(const std::vector<ScreenTri>& tris, int u0, int v0, int u1, int v1,
                 std::vector<double>& zbuf, int width) {
    for (const ScreenTri& s : tris) {
        const int ua = std::max(u0, s.u_lo), ub = std::min(u1 - 1, s.u_hi);
        const int va = std::max(v0, s.v_lo), vb = std::min(v1 - 1, s.v_hi);
        for (int v = va; v <= vb; ++v) {
            for (int u = ua; u <= ub; ++u) {
                // Screen-space barycentrics of the sample point (u, v).
                const double l0 = ((s.su[1] - u) * (s.sv[2] - v) - (s.su[2] - u) * (s.sv[1] - v)) *
                                  s.inv_area2;
                const double l1 = ((s.su[2] - u) * (s.sv[0] - v) - (s.su[0] - u) * (s.sv[2] - v)) *
                                  s.inv_area2;
                const double l2 = 1.0 - l0 - l1;
                if (l0 < -kCoverSlack || l1 < -kCoverSlack || l2 < -kCoverSlack) continue;
                // Perspective-correct: 1/z is affine in screen space.
                const double inv_z = l0 * s.inv_z[0] + l1 * s.inv_z[1] + l2 * s.inv_z[2];
                if (!(inv_z > 0.0)) continue;
                const double z = 1.0 / inv_z;
                double& cell = zbuf[static_cast<std::size_t>(v) * width + u];
                if (z < cell) cell = z;
            }
        }
    }
}

void check_far(const Vec3& p, double far_m) {
    if (!p.allFinite()) throw InvalidScene("scene vertex is not finite");
    if (p.z() > far_m)
        throw InvalidScene("scene vertex at z = " + std::to_string(p.z()) + " lies beyond far_m = " +
                           std::to_string(far_m));
}

}  // namespace

TriangleMesh box_mesh(const OrientedBox3D& box) {
    TriangleMesh m;
    const auto c = box.corners();
    m.vertices.assign(c.begin(), c.end());
    constexpr std::array<std::array<int, 4>, 6> faces{{
        {0, 2, 6, 4}, {1, 3, 7, 5}, {0, 1, 5, 4}, {2, 3, 7, 6}, {0, 1, 3, 2}, {4, 5, 7, 6},
    }};
    for (const auto& f : faces) {
        m.triangles.push_back({f[0], f[1], f[2]});
        m.triangles.push_back({f[0], f[2], f[3]});
    }
    return m;
}

std::vector<Tri> scene_triangles(const RenderScene& scene) {
    if (!(scene.far_m > 0.0) || !std::isfinite(scene.far_m))
        throw InvalidScene("far_m must be positive and finite");
    std::vector<Tri> tris;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double zmin = xmin, zmax = -xmin;
    auto extend = [&](const Vec3& p) {
        xmin = std::min(xmin, p.x());
        xmax = std::max(xmax, p.x());
        zmin = std::min(zmin, p.z());
        zmax = std::max(zmax, p.z());
    };
    auto add_mesh = [&](const TriangleMesh& mesh) {
        for (const auto& v : mesh.vertices) {
            check_far(v, scene.far_m);
            extend(v);
        }
        const auto nv = static_cast<int>(mesh.vertices.size());
        for (const auto& t : mesh.triangles) {
            for (int i : t)
                if (i < 0 || i >= nv) throw InvalidScene("triangle index out of range");
            tris.push_back({mesh.vertices[static_cast<std::size_t>(t[0])],
                            mesh.vertices[static_cast<std::size_t>(t[1])],
                            mesh.vertices[static_cast<std::size_t>(t[2])]});
        }
    };
    for (const auto& m : scene.meshes) add_mesh(m);
    for (const auto& b : scene.boxes) {
        b.validate();
        add_mesh(box_mesh(b));
    }

    if (scene.floor_y || scene.ceiling_y) {
        if (!(xmax >= xmin)) {
            xmin = -scene.far_m;
            xmax = scene.far_m;
            zmin = 0.0;
            zmax = scene.far_m;
        }
        // The camera is part of the bound so the floor reaches under it.
        extend(Vec3::Zero());
        // 4x the plan bound, centered on it.
        const double cx = 0.5 * (xmin + xmax), cz = 0.5 * (zmin + zmax);
        const double hx = 2.0 * std::max(xmax - xmin, 1e-3);
        const double hz = 2.0 * std::max(zmax - zmin, 1e-3);
        for (const auto& y : {scene.floor_y, scene.ceiling_y}) {
            if (!y) continue;
            append_quad(tris, Vec3(cx - hx, *y, cz - hz), Vec3(cx + hx, *y, cz - hz),
                        Vec3(cx + hx, *y, cz + hz), Vec3(cx - hx, *y, cz + hz));
        }
    }
    return tris;
}

DepthMap render_depth(const RenderScene& scene, const CameraIntrinsics& cam, const RenderOptions& opts) {
    cam.validate();
    const std::vector<Tri> tris = scene_triangles(scene);
    const std::vector<ScreenTri> screen = project_all(tris, cam);

    const int w = cam.width, h = cam.height;
    std::vector<double> zbuf(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::infinity());
    const int tile = std::max(1, opts.tile_size);
    const int tiles_x = (w + tile - 1) / tile;
    const int tiles_y = (h + tile - 1) / tile;
    const int tile_count = tiles_x * tiles_y;

    std::atomic<int> next{0};
    auto worker = [&] {
        for (int t = next++; t < tile_count; t = next++) {
            const int tx = t % tiles_x, ty = t / tiles_x;
            raster_tile(screen, tx * tile, ty * tile, std::min(w, (tx + 1) * tile),
                        std::min(h, (ty + 1) * tile), zbuf, w);
        }
    };
    unsigned threads = opts.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opts.threads;
    threads = std::min<unsigned>(threads, static_cast<unsigned>(tile_count));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }

    std::vector<float> out(zbuf.size());
    for (std::size_t i = 0; i < zbuf.size(); ++i)
        out[i] = static_cast<float>(std::min(zbuf[i], scene.far_m));
    return DepthMap(cam, std::move(out));
}

DepthMap render_depth_ray_oracle(const RenderScene& scene, const CameraIntrinsics& cam) {
    cam.validate();
    const std::vector<Tri> tris = scene_triangles(scene);
    std::vector<float> out(static_cast<std::size_t>(cam.width) * cam.height);
    for (int v = 0; v < cam.height; ++v) {
        for (int u = 0; u < cam.width; ++u) {
            const Vec3 dir((u - cam.cx) / cam.fx, -(v - cam.cy) / cam.fy, 1.0);
            double best = std::numeric_limits<double>::infinity();
            for (const Tri& t : tris) {
                // Solve origin + s * dir = t0 + b1 (t1 - t0) + b2 (t2 - t0).
                const Vec3 e1 = t[1] - t[0];
                const Vec3 e2 = t[2] - t[0];
                if (e1.cross(e2).norm() <= 2e-12) continue;
                const Vec3 p = dir.cross(e2);
                const double det = e1.dot(p);
                if (std::abs(det) < 1e-15) continue;
                const double inv = 1.0 / det;
                const Vec3 s = -t[0];
                const double b1 = s.dot(p) * inv;
                if (b1 < -1e-12 || b1 > 1.0 + 1e-12) continue;
                const Vec3 q = s.cross(e1);
                const double b2 = dir.dot(q) * inv;
                if (b2 < -1e-12 || b1 + b2 > 1.0 + 1e-12) continue;
                const double depth = e2.dot(q) * inv;  // ray parameter == z since dir.z == 1
                if (depth > kNearZ && depth < best) best = depth;
            }
            out[static_cast<std::size_t>(v) * cam.width + u] =
                static_cast<float>(std::min(best, scene.far_m));
        }
    }
    return DepthMap(cam, std::move(out));
}

}  // namespace lc
