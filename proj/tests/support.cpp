#include "support.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>

#include "loosectl/codec.hpp"
#include "loosectl/raster.hpp"

namespace lc::testing {

namespace {

constexpr double kPi = std::numbers::pi;

double seg_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    return (a + t * ab - p).norm();
}

Polygon2D random_star_polygon(Rng& rng) {
    for (;;) {
        const int k = rng.uniform_int(4, 8);
        std::vector<double> angles(static_cast<std::size_t>(k));
        for (auto& a : angles) a = rng.uniform(0.0, 2.0 * kPi);
        std::sort(angles.begin(), angles.end());
        Polygon2D poly;
        for (double a : angles) {
            const double r = rng.uniform(4.0, 8.0);
            poly.vertices.emplace_back(r * std::cos(a), r * std::sin(a));
        }
        bool ok = true;
        for (int i = 0; i < k && ok; ++i) {
            const double gap = i + 1 < k ? angles[i + 1] - angles[i] : angles[0] + 2.0 * kPi - angles[i];
            if (gap >= kPi * 0.95) ok = false;
            const Vec2& prev = poly.vertices[static_cast<std::size_t>((i + k - 1) % k)];
            const Vec2& cur = poly.vertices[static_cast<std::size_t>(i)];
            const Vec2& next = poly.vertices[static_cast<std::size_t>((i + 1) % k)];
            if ((next - cur).norm() < 1.5) ok = false;
            if (seg_distance(Vec2::Zero(), cur, next) < 3.0) ok = false;
            const Vec2 d0 = (cur - prev).normalized(), d1 = (next - cur).normalized();
            const double turn = std::atan2(d0.x() * d1.y() - d0.y() * d1.x(), d0.dot(d1));
            if (std::abs(turn) < 20.0 * kPi / 180.0) ok = false;
        }
        if (ok && poly.is_simple() && poly.signed_area() > 0.0) return poly;
    }
}

double box_plan_radius(const OrientedBox3D& b) { return std::hypot(b.half_extents.x(), b.half_extents.z()); }

}  // namespace

Room random_room(Rng& rng, int size_px, int max_furniture) {
    Room room;
    SceneSpec& s = room.empty;
    s.camera.fov_deg = rng.uniform(43.0, 57.0);
    s.camera.width = size_px;
    s.camera.height = size_px;
    s.footprint = random_star_polygon(rng);
    s.y_min = -1.2;
    s.y_max = 1.4;
    s.include_floor = true;
    s.include_ceiling = true;
    s.far_m = 30.0;
    canonicalize(s);

    room.furnished = s;
    const int n = max_furniture > 0 ? rng.uniform_int(0, max_furniture) : 0;
    for (int placed = 0, attempts = 0; placed < n && attempts < 1000; ++attempts) {
        OrientedBox3D b;
        b.half_extents = Vec3(rng.uniform(0.2, 0.6), rng.uniform(0.2, 0.5), rng.uniform(0.2, 0.6));
        b.yaw = rng.uniform(-kPi / 4, kPi / 4);
        const double r = rng.uniform(2.0, 7.0), a = rng.uniform(0.0, 2.0 * kPi);
        b.center = Vec3(r * std::cos(a), s.y_min + b.half_extents.y(), r * std::sin(a));
        const Vec2 plan(b.center.x(), b.center.z());
        if (!s.footprint.contains(plan)) continue;
        if (s.footprint.boundary_distance(plan) < box_plan_radius(b) + 0.3) continue;
        if (plan.norm() < box_plan_radius(b) + 1.0) continue;
        b.label = "furniture " + std::to_string(placed);
        room.furnished.boxes.push_back(b);
        ++placed;
    }
    canonicalize(room.furnished);
    return room;
}

DepthMap oracle_depth(const SceneSpec& scene) {
    return render_depth_ray_oracle(scene.to_render_scene(), scene.camera.intrinsics());
}

SegmentMap exact_masks(const std::vector<OrientedBox3D>& boxes, const CameraIntrinsics& cam, double far_m,
                       const DepthMap& composite) {
    std::vector<std::uint32_t> labels(composite.size(), 0);
    const auto c = composite.data();
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        RenderScene solo;
        solo.boxes = {boxes[i]};
        solo.far_m = far_m;
        const DepthMap d = render_depth(solo, cam);
        const auto s = d.data();
        for (std::size_t p = 0; p < s.size(); ++p)
            if (s[p] < static_cast<float>(far_m) && s[p] == c[p]) labels[p] = static_cast<std::uint32_t>(i + 1);
    }
    return SegmentMap(cam.width, cam.height, std::move(labels));
}

BoxScene random_box_scene(Rng& rng, int size_px, std::size_t min_area) {
    for (;;) {
        BoxScene bs;
        bs.cam = intrinsics_from_fov(rng.uniform(43.0, 57.0), size_px, size_px);
        const int n = rng.uniform_int(1, 4);
        for (int i = 0; i < n; ++i) {
            OrientedBox3D b;
            b.half_extents = Vec3(rng.uniform(0.3, 0.8), rng.uniform(0.2, 0.6), rng.uniform(0.3, 0.8));
            b.yaw = rng.uniform(-kPi / 4, kPi / 4);
            const double z = rng.uniform(3.0, 6.0);
            const double x = rng.uniform(-0.3, 0.3) * z;
            const double top = rng.uniform(-0.25, -0.1) * z;
            b.center = Vec3(x, top - b.half_extents.y(), z);
            b.label = "box " + std::to_string(i);
            bs.boxes.push_back(b.canonical());
        }
        bool in_view = true;
        for (const auto& b : bs.boxes)
            for (const auto& c : b.corners()) {
                const double u = bs.cam.fx * c.x() / c.z() + bs.cam.cx;
                const double v = -bs.cam.fy * c.y() / c.z() + bs.cam.cy;
                in_view = in_view && c.z() > 0.5 && u >= 2.0 && u <= size_px - 3.0 && v >= 2.0 && v <= size_px - 3.0;
            }
        if (!in_view) continue;
        RenderScene rs;
        rs.boxes = bs.boxes;
        rs.far_m = bs.far_m;
        bs.depth = render_depth(rs, bs.cam);
        bs.segments = exact_masks(bs.boxes, bs.cam, bs.far_m, bs.depth);

        bool ok = true;
        for (std::size_t i = 0; i < bs.boxes.size() && ok; ++i) {
            RenderScene solo;
            solo.boxes = {bs.boxes[i]};
            solo.far_m = bs.far_m;
            const DepthMap d = render_depth(solo, bs.cam);
            std::size_t solo_area = 0, mask_area = 0;
            for (float v : d.data()) solo_area += v < static_cast<float>(bs.far_m);
            for (auto l : bs.segments.labels) mask_area += l == i + 1;
            ok = solo_area == mask_area && mask_area >= min_area;
        }
        if (ok) return bs;
    }
}

DepthMap random_depth_map(Rng& rng, int w, int h, double d_lo, double d_hi, double invalid_fraction) {
    std::vector<float> data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (auto& d : data)
        d = rng.uniform() < invalid_fraction ? 0.0f : static_cast<float>(rng.uniform(d_lo, d_hi));
    return DepthMap(intrinsics_from_fov(50.0, w, h), std::move(data));
}

TempDir::TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "lc-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

void write_sample_corpus(const std::filesystem::path& dir, int n, std::uint64_t seed, int size_px) {
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        const auto sample = dir / ("sample_" + std::to_string(i));
        std::filesystem::create_directories(sample);
        const Room room = random_room(rng, size_px, 2);
        const DepthMap depth = render_scene(room.furnished);
        write_file(sample / "depth.pfm", encode_depth(depth, DepthFormat::pfm));
        SegmentMap blank(size_px, size_px, std::vector<std::uint32_t>(static_cast<std::size_t>(size_px * size_px), 0));
        write_file(sample / "image.png", encode_segments(blank));
        write_file(sample / "segments.png", encode_segments(blank));
        write_text_file(sample / "caption.txt", "a room with " + std::to_string(room.furnished.boxes.size()) +
                                                    " pieces of furniture\n");
    }
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
    std::string out;
    char buf[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        out += buf;
    }
    return out;
}

}  // namespace lc::testing
