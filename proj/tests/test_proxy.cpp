#include <doctest.h>

#include <cmath>

#include "loosectl/error.hpp"
#include "loosectl/obb.hpp"
#include "loosectl/proxy.hpp"
#include "loosectl/scene.hpp"
#include "support.hpp"

using namespace lc;
using namespace lc::testing;

namespace {

SceneSpec rect_room() {
    SceneSpec s;
    s.camera.fov_deg = 50.0;
    s.camera.width = 96;
    s.camera.height = 96;
    s.footprint = Polygon2D{{{-2.5, -1.0}, {3.0, -1.0}, {3.0, 6.0}, {-2.5, 6.0}}};
    s.y_min = -1.3;
    s.y_max = 1.4;
    s.include_floor = true;
    s.include_ceiling = true;
    s.far_m = 30.0;
    canonicalize(s);
    return s;
}

double fraction_within(const DepthMap& a, const DepthMap& b, double tol) {
    std::size_t n = 0;
    for (std::size_t p = 0; p < a.size(); ++p) n += std::abs(a.data()[p] - b.data()[p]) <= tol;
    return static_cast<double>(n) / static_cast<double>(a.size());
}

BoundaryOptions with_ceiling() {
    BoundaryOptions o;
    o.include_ceiling = true;
    return o;
}

}  // namespace

TEST_SUITE("proxy") {

TEST_CASE("empty rectangular room reproduces its depth") {
    const SceneSpec room = rect_room();
    const DepthMap truth = oracle_depth(room);
    const BoundaryResult r = boundary_proxy(truth, with_ceiling());
    CHECK(fraction_within(r.condition, truth, 1e-3) >= 0.99);
    CHECK(r.condition.intrinsics() == truth.intrinsics());
    CHECK_NOTHROW(r.scene.footprint.validate());
    CHECK(r.scene.y_min == doctest::Approx(-1.3).epsilon(1e-6));
    CHECK(r.scene.include_ceiling);
}

TEST_CASE("a sofa is removed from the boundary condition") {
    SceneSpec room = rect_room();
    const DepthMap empty = oracle_depth(room);
    OrientedBox3D sofa;
    sofa.center = Vec3(0.4, -1.3 + 0.4, 3.5);
    sofa.half_extents = Vec3(0.9, 0.4, 0.45);
    sofa.yaw = 0.2;
    room.boxes.push_back(sofa);
    canonicalize(room);
    const DepthMap furnished = oracle_depth(room);
    const BoundaryResult r = boundary_proxy(furnished, with_ceiling());
    CHECK(fraction_within(r.condition, empty, 1e-3) >= 0.99);
    std::size_t above = 0;
    for (std::size_t p = 0; p < furnished.size(); ++p)
        above += r.condition.data()[p] >= furnished.data()[p] - 1e-3f;
    CHECK(above == furnished.size());
}

TEST_CASE("fronto-parallel wall is degenerate") {
    RenderScene s;
    TriangleMesh wall;
    wall.vertices = {{-10, -10, 4}, {10, -10, 4}, {10, 10, 4}, {-10, 10, 4}};
    wall.triangles = {{0, 1, 2}, {0, 2, 3}};
    s.meshes = {wall};
    const DepthMap d = render_depth(s, intrinsics_from_fov(50.0, 32, 32));
    CHECK_THROWS_AS(boundary_proxy(d), DegenerateInput);
}

TEST_CASE("too few valid pixels and bad options") {
    const auto cam = intrinsics_from_fov(50.0, 4, 4);
    std::vector<float> data(16, 0.0f);
    data[3] = 2.0f;
    CHECK_THROWS_AS(boundary_proxy(DepthMap(cam, data)), DegenerateInput);
    BoundaryOptions o;
    o.y_percentile_low = 60;
    o.y_percentile_high = 40;
    CHECK_THROWS_AS(boundary_proxy(DepthMap(cam, 2.0f), o), InvalidArgument);
    o = {};
    o.cell_m = -1;
    CHECK_THROWS_AS(boundary_proxy(DepthMap(cam, 2.0f), o), InvalidArgument);
}

TEST_CASE("boundary proxy is deterministic") {
    Rng rng(31);
    const Room room = random_room(rng, 64);
    const DepthMap d = render_scene(room.furnished);
    const BoundaryResult a = boundary_proxy(d), b = boundary_proxy(d);
    CHECK(std::equal(a.condition.data().begin(), a.condition.data().end(), b.condition.data().begin()));
}

TEST_CASE("floating cuboid with a perfect mask") {
    OrientedBox3D box;
    // Fully in view and close enough that the top face pins the back edge to a few mm.
    box.center = Vec3(0.2, -0.45, 1.5);
    box.half_extents = Vec3(0.4, 0.15, 0.15);
    const auto cam = intrinsics_from_fov(50.0, 1024, 1024);
    const DepthMap depth = render_boxes({box}, cam, 30.0);
    const SegmentMap seg = exact_masks({box}, cam, 30.0, depth);
    BoxProxyOptions o;
    o.min_mask_area = 100;
    const BoxPipelineResult r = box_proxy(depth, seg, o);
    REQUIRE(r.boxes.size() == 1);
    CHECK(r.boxes[0].segment_id == 1);
    CHECK((r.boxes[0].box.center - box.center).cwiseAbs().maxCoeff() <= 1e-2);
    CHECK((r.boxes[0].box.half_extents - box.half_extents).cwiseAbs().maxCoeff() <= 1e-2);
    const DepthMap analytic = render_depth_ray_oracle(RenderScene{{}, {box}, {}, {}, r.condition.max_depth()}, cam);
    // compare where both see the box
    std::size_t agree = 0, box_px = 0;
    for (std::size_t p = 0; p < depth.size(); ++p) {
        if (seg.labels[p] == 0) continue;
        ++box_px;
        agree += std::abs(r.condition.data()[p] - analytic.data()[p]) <= 1e-3f;
    }
    CHECK(static_cast<double>(agree) >= 0.99 * static_cast<double>(box_px));
}

TEST_CASE("segment below min area is skipped") {
    const auto cam = intrinsics_from_fov(50.0, 100, 100);
    std::vector<std::uint32_t> labels(10000, 0);
    for (std::size_t i = 0; i < 9999; ++i) labels[i] = 4;
    const BoxPipelineResult r = box_proxy(DepthMap(cam, 3.0f), SegmentMap(100, 100, labels));
    CHECK(r.boxes.empty());
    REQUIRE(r.skipped_segments.size() == 1);
    CHECK(r.skipped_segments[0].segment_id == 4);
    CHECK(r.skipped_segments[0].reason == "below-min-area");
    const float far = r.condition.data()[0];
    for (float v : r.condition.data()) CHECK(v == far);
}

TEST_CASE("degenerate segment is reported") {
    const auto cam = intrinsics_from_fov(50.0, 20, 20);
    std::vector<std::uint32_t> labels(400, 0);
    for (int u = 0; u < 20; ++u) labels[static_cast<std::size_t>(10 * 20 + u)] = 2;  // one row on a flat wall
    BoxProxyOptions o;
    o.min_mask_area = 5;
    const BoxPipelineResult r = box_proxy(DepthMap(cam, 3.0f), SegmentMap(20, 20, labels), o);
    REQUIRE(r.skipped_segments.size() == 1);
    CHECK(r.skipped_segments[0].reason == "degenerate");
}

TEST_CASE("two disjoint cuboids composite as a pixelwise min") {
    OrientedBox3D a, b;
    a.center = Vec3(-1.0, -0.8, 4.0);
    a.half_extents = Vec3(0.5, 0.4, 0.5);
    b.center = Vec3(1.0, -0.7, 5.0);
    b.half_extents = Vec3(0.6, 0.5, 0.4);
    b.yaw = 0.3;
    const auto cam = intrinsics_from_fov(55.0, 200, 200);
    const DepthMap depth = render_boxes({a, b}, cam, 30.0);
    BoxProxyOptions o;
    o.min_mask_area = 200;
    const BoxPipelineResult r = box_proxy(depth, exact_masks({a, b}, cam, 30.0, depth), o);
    REQUIRE(r.boxes.size() == 2);
    const double far = r.condition.max_depth();
    const DepthMap da = render_boxes({r.boxes[0].box}, cam, far);
    const DepthMap db = render_boxes({r.boxes[1].box}, cam, far);
    for (std::size_t p = 0; p < depth.size(); ++p)
        CHECK(r.condition.data()[p] == std::min(da.data()[p], db.data()[p]));
}

TEST_CASE("dimension mismatch") {
    const auto cam = intrinsics_from_fov(50.0, 10, 10);
    CHECK_THROWS_AS(box_proxy(DepthMap(cam, 1.0f), SegmentMap(10, 9, std::vector<std::uint32_t>(90, 0))),
                    InvalidArgument);
}

TEST_CASE("box round trip is idempotent") {
    Rng rng(32);
    for (int i = 0; i < 4; ++i) {
        const BoxScene bs = random_box_scene(rng, 384, 3000);
        BoxProxyOptions o;
        o.min_mask_area = 3000;
        const BoxPipelineResult first = box_proxy(bs.depth, bs.segments, o);
        std::vector<OrientedBox3D> fitted;
        for (const auto& fb : first.boxes) fitted.push_back(fb.box);
        const DepthMap again = render_boxes(fitted, bs.cam, bs.far_m);
        const BoxPipelineResult second = box_proxy(again, exact_masks(fitted, bs.cam, bs.far_m, again), o);
        REQUIRE(second.boxes.size() == first.boxes.size());
        for (std::size_t k = 0; k < fitted.size(); ++k)
            CHECK(obb_iou(fitted[k], second.boxes[k].box) >= 0.95);
    }
}

TEST_CASE("optional z trim") {
    OrientedBox3D box;
    box.center = Vec3(0.0, -0.8, 4.0);
    box.half_extents = Vec3(0.5, 0.4, 0.5);
    box.yaw = 0.3;
    const auto cam = intrinsics_from_fov(50.0, 256, 256);
    const DepthMap depth = render_boxes({box}, cam, 30.0);
    const SegmentMap seg = exact_masks({box}, cam, 30.0, depth);
    BoxProxyOptions o;
    o.min_mask_area = 100;
    const double plain = box_proxy(depth, seg, o).boxes.at(0).box.volume();
    o.k_mad = 3.0;
    const double trimmed = box_proxy(depth, seg, o).boxes.at(0).box.volume();
    CHECK(trimmed <= plain);
    CHECK(plain == doctest::Approx(box.volume()).epsilon(0.02));
}

}
