#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "loosectl/codec.hpp"
#include "loosectl/error.hpp"
#include "loosectl/rng.hpp"
#include "loosectl/scene_io.hpp"
#include "support.hpp"

using namespace lc;
using nlohmann::json;

namespace {

std::string fixture_text() {
    const Bytes b = read_file(std::filesystem::path(LC_TEST_DATA_DIR) / "minimal_scene.json");
    return {b.begin(), b.end()};
}

bool has_pointer(const ValidationError& e, const std::string& ptr) {
    return std::any_of(e.issues().begin(), e.issues().end(), [&](const auto& i) { return i.pointer == ptr; });
}

std::vector<ValidationIssue> issues_of(const json& doc) {
    try {
        scene_from_json(doc);
    } catch (const ValidationError& e) {
        return e.issues();
    }
    return {};
}

}  // namespace

TEST_SUITE("scene_io") {

TEST_CASE("minimal scene loads and re-saves byte identical") {
    const std::string text = fixture_text();
    const SceneLoadResult r = parse_scene(text);
    CHECK(r.notes.empty());
    CHECK(r.scene.footprint.vertices.size() == 4);
    CHECK(r.scene.camera.width == 64);
    CHECK(dump_scene(r.scene) == text);
}

TEST_CASE("yaw is canonicalized with a note") {
    json doc = json::parse(fixture_text());
    doc["boxes"] = json::array({json{{"center", {0, -1, 3}}, {"half_extents", {0.5, 0.5, 0.3}}, {"yaw_deg", 200}}});
    const SceneLoadResult r = scene_from_json(doc);
    REQUIRE(r.notes.size() == 1);
    CHECK(r.notes[0].find("/boxes/0/yaw_deg") == 0);
    const double yaw_deg = r.scene.boxes[0].yaw * 180.0 / 3.14159265358979323846;
    CHECK(yaw_deg >= -45.0);
    CHECK(yaw_deg < 45.0);
    CHECK(yaw_deg == doctest::Approx(20.0));
    // reloading the canonical document is quiet
    CHECK(parse_scene(dump_scene(r.scene)).notes.empty());
}

TEST_CASE("self-intersecting footprint names /footprint") {
    json doc = json::parse(fixture_text());
    doc["footprint"] = {{0, 0}, {2, 2}, {2, 0}, {0, 2}};
    try {
        scene_from_json(doc);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(has_pointer(e, "/footprint"));
    }
}

TEST_CASE("every violation is reported at once") {
    json doc = json::parse(fixture_text());
    doc["camera"]["width"] = -3;
    doc["y_max"] = -5.0;
    doc["units"] = "feet";
    doc["extra"] = 1;
    doc["boxes"] = json::array({json{{"center", {0, 0}}, {"half_extents", {1, 0, 1}}}});
    const auto issues = issues_of(doc);
    std::vector<std::string> ptrs;
    for (const auto& i : issues) ptrs.push_back(i.pointer);
    for (const char* p : {"/camera/width", "/y_max", "/units", "/extra", "/boxes/0/center", "/boxes/0/half_extents"})
        CHECK_MESSAGE(std::find(ptrs.begin(), ptrs.end(), p) != ptrs.end(), p);
}

TEST_CASE("newer schema versions are rejected") {
    json doc = json::parse(fixture_text());
    doc["version"] = kSceneSchemaVersion + 1;
    const auto issues = issues_of(doc);
    REQUIRE_FALSE(issues.empty());
    CHECK(issues[0].pointer == "/version");
}

TEST_CASE("invalid JSON text") {
    CHECK_THROWS_AS(parse_scene("{not json"), ValidationError);
    CHECK_THROWS_AS(load_scene("/nonexistent/scene.json"), IoError);
}

TEST_CASE("random scenes round trip through the canonical form") {
    Rng rng(60);
    for (int i = 0; i < 20; ++i) {
        const testing::Room room = testing::random_room(rng, 64);
        const std::string once = dump_scene(room.furnished);
        const SceneLoadResult r = parse_scene(once);
        CHECK(dump_scene(r.scene) == once);
        const DepthMap a = render_scene(room.furnished), b = render_scene(r.scene);
        CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
    }
}

TEST_CASE("explicit camera intrinsics round trip") {
    SceneSpec s = parse_scene(fixture_text()).scene;
    s.camera = SceneCamera::from_intrinsics(CameraIntrinsics{64, 48, 70.0, 71.0, 30.5, 25.0});
    const SceneSpec r = parse_scene(dump_scene(s)).scene;
    const CameraIntrinsics cam = r.camera.intrinsics();
    CHECK(cam.fx == 70.0);
    CHECK(cam.fy == 71.0);
    CHECK(cam.cx == 30.5);
    CHECK(cam.cy == 25.0);
    json doc = scene_to_json(s);
    doc["camera"].erase("cy");
    CHECK_FALSE(issues_of(doc).empty());
}

TEST_CASE("box documents") {
    OrientedBox3D b;
    b.center = Vec3(1, 2, 3);
    b.half_extents = Vec3(0.5, 0.25, 0.75);
    b.yaw = 0.1;
    b.label = "chair";
    const OrientedBox3D r = box_from_json(box_to_json(b));
    CHECK((r.center - b.center).norm() < 1e-8);
    CHECK(r.yaw == doctest::Approx(0.1));
    CHECK(r.label == "chair");
    const auto list = boxes_from_json(json{{"boxes", {box_to_json(b), box_to_json(b)}}});
    CHECK(list.size() == 2);
    CHECK(boxes_from_json(json::array({box_to_json(b)})).size() == 1);
    try {
        boxes_from_json(json::array({box_to_json(b), json{{"center", {0, 0, 0}}}}));
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(has_pointer(e, "/1/half_extents"));
    }
}

TEST_CASE("pipeline and report documents") {
    BoxPipelineResult res{DepthMap(intrinsics_from_fov(50, 2, 2), 1.0f), {}, {}};
    FittedBox fb;
    fb.segment_id = 7;
    res.boxes.push_back(fb);
    res.skipped_segments.push_back({3, "below-min-area"});
    const json j = box_result_to_json(res);
    CHECK(j["boxes"][0]["segment_id"] == 7);
    CHECK(j["skipped"][0]["reason"] == "below-min-area");
    CHECK(boxes_from_json(j).size() == 1);

    ConditionReport rep;
    rep.mode = "boundary";
    rep.passed = true;
    rep.per_pixel_violation = {0, 1, 2};
    const json rj = report_to_json(rep);
    CHECK(rj["passed"] == true);
    CHECK_FALSE(rj.contains("per_pixel_violation"));

    const json ij = issues_to_json({{"/a", "bad"}});
    CHECK(ij[0]["pointer"] == "/a");
    CHECK(ij[0]["message"] == "bad");
}

}
