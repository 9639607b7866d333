#include "loosectl/scene_io.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "loosectl/codec.hpp"
#include "loosectl/error.hpp"

namespace lc {

using nlohmann::json;

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

class IssueSink {
public:
    void add(std::string pointer, std::string message) { issues_.push_back({std::move(pointer), std::move(message)}); }
    bool empty() const { return issues_.empty(); }
    bool has(const std::string& pointer) const {
        for (const auto& i : issues_)
            if (i.pointer == pointer) return true;
        return false;
    }
    std::vector<ValidationIssue>& issues() { return issues_; }

    std::optional<double> number(const json& obj, const std::string& key, const std::string& ptr, bool required) {
        if (!obj.contains(key)) {
            if (required) add(ptr + "/" + key, "missing required field");
            return std::nullopt;
        }
        const json& v = obj.at(key);
        if (!v.is_number()) {
            add(ptr + "/" + key, "expected a number");
            return std::nullopt;
        }
        const double d = v.get<double>();
        if (!std::isfinite(d)) {
            add(ptr + "/" + key, "expected a finite number");
            return std::nullopt;
        }
        return d;
    }

    std::optional<int> integer(const json& obj, const std::string& key, const std::string& ptr, bool required) {
        if (!obj.contains(key)) {
            if (required) add(ptr + "/" + key, "missing required field");
            return std::nullopt;
        }
        const json& v = obj.at(key);
        if (!v.is_number_integer()) {
            add(ptr + "/" + key, "expected an integer");
            return std::nullopt;
        }
        return v.get<int>();
    }

    std::optional<bool> boolean(const json& obj, const std::string& key, const std::string& ptr) {
        if (!obj.contains(key)) return std::nullopt;
        if (!obj.at(key).is_boolean()) {
            add(ptr + "/" + key, "expected a boolean");
            return std::nullopt;
        }
        return obj.at(key).get<bool>();
    }

    std::optional<Vec3> vec3(const json& obj, const std::string& key, const std::string& ptr) {
        if (!obj.contains(key)) {
            add(ptr + "/" + key, "missing required field");
            return std::nullopt;
        }
        const json& v = obj.at(key);
        if (!v.is_array() || v.size() != 3) {
            add(ptr + "/" + key, "expected an array of 3 numbers");
            return std::nullopt;
        }
        Vec3 out;
        for (int k = 0; k < 3; ++k) {
            if (!v[static_cast<std::size_t>(k)].is_number()) {
                add(ptr + "/" + key + "/" + std::to_string(k), "expected a number");
                return std::nullopt;
            }
            out[k] = v[static_cast<std::size_t>(k)].get<double>();
        }
        return out;
    }

    void unknown_keys(const json& obj, const std::string& ptr, std::initializer_list<const char*> allowed) {
        for (const auto& [key, _] : obj.items()) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || key == a;
            if (!ok) add(ptr + "/" + key, "unknown field");
        }
    }

private:
    std::vector<ValidationIssue> issues_;
};

std::optional<OrientedBox3D> parse_box(const json& j, const std::string& ptr, IssueSink& sink) {
    if (!j.is_object()) {
        sink.add(ptr, "expected an object");
        return std::nullopt;
    }
    sink.unknown_keys(j, ptr, {"center", "half_extents", "yaw_deg", "label", "segment_id"});
    OrientedBox3D box;
    const auto before = sink.issues().size();
    if (auto c = sink.vec3(j, "center", ptr)) box.center = *c;
    if (auto h = sink.vec3(j, "half_extents", ptr)) {
        box.half_extents = *h;
        if (!(h->minCoeff() > 0.0)) sink.add(ptr + "/half_extents", "half extents must be strictly positive");
    }
    if (auto y = sink.number(j, "yaw_deg", ptr, false)) box.yaw = *y / kDeg;
    if (j.contains("label")) {
        if (j.at("label").is_string())
            box.label = j.at("label").get<std::string>();
        else
            sink.add(ptr + "/label", "expected a string");
    }
    if (sink.issues().size() != before) return std::nullopt;
    return box;
}

json num(double v) { return canonical_float(v); }

json vec_json(const Vec3& v) { return json::array({num(v.x()), num(v.y()), num(v.z())}); }

}  // namespace

SceneLoadResult scene_from_json(const json& doc) {
    IssueSink sink;
    SceneLoadResult result;
    SceneSpec& s = result.scene;
    if (!doc.is_object()) throw ValidationError(std::vector<ValidationIssue>{{"", "scene document must be a JSON object"}});
    sink.unknown_keys(doc, "", {"version", "units", "camera", "footprint", "y_min", "y_max", "include_floor",
                                "include_ceiling", "far_m", "boxes"});

    if (auto v = sink.integer(doc, "version", "", true)) s.version = *v;
    if (doc.contains("units")) {
        if (doc["units"].is_string())
            s.units = doc["units"].get<std::string>();
        else
            sink.add("/units", "expected a string");
    }

    if (!doc.contains("camera")) {
        sink.add("/camera", "missing required field");
    } else if (!doc["camera"].is_object()) {
        sink.add("/camera", "expected an object");
    } else {
        const json& c = doc["camera"];
        sink.unknown_keys(c, "/camera", {"fov_deg", "width", "height", "fx", "fy", "cx", "cy"});
        if (auto v = sink.number(c, "fov_deg", "/camera", true)) s.camera.fov_deg = *v;
        if (auto v = sink.integer(c, "width", "/camera", true)) s.camera.width = *v;
        if (auto v = sink.integer(c, "height", "/camera", true)) s.camera.height = *v;
        s.camera.fx = sink.number(c, "fx", "/camera", false);
        s.camera.fy = sink.number(c, "fy", "/camera", false);
        s.camera.cx = sink.number(c, "cx", "/camera", false);
        s.camera.cy = sink.number(c, "cy", "/camera", false);
    }

    if (doc.contains("footprint")) {
        const json& f = doc["footprint"];
        if (!f.is_array()) {
            sink.add("/footprint", "expected an array of [x, z] pairs");
        } else {
            for (std::size_t i = 0; i < f.size(); ++i) {
                const json& p = f[i];
                if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
                    sink.add("/footprint/" + std::to_string(i), "expected [x, z]");
                    continue;
                }
                s.footprint.vertices.emplace_back(p[0].get<double>(), p[1].get<double>());
            }
        }
    }
    if (auto v = sink.number(doc, "y_min", "", false)) s.y_min = *v;
    if (auto v = sink.number(doc, "y_max", "", false)) s.y_max = *v;
    if (auto v = sink.boolean(doc, "include_floor", "")) s.include_floor = *v;
    if (auto v = sink.boolean(doc, "include_ceiling", "")) s.include_ceiling = *v;
    if (auto v = sink.number(doc, "far_m", "", false)) s.far_m = *v;

    if (doc.contains("boxes")) {
        const json& b = doc["boxes"];
        if (!b.is_array()) {
            sink.add("/boxes", "expected an array");
        } else {
            for (std::size_t i = 0; i < b.size(); ++i) {
                const std::string ptr = "/boxes/" + std::to_string(i);
                auto box = parse_box(b[i], ptr, sink);
                if (!box) continue;
                const OrientedBox3D canon = box->canonical();
                if (std::abs(canon.yaw - box->yaw) > 1e-12) {
                    std::ostringstream note;
                    note << ptr << "/yaw_deg: canonicalized from " << box->yaw * kDeg << " to "
                         << canonical_float(canon.yaw * kDeg);
                    if (canon.half_extents.x() != box->half_extents.x()) note << " (half extents x/z swapped)";
                    result.notes.push_back(note.str());
                }
                s.boxes.push_back(*box);
            }
        }
    }

    for (auto& issue : s.check())
        if (!sink.has(issue.pointer)) sink.add(issue.pointer, issue.message);
    if (!sink.empty()) throw ValidationError(std::move(sink.issues()));
    canonicalize(s);
    return result;
}

SceneLoadResult parse_scene(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::vector<ValidationIssue>{{"", std::string("invalid JSON: ") + e.what()}});
    }
    return scene_from_json(doc);
}

SceneLoadResult load_scene(const std::filesystem::path& path) {
    const Bytes bytes = read_file(path);
    return parse_scene(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

json box_to_json(const OrientedBox3D& box) {
    const OrientedBox3D c = box.canonical();
    return json{{"center", vec_json(c.center)},
                {"half_extents", vec_json(c.half_extents)},
                {"yaw_deg", num(c.yaw * kDeg)},
                {"label", c.label}};
}

json scene_to_json(const SceneSpec& scene) {
    json cam{{"fov_deg", num(scene.camera.fov_deg)},
             {"width", scene.camera.width},
             {"height", scene.camera.height}};
    if (scene.camera.fx) cam["fx"] = num(*scene.camera.fx);
    if (scene.camera.fy) cam["fy"] = num(*scene.camera.fy);
    if (scene.camera.cx) cam["cx"] = num(*scene.camera.cx);
    if (scene.camera.cy) cam["cy"] = num(*scene.camera.cy);
    json footprint = json::array();
    for (const auto& v : scene.footprint.vertices) footprint.push_back(json::array({num(v.x()), num(v.y())}));
    json boxes = json::array();
    for (const auto& b : scene.boxes) boxes.push_back(box_to_json(b));
    return json{{"version", scene.version},
                {"units", scene.units},
                {"camera", cam},
                {"footprint", footprint},
                {"y_min", num(scene.y_min)},
                {"y_max", num(scene.y_max)},
                {"include_floor", scene.include_floor},
                {"include_ceiling", scene.include_ceiling},
                {"far_m", num(scene.far_m)},
                {"boxes", boxes}};
}

std::string dump_scene(const SceneSpec& scene) { return scene_to_json(scene).dump(2) + "\n"; }

void save_scene(const SceneSpec& scene, const std::filesystem::path& path) {
    write_text_file(path, dump_scene(scene));
}

OrientedBox3D box_from_json(const json& j, const std::string& pointer) {
    IssueSink sink;
    auto box = parse_box(j, pointer, sink);
    if (!sink.empty()) throw ValidationError(std::move(sink.issues()));
    return *box;
}

json box_result_to_json(const BoxPipelineResult& result) {
    json boxes = json::array();
    for (const auto& fb : result.boxes) {
        json b = box_to_json(fb.box);
        b["segment_id"] = fb.segment_id;
        boxes.push_back(std::move(b));
    }
    json skipped = json::array();
    for (const auto& s : result.skipped_segments)
        skipped.push_back(json{{"segment_id", s.segment_id}, {"reason", s.reason}});
    return json{{"boxes", boxes}, {"skipped", skipped}};
}

std::vector<OrientedBox3D> boxes_from_json(const json& doc) {
    const json* list = &doc;
    std::string base;
    if (doc.is_object() && doc.contains("boxes")) {
        list = &doc["boxes"];
        base = "/boxes";
    }
    if (!list->is_array()) throw ValidationError(std::vector<ValidationIssue>{{base, "expected an array of boxes"}});
    IssueSink sink;
    std::vector<OrientedBox3D> out;
    for (std::size_t i = 0; i < list->size(); ++i) {
        const std::string ptr = base + "/" + std::to_string(i);
        if (auto b = parse_box((*list)[i], ptr, sink)) {
            try {
                b->validate();
                out.push_back(*b);
            } catch (const InvalidArgument& e) {
                sink.add(ptr, e.what());
            }
        }
    }
    if (!sink.empty()) throw ValidationError(std::move(sink.issues()));
    return out;
}

json report_to_json(const ConditionReport& r) {
    json j{{"mode", r.mode},
           {"passed", r.passed},
           {"violation_fraction", r.violation_fraction},
           {"mean_violation_m", r.mean_violation_m},
           {"mean_relative_error", r.mean_relative_error},
           {"scale", r.scale},
           {"valid_pixels", r.valid_pixels},
           {"width", r.width},
           {"height", r.height}};
    if (r.mode == "boxes") {
        json matches = json::array();
        for (const auto& m : r.matches) {
            json mj{{"specified", m.specified}, {"iou", m.iou}};
            if (m.fitted >= 0) {
                mj["fitted"] = m.fitted;
                mj["center_distance_m"] = m.center_distance_m;
                mj["volume_ratio"] = m.volume_ratio;
            } else {
                mj["fitted"] = nullptr;
            }
            matches.push_back(std::move(mj));
        }
        json fitted = json::array();
        for (const auto& b : r.fitted_boxes) fitted.push_back(box_to_json(b));
        j["matches"] = std::move(matches);
        j["fitted_boxes"] = std::move(fitted);
    }
    return j;
}

json issues_to_json(const std::vector<ValidationIssue>& issues) {
    json list = json::array();
    for (const auto& i : issues) list.push_back(json{{"pointer", i.pointer}, {"message", i.message}});
    return list;
}

}  // namespace lc
