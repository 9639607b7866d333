#include "loosectl/service.hpp"

#include <httplib.h>

#include <charconv>
#include <cstdio>

#include "loosectl/codec.hpp"
#include "loosectl/conditions.hpp"
#include "loosectl/error.hpp"
#include "loosectl/proxy.hpp"
#include "loosectl/rng.hpp"
#include "loosectl/scene_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lc {

std::string scene_etag(const SceneSpec& scene) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "\"%016llx\"", static_cast<unsigned long long>(fnv1a64(dump_scene(scene))));
    return buf;
}

namespace {

std::string strip_etag(std::string_view tag) {
    if (tag.starts_with("W/")) tag.remove_prefix(2);
    if (tag.size() >= 2 && tag.front() == '"' && tag.back() == '"') tag = tag.substr(1, tag.size() - 2);
    return std::string(tag);
}

}  // namespace

std::shared_ptr<SceneStore::Slot> SceneStore::find(const std::string& id) const {
    std::shared_lock lock(map_mutex_);
    const auto it = slots_.find(id);
    return it == slots_.end() ? nullptr : it->second;
}

std::pair<std::string, std::string> SceneStore::create(SceneSpec scene) {
    auto slot = std::make_shared<Slot>();
    slot->value.etag = scene_etag(scene);
    slot->value.scene = std::move(scene);
    std::unique_lock lock(map_mutex_);
    std::string id;
    do {
        id = "scene-" + std::to_string(next_id_++);
    } while (slots_.count(id));
    slots_[id] = slot;
    return {id, slot->value.etag};
}

std::optional<SceneStore::Versioned> SceneStore::get(const std::string& id) const {
    const auto slot = find(id);
    if (!slot) return std::nullopt;
    std::shared_lock lock(slot->data_mutex);
    return slot->value;
}

SceneStore::UpdateResult SceneStore::update(const std::string& id, const std::string& if_match, SceneSpec scene) {
    const auto slot = find(id);
    if (!slot) return {UpdateStatus::not_found, {}};
    std::lock_guard write(slot->write_mutex);
    {
        std::shared_lock read(slot->data_mutex);
        if (strip_etag(if_match) != strip_etag(slot->value.etag)) return {UpdateStatus::conflict, slot->value.etag};
    }
    Versioned next{std::move(scene), {}};
    next.etag = scene_etag(next.scene);
    std::unique_lock lock(slot->data_mutex);
    slot->value = std::move(next);
    return {UpdateStatus::ok, slot->value.etag};
}

std::size_t SceneStore::size() const {
    std::shared_lock lock(map_mutex_);
    return slots_.size();
}

void SceneStore::save_snapshot(const fs::path& dir) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create snapshot directory " + dir.string() + ": " + ec.message());
    std::vector<std::pair<std::string, std::shared_ptr<Slot>>> copy;
    {
        std::shared_lock lock(map_mutex_);
        copy.assign(slots_.begin(), slots_.end());
    }
    for (const auto& [id, slot] : copy) {
        std::shared_lock lock(slot->data_mutex);
        save_scene(slot->value.scene, dir / (id + ".json"));
    }
}

void SceneStore::load_snapshot(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) return;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::unique_lock lock(map_mutex_);
    for (const auto& f : files) {
        auto slot = std::make_shared<Slot>();
        slot->value.scene = load_scene(f).scene;
        slot->value.etag = scene_etag(slot->value.scene);
        const std::string id = f.stem().string();
        slots_[id] = slot;
        std::size_t n = 0;
        if (id.starts_with("scene-")) {
            const char* first = id.data() + 6;
            const char* last = id.data() + id.size();
            if (std::from_chars(first, last, n).ptr == last) next_id_ = std::max(next_id_, n + 1);
        }
    }
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& message,
                const std::vector<ValidationIssue>& issues = {}) {
    json body{{"error", kind}, {"message", message}};
    if (!issues.empty()) body["issues"] = issues_to_json(issues);
    send_json(res, status, body);
}

// Multipart part or query parameter.
std::optional<std::string> field(const httplib::Request& req, const std::string& name) {
    if (req.has_file(name)) return req.get_file_value(name).content;
    if (req.has_param(name)) return req.get_param_value(name);
    return std::nullopt;
}

std::string required_field(const httplib::Request& req, const std::string& name) {
    auto v = field(req, name);
    if (!v) throw InvalidArgument("missing form field '" + name + "'");
    return *v;
}

double number_field(const std::string& name, const std::string& text) {
    double v = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto r = std::from_chars(first, last, v);
    if (r.ec != std::errc() || r.ptr != last) throw InvalidArgument("field '" + name + "' is not a number");
    return v;
}

std::optional<double> optional_number(const httplib::Request& req, const std::string& name) {
    if (auto v = field(req, name)) return number_field(name, *v);
    return std::nullopt;
}

bool flag_field(const httplib::Request& req, const std::string& name, bool fallback) {
    auto v = field(req, name);
    if (!v) return fallback;
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    throw InvalidArgument("field '" + name + "' must be true or false");
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// Camera from fov or fx/fy/cx/cy fields; nullopt when neither is given.
std::optional<CameraIntrinsics> camera_fields(const httplib::Request& req, int w, int h) {
    const auto fx = optional_number(req, "fx"), fy = optional_number(req, "fy");
    const auto cx = optional_number(req, "cx"), cy = optional_number(req, "cy");
    if (fx && fy && cx && cy) {
        CameraIntrinsics cam{w, h, *fx, *fy, *cx, *cy};
        cam.validate();
        return cam;
    }
    if (auto fov = optional_number(req, "fov")) return intrinsics_from_fov(*fov, w, h);
    return std::nullopt;
}

DepthMap depth_field(const httplib::Request& req, const std::string& name, bool need_camera) {
    const DecodedDepth decoded = decode_depth(as_bytes(required_field(req, name)));
    auto cam = camera_fields(req, decoded.width, decoded.height);
    const bool explicit_cam = cam.has_value();
    if (!cam && !decoded.intrinsics) {
        if (need_camera) throw InvalidArgument("field '" + name + "' needs fov or fx/fy/cx/cy");
        cam = intrinsics_from_fov(50.0, decoded.width, decoded.height);
    }
    return decoded.to_depth_map(cam, explicit_cam);
}

json condition_json(const DepthMap& depth, DepthFormat format) {
    return json{{"format", to_string(format)}, {"data_base64", base64_encode(encode_depth(depth, format))}};
}

DepthFormat format_field(const httplib::Request& req) {
    auto v = field(req, "format");
    return v ? parse_depth_format(*v) : DepthFormat::pfm;
}

ScaleAlignment align_field(const httplib::Request& req, ScaleAlignment fallback) {
    auto v = field(req, "align");
    if (!v) return fallback;
    if (*v == "none") return ScaleAlignment::none;
    if (*v == "median") return ScaleAlignment::median_ratio;
    throw InvalidArgument("align must be none or median");
}

std::optional<int> int_param(const httplib::Request& req, const std::string& name) {
    if (!req.has_param(name)) return std::nullopt;
    const std::string s = req.get_param_value(name);
    int v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || v <= 0 || v > 8192)
        throw InvalidArgument("query parameter '" + name + "' must be an integer in [1, 8192]");
    return v;
}

const char* content_type(DepthFormat f) { return f == DepthFormat::pfm ? "application/x-pfm" : "image/png"; }

}  // namespace

Service::Service(ServiceOptions opts) : opts_(std::move(opts)), server_(std::make_unique<httplib::Server>()) {
    if (opts_.snapshot_dir) store_.load_snapshot(*opts_.snapshot_dir);
    install_routes();
}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
    if (port == 0) return server_->bind_to_any_port(host);
    return server_->bind_to_port(host, port) ? port : -1;
}

bool Service::listen() { return server_->listen_after_bind(); }

void Service::stop() {
    if (server_) server_->stop();
}

void Service::shutdown_snapshot() const {
    if (opts_.snapshot_dir) store_.save_snapshot(*opts_.snapshot_dir);
}

void Service::install_routes() {
    auto& s = *server_;
    s.set_payload_max_length(opts_.max_payload_bytes);
    s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type, If-Match"},
                           {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"},
                           {"Access-Control-Expose-Headers", "ETag"}});

    s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const ValidationError& e) {
            send_error(res, 400, "validation", e.what(), e.issues());
        } catch (const DecodeError& e) {
            send_error(res, 400, "decode", e.what());
        } catch (const InvalidArgument& e) {
            send_error(res, 400, "invalid-argument", e.what());
        } catch (const InvalidScene& e) {
            send_error(res, 400, "invalid-scene", e.what());
        } catch (const DegenerateInput& e) {
            send_error(res, 422, "degenerate-input", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    });
    s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return;
        const char* kind = res.status == 404 ? "not-found" : res.status == 413 ? "payload-too-large" : "http";
        send_error(res, res.status, kind, httplib::status_message(res.status));
    });

    s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    s.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, json{{"version", kServiceVersion}, {"schema_version", kSceneSchemaVersion}});
    });

    s.Post("/api/scenes", [this](const httplib::Request& req, httplib::Response& res) {
        SceneLoadResult loaded = parse_scene(req.body);
        const auto [id, etag] = store_.create(std::move(loaded.scene));
        res.set_header("ETag", etag);
        send_json(res, 201, json{{"id", id}, {"etag", etag}, {"notes", loaded.notes}});
    });

    s.Get(R"(/api/scenes/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto v = store_.get(id);
        if (!v) return send_error(res, 404, "not-found", "unknown scene id " + id);
        res.set_header("ETag", v->etag);
        send_json(res, 200, json{{"id", id}, {"etag", v->etag}, {"scene", scene_to_json(v->scene)}});
    });

    s.Put(R"(/api/scenes/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        if (!store_.get(id)) return send_error(res, 404, "not-found", "unknown scene id " + id);
        if (!req.has_header("If-Match"))
            return send_error(res, 428, "precondition-required", "PUT needs an If-Match etag");
        SceneLoadResult loaded = parse_scene(req.body);
        const auto r = store_.update(id, req.get_header_value("If-Match"), std::move(loaded.scene));
        switch (r.status) {
            case SceneStore::UpdateStatus::not_found:
                return send_error(res, 404, "not-found", "unknown scene id " + id);
            case SceneStore::UpdateStatus::conflict:
                res.set_header("ETag", r.etag);
                return send_json(res, 409, json{{"error", "conflict"},
                                                {"message", "scene changed since the given etag"},
                                                {"etag", r.etag}});
            case SceneStore::UpdateStatus::ok:
                res.set_header("ETag", r.etag);
                return send_json(res, 200, json{{"id", id}, {"etag", r.etag}, {"notes", loaded.notes}});
        }
    });

    s.Get(R"(/api/scenes/([^/]+)/depth)", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto v = store_.get(id);
        if (!v) return send_error(res, 404, "not-found", "unknown scene id " + id);
        const DepthFormat format =
            req.has_param("format") ? parse_depth_format(req.get_param_value("format")) : DepthFormat::png16;
        const DepthMap depth = render_scene(v->scene, int_param(req, "width"), int_param(req, "height"));
        const Bytes bytes = encode_depth(depth, format);
        res.set_header("ETag", v->etag);
        res.status = 200;
        res.set_content(reinterpret_cast<const char*>(bytes.data()), bytes.size(), content_type(format));
    });

    s.Post("/api/extract/boundary", [](const httplib::Request& req, httplib::Response& res) {
        const DepthMap depth = depth_field(req, "depth", true);
        BoundaryOptions o;
        if (auto v = optional_number(req, "cell_m")) o.cell_m = *v;
        if (auto v = optional_number(req, "simplify_eps_cells")) o.simplify_eps_cells = *v;
        if (auto v = optional_number(req, "far_m")) o.far_m = *v;
        o.include_floor = flag_field(req, "include_floor", o.include_floor);
        o.include_ceiling = flag_field(req, "include_ceiling", o.include_ceiling);
        const BoundaryResult r = boundary_proxy(depth, o);
        send_json(res, 200, json{{"scene", scene_to_json(r.scene)}, {"condition", condition_json(r.condition, format_field(req))}});
    });

    s.Post("/api/extract/boxes", [](const httplib::Request& req, httplib::Response& res) {
        const DepthMap depth = depth_field(req, "depth", true);
        const SegmentMap seg = decode_segments(as_bytes(required_field(req, "segments")));
        BoxProxyOptions o;
        if (auto v = optional_number(req, "min_area")) {
            if (!(*v >= 0.0)) throw InvalidArgument("min_area must be non-negative");
            o.min_mask_area = static_cast<std::size_t>(*v);
        }
        if (auto v = optional_number(req, "far_m")) o.far_m = *v;
        o.k_mad = optional_number(req, "k_mad");
        const BoxPipelineResult r = box_proxy(depth, seg, o);
        json body = box_result_to_json(r);
        body["condition"] = condition_json(r.condition, format_field(req));
        send_json(res, 200, body);
    });

    s.Post(R"(/api/check/(exact|boundary|boxes))", [](const httplib::Request& req, httplib::Response& res) {
        const std::string mode = req.matches[1];
        ConditionReport report;
        if (mode == "exact") {
            ExactCheckOptions o;
            if (auto v = optional_number(req, "tau")) o.tau_rel = *v;
            o.align = align_field(req, o.align);
            report = check_exact(depth_field(req, "gen", false), depth_field(req, "cond", false), o);
        } else if (mode == "boundary") {
            BoundaryCheckOptions o;
            if (auto v = optional_number(req, "tau")) o.tau_rel = *v;
            if (auto v = optional_number(req, "eta")) o.eta = *v;
            o.align = align_field(req, o.align);
            report = check_boundary(depth_field(req, "gen", false), depth_field(req, "cond", false), o);
        } else {
            BoxCheckOptions o;
            if (auto v = optional_number(req, "iou_theta")) o.iou_theta = *v;
            if (auto v = optional_number(req, "min_area")) o.min_mask_area = static_cast<std::size_t>(*v);
            const json boxes_doc = json::parse(required_field(req, "boxes"), nullptr, false);
            if (boxes_doc.is_discarded()) throw InvalidArgument("field 'boxes' is not valid JSON");
            report = check_boxes(depth_field(req, "gen", true), decode_segments(as_bytes(required_field(req, "segments"))),
                                 boxes_from_json(boxes_doc), o);
        }
        send_json(res, 200, report_to_json(report));
    });
}

}  // namespace lc
