#include "loosectl/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdlib>
#include <functional>
#include <optional>
#include <ostream>

#include <nlohmann/json.hpp>

#include "loosectl/codec.hpp"
#include "loosectl/conditions.hpp"
#include "loosectl/dataset.hpp"
#include "loosectl/edit.hpp"
#include "loosectl/error.hpp"
#include "loosectl/proxy.hpp"
#include "loosectl/scene_io.hpp"
#include "loosectl/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lc {

namespace {

struct CameraArgs {
    std::optional<double> fov;
    std::optional<std::string> intrinsics;

    void add(CLI::App* app) {
        app->add_option("--fov", fov, "Horizontal field of view in degrees");
        app->add_option("--intrinsics", intrinsics, "JSON file with fx, fy, cx, cy (or fov_deg)")
            ->check(CLI::ExistingFile);
    }

    std::optional<CameraIntrinsics> resolve(int w, int h) const {
        if (intrinsics) {
            const Bytes b = read_file(*intrinsics);
            const json j = json::parse(std::string(b.begin(), b.end()), nullptr, false);
            if (!j.is_object()) throw InvalidArgument("intrinsics file is not a JSON object");
            if (j.contains("fov_deg")) return intrinsics_from_fov(j["fov_deg"].get<double>(), w, h);
            CameraIntrinsics cam{w, h, j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
                                 j.at("cy").get<double>()};
            cam.validate();
            return cam;
        }
        if (fov) return intrinsics_from_fov(*fov, w, h);
        return std::nullopt;
    }
};

DepthMap load_depth(const std::string& path, const CameraArgs& cam, bool need_camera) {
    const DecodedDepth decoded = decode_depth(read_file(path));
    auto explicit_cam = cam.resolve(decoded.width, decoded.height);
    if (!explicit_cam && !decoded.intrinsics) {
        if (need_camera) throw InvalidArgument(path + " carries no intrinsics; pass --fov or --intrinsics");
        explicit_cam = intrinsics_from_fov(50.0, decoded.width, decoded.height);
        return decoded.to_depth_map(explicit_cam, true);
    }
    return decoded.to_depth_map(explicit_cam, explicit_cam.has_value());
}

std::optional<double> env_far() {
    const char* v = std::getenv("LC_FAR_M");
    if (!v || !*v) return std::nullopt;
    char* end = nullptr;
    const double d = std::strtod(v, &end);
    if (*end != '\0' || !(d > 0.0)) throw InvalidArgument("LC_FAR_M must be a positive number");
    return d;
}

ScaleAlignment parse_align(const std::string& s) {
    return s == "none" ? ScaleAlignment::none : ScaleAlignment::median_ratio;
}

json matrix_columns(const Matrix& M) {
    json cols = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
        json col = json::array();
        for (Eigen::Index r = 0; r < M.rows(); ++r) col.push_back(M(r, c));
        cols.push_back(std::move(col));
    }
    return cols;
}

std::atomic<Service*> g_service{nullptr};

extern "C" void on_stop_signal(int) {
    if (Service* s = g_service.load()) s->stop();
}

const std::vector<std::string> kFormats{"pfm", "png16", "png8inv"};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Loose depth control toolkit: proxy conditions, checks, rendering and editing numerics", "lc"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kServiceVersion);
    std::function<int()> action;

    // boundary
    struct {
        std::string depth, out_cond, out_scene, format = "pfm";
        CameraArgs cam;
        BoundaryOptions opts;
        std::optional<double> far;
        bool no_floor = false;
    } b;
    auto* boundary = app.add_subcommand("boundary", "Scene-boundary condition from a depth map");
    boundary->add_option("--depth", b.depth, "Input depth (pfm or png)")->required()->check(CLI::ExistingFile);
    b.cam.add(boundary);
    boundary->add_option("--cell-m", b.opts.cell_m, "Occupancy grid cell size in meters")->capture_default_str();
    boundary->add_option("--eps-cells", b.opts.simplify_eps_cells, "Simplification tolerance in cells")
        ->capture_default_str();
    boundary->add_flag("--no-floor", b.no_floor, "Leave the floor out of the condition");
    boundary->add_flag("--ceiling", b.opts.include_ceiling, "Render the ceiling plane");
    boundary->add_option("--far-m", b.far, "Far plane (default: LC_FAR_M or twice the largest depth)");
    boundary->add_option("--format", b.format, "Condition encoding")->check(CLI::IsMember(kFormats));
    boundary->add_option("--out-cond", b.out_cond, "Condition depth output")->required();
    boundary->add_option("--out-scene", b.out_scene, "Scene file output")->required();
    boundary->callback([&] {
        action = [&] {
            b.opts.include_floor = !b.no_floor;
            b.opts.far_m = b.far ? b.far : env_far();
            const DepthMap depth = load_depth(b.depth, b.cam, true);
            const BoundaryResult r = boundary_proxy(depth, b.opts);
            write_file(b.out_cond, encode_depth(r.condition, parse_depth_format(b.format)));
            save_scene(r.scene, b.out_scene);
            return 0;
        };
    });

    // boxes
    struct {
        std::string depth, segments, out_cond, out_boxes, format = "pfm";
        CameraArgs cam;
        BoxProxyOptions opts;
        std::optional<double> far;
    } x;
    auto* boxes = app.add_subcommand("boxes", "3D-box condition from depth and segments");
    boxes->add_option("--depth", x.depth, "Input depth (pfm or png)")->required()->check(CLI::ExistingFile);
    boxes->add_option("--segments", x.segments, "Segment id PNG")->required()->check(CLI::ExistingFile);
    x.cam.add(boxes);
    boxes->add_option("--min-area", x.opts.min_mask_area, "Minimum mask area in pixels")->capture_default_str();
    boxes->add_option("--k-mad", x.opts.k_mad, "Trim points beyond this many MADs in z before fitting");
    boxes->add_option("--far-m", x.far, "Far plane (default: LC_FAR_M or twice the largest depth)");
    boxes->add_option("--format", x.format, "Condition encoding")->check(CLI::IsMember(kFormats));
    boxes->add_option("--out-cond", x.out_cond, "Condition depth output")->required();
    boxes->add_option("--out-boxes", x.out_boxes, "Fitted boxes JSON output")->required();
    boxes->callback([&] {
        action = [&] {
            x.opts.far_m = x.far ? x.far : env_far();
            const DepthMap depth = load_depth(x.depth, x.cam, true);
            const SegmentMap seg = decode_segments(read_file(x.segments));
            const BoxPipelineResult r = box_proxy(depth, seg, x.opts);
            write_file(x.out_cond, encode_depth(r.condition, parse_depth_format(x.format)));
            write_text_file(x.out_boxes, box_result_to_json(r).dump(2) + "\n");
            return 0;
        };
    });

    // render
    struct {
        std::string scene, out, format = "pfm";
        std::optional<int> width, height;
        unsigned threads = 0;
    } r;
    auto* render = app.add_subcommand("render", "Render a scene file to a condition depth map");
    render->add_option("--scene", r.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
    render->add_option("--out", r.out, "Depth output")->required();
    render->add_option("--format", r.format, "Depth encoding")->check(CLI::IsMember(kFormats));
    render->add_option("--width", r.width, "Override width")->check(CLI::Range(1, 8192));
    render->add_option("--height", r.height, "Override height")->check(CLI::Range(1, 8192));
    render->add_option("--threads", r.threads, "Worker threads (0 = all cores)");
    render->callback([&] {
        action = [&] {
            const SceneLoadResult loaded = load_scene(r.scene);
            for (const auto& n : loaded.notes) err << "note: " << n << "\n";
            RenderOptions ro;
            ro.threads = r.threads;
            write_file(r.out, encode_depth(render_scene(loaded.scene, r.width, r.height, ro),
                                           parse_depth_format(r.format)));
            return 0;
        };
    });

    // check
    auto* check = app.add_subcommand("check", "Condition-adherence checks; prints a JSON report");
    check->require_subcommand(1);
    struct {
        std::string gen, cond, align_exact = "median", align_boundary = "none", segments, boxes, out_violation;
        CameraArgs cam;
        ExactCheckOptions exact;
        BoundaryCheckOptions bound;
        BoxCheckOptions box;
    } c;
    auto report_exit = [&](const ConditionReport& rep) {
        out << report_to_json(rep).dump(2) << "\n";
        if (!c.out_violation.empty() && !rep.per_pixel_violation.empty()) {
            // The violation map is written as raw PFM of the same size.
            const CameraIntrinsics cam = intrinsics_from_fov(50.0, rep.width, rep.height);
            write_file(c.out_violation, encode_depth(DepthMap(cam, rep.per_pixel_violation), DepthFormat::pfm));
        }
        return rep.passed ? 0 : 1;
    };
    auto* ce = check->add_subcommand("exact", "Mean relative error within tau");
    ce->add_option("--gen", c.gen, "Generated depth")->required()->check(CLI::ExistingFile);
    ce->add_option("--cond", c.cond, "Condition depth")->required()->check(CLI::ExistingFile);
    ce->add_option("--tau", c.exact.tau_rel, "Relative tolerance")->capture_default_str();
    ce->add_option("--align", c.align_exact, "Scale alignment")->check(CLI::IsMember({"none", "median"}))
        ->capture_default_str();
    ce->callback([&] {
        action = [&] {
            c.exact.align = parse_align(c.align_exact);
            return report_exit(check_exact(load_depth(c.gen, c.cam, false), load_depth(c.cond, c.cam, false), c.exact));
        };
    });
    auto* cb = check->add_subcommand("boundary", "One-sided upper-bound check");
    cb->add_option("--gen", c.gen, "Generated depth")->required()->check(CLI::ExistingFile);
    cb->add_option("--cond", c.cond, "Condition depth")->required()->check(CLI::ExistingFile);
    cb->add_option("--tau", c.bound.tau_rel, "Relative slack")->capture_default_str();
    cb->add_option("--eta", c.bound.eta, "Allowed violating fraction")->capture_default_str();
    cb->add_option("--align", c.align_boundary, "Scale alignment")->check(CLI::IsMember({"none", "median"}))
        ->capture_default_str();
    cb->add_option("--out-violation", c.out_violation, "Per-pixel violation map (pfm)");
    cb->callback([&] {
        action = [&] {
            c.bound.align = parse_align(c.align_boundary);
            return report_exit(
                check_boundary(load_depth(c.gen, c.cam, false), load_depth(c.cond, c.cam, false), c.bound));
        };
    });
    auto* cx = check->add_subcommand("boxes", "Fitted boxes match the specified boxes");
    cx->add_option("--gen", c.gen, "Generated depth")->required()->check(CLI::ExistingFile);
    cx->add_option("--segments", c.segments, "Generated segment PNG")->required()->check(CLI::ExistingFile);
    cx->add_option("--boxes", c.boxes, "Specified boxes JSON")->required()->check(CLI::ExistingFile);
    c.cam.add(cx);
    cx->add_option("--iou-theta", c.box.iou_theta, "Minimum IoU per box")->capture_default_str();
    cx->add_option("--min-area", c.box.min_mask_area, "Minimum mask area in pixels")->capture_default_str();
    cx->add_option("--samples", c.box.iou_samples, "IoU sample count")->capture_default_str();
    cx->add_option("--seed", c.box.seed, "IoU sampling seed")->capture_default_str();
    cx->callback([&] {
        action = [&] {
            const Bytes raw = read_file(c.boxes);
            const json doc = json::parse(std::string(raw.begin(), raw.end()), nullptr, false);
            if (doc.is_discarded()) throw InvalidArgument(c.boxes + " is not valid JSON");
            return report_exit(check_boxes(load_depth(c.gen, c.cam, true), decode_segments(read_file(c.segments)),
                                           boxes_from_json(doc), c.box));
        };
    });

    // dataset
    struct {
        std::string in, out, mode = "boundary", format = "pfm";
        DatasetOptions opts;
    } d;
    auto* dataset = app.add_subcommand("dataset", "Build (caption, condition, image) triplets");
    dataset->add_option("--in", d.in, "Input directory of sample folders")->required();
    dataset->add_option("--mode", d.mode, "Proxy mode")->required()->check(CLI::IsMember({"boundary", "boxes"}));
    dataset->add_option("--seed", d.opts.seed, "FOV sampling seed")->required();
    dataset->add_option("--out", d.out, "Manifest path (JSONL)")->required();
    dataset->add_option("--format", d.format, "Condition encoding")->check(CLI::IsMember(kFormats));
    dataset->add_option("--threads", d.opts.threads, "Worker threads")->capture_default_str();
    dataset->add_option("--min-area", d.opts.boxes.min_mask_area, "Minimum mask area in pixels (boxes mode)")
        ->capture_default_str();
    dataset->callback([&] {
        action = [&] {
            d.opts.mode = parse_proxy_mode(d.mode);
            d.opts.condition_format = parse_depth_format(d.format);
            d.opts.boundary.far_m = env_far();
            d.opts.boxes.far_m = d.opts.boundary.far_m;
            const DatasetResult res = prepare_dataset(d.in, d.out, d.opts);
            for (const auto& s : res.skipped) err << "warning: skipped " << s.sample << ": " << s.reason << "\n";
            out << res.entries.size() << " entries, " << res.skipped.size() << " skipped\n";
            return 0;
        };
    });

    // directions
    struct {
        std::string probe, out;
        int n = 1;
        std::optional<std::uint64_t> seed;
    } e;
    auto* directions = app.add_subcommand("directions", "Top edit directions of a probe network's Jacobian");
    directions->add_option("--probe", e.probe, "Probe JSON: layers [n, hidden, m], seed, x or x_seed, eps")
        ->required()
        ->check(CLI::ExistingFile);
    directions->add_option("--n", e.n, "Number of directions")->required();
    directions->add_option("--out", e.out, "Output JSON")->required();
    directions->add_option("--seed", e.seed, "Override the probe seed");
    directions->callback([&] {
        action = [&] {
            const Bytes raw = read_file(e.probe);
            const json p = json::parse(std::string(raw.begin(), raw.end()), nullptr, false);
            if (!p.is_object() || !p.contains("layers") || !p["layers"].is_array() || p["layers"].size() != 3)
                throw InvalidArgument("probe needs \"layers\": [n_in, n_hidden, n_out]");
            const int n_in = p["layers"][0].get<int>(), n_hidden = p["layers"][1].get<int>(),
                      n_out = p["layers"][2].get<int>();
            const std::uint64_t seed = e.seed.value_or(p.value("seed", std::uint64_t{0}));
            const ToyNetwork net = ToyNetwork::random(n_in, n_hidden, n_out, seed);
            Vector x0;
            if (p.contains("x")) {
                const auto xs = p["x"].get<std::vector<double>>();
                x0 = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
            } else {
                x0 = seeded_gaussian(n_in, 1, p.value("x_seed", seed + 1)).col(0);
            }
            JacobianOptions jo;
            jo.eps = p.value("eps", jo.eps);
            jo.parallel_safe = true;
            const Matrix J = jacobian_fd([&net](const Vector& v) { return net(v); }, x0, jo);
            DirectionOptions dopt;
            dopt.seed = seed;
            const EditDirectionSet set = top_directions_svd(J, e.n, dopt);
            json o{{"sigmas", std::vector<double>(set.sigmas.data(), set.sigmas.data() + set.sigmas.size())},
                   {"directions", matrix_columns(set.directions)},
                   {"x_directions", matrix_columns(set.x_directions)},
                   {"rank_deficient", set.rank_deficient}};
            write_text_file(e.out, o.dump(2) + "\n");
            return 0;
        };
    });

    // serve
    struct {
        int port = 8765;
        std::string host = "127.0.0.1";
        std::optional<std::string> snapshot;
        std::size_t max_payload_mb = 64;
    } s;
    auto* serve = app.add_subcommand("serve", "Local HTTP service");
    serve->add_option("--port", s.port, "Port (0 picks a free port)")->check(CLI::Range(0, 65535))
        ->capture_default_str();
    serve->add_option("--host", s.host, "Bind address")->capture_default_str();
    serve->add_option("--snapshot-dir", s.snapshot, "Load scenes from and save them to this directory");
    serve->add_option("--max-payload-mb", s.max_payload_mb, "Request size limit")->capture_default_str();
    serve->callback([&] {
        action = [&] {
            ServiceOptions so;
            so.max_payload_bytes = s.max_payload_mb * 1024u * 1024u;
            if (s.snapshot) so.snapshot_dir = fs::path(*s.snapshot);
            Service service(so);
            const int port = service.bind(s.host, s.port);
            if (port < 0) throw IoError("cannot bind " + s.host + ":" + std::to_string(s.port));
            out << "listening on http://" << s.host << ":" << port << std::endl;
            g_service.store(&service);
            auto prev_int = std::signal(SIGINT, on_stop_signal);
            auto prev_term = std::signal(SIGTERM, on_stop_signal);
            service.listen();
            std::signal(SIGINT, prev_int);
            std::signal(SIGTERM, prev_term);
            g_service.store(nullptr);
            service.shutdown_snapshot();
            return 0;
        };
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kServiceVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& ex) {
        err << "error: usage: " << ex.what() << "\n" << app.help();
        return 2;
    }

    if (!action) {
        err << "error: usage: no command given\n" << app.help();
        return 2;
    }
    try {
        return action();
    } catch (const ValidationError& ex) {
        for (const auto& i : ex.issues())
            err << "error: validation: " << (i.pointer.empty() ? "/" : i.pointer) << ": " << i.message << "\n";
    } catch (const DecodeError& ex) {
        err << "error: decode: " << ex.what() << "\n";
    } catch (const DegenerateInput& ex) {
        err << "error: degenerate-input: " << ex.what() << "\n";
    } catch (const InvalidArgument& ex) {
        err << "error: invalid-argument: " << ex.what() << "\n";
    } catch (const IoError& ex) {
        err << "error: io: " << ex.what() << "\n";
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
    }
    return 1;
}

}  // namespace lc
