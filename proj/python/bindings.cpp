#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "loosectl/cli.hpp"
#include "loosectl/codec.hpp"
#include "loosectl/conditions.hpp"
#include "loosectl/edit.hpp"
#include "loosectl/error.hpp"
#include "loosectl/obb.hpp"
#include "loosectl/proxy.hpp"
#include "loosectl/scene.hpp"
#include "loosectl/scene_io.hpp"

namespace py = pybind11;
using namespace lc;

namespace {

using DepthArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>;

DepthArray to_array(int w, int h, std::span<const float> data) {
    DepthArray a({h, w});
    std::copy(data.begin(), data.end(), a.mutable_data());
    return a;
}

DepthArray to_array(const DepthMap& d) { return to_array(d.width(), d.height(), d.data()); }

DepthMap to_depth(const DepthArray& a, const CameraIntrinsics& cam) {
    if (a.ndim() != 2) throw InvalidArgument("depth must be a 2-D array");
    if (a.shape(0) != cam.height || a.shape(1) != cam.width)
        throw InvalidArgument("depth shape does not match the intrinsics");
    return DepthMap(cam, std::vector<float>(a.data(), a.data() + a.size()));
}

CameraIntrinsics camera_for(const DepthArray& a, double fov_deg) {
    if (a.ndim() != 2) throw InvalidArgument("depth must be a 2-D array");
    return intrinsics_from_fov(fov_deg, static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
}

SegmentMap to_segments(const LabelArray& a) {
    if (a.ndim() != 2) throw InvalidArgument("segments must be a 2-D array");
    return SegmentMap(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)),
                      std::vector<std::uint32_t>(a.data(), a.data() + a.size()));
}

py::bytes to_bytes(const Bytes& b) { return {reinterpret_cast<const char*>(b.data()), b.size()}; }

Bytes from_bytes(const py::bytes& b) {
    const std::string s = b;
    return {s.begin(), s.end()};
}

std::string report_json(const ConditionReport& r) { return report_to_json(r).dump(); }

}  // namespace

PYBIND11_MODULE(_loosectl, m) {
    m.doc() = "Depth proxies, condition checks and edit numerics.";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<DecodeError>(m, "DecodeError", PyExc_ValueError);
    py::register_exception<DegenerateInput>(m, "DegenerateInput", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
        .def(py::init([](int w, int h, double fx, double fy, double cx, double cy) {
                 CameraIntrinsics c{w, h, fx, fy, cx, cy};
                 c.validate();
                 return c;
             }),
             py::arg("width"), py::arg("height"), py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"))
        .def_readonly("width", &CameraIntrinsics::width)
        .def_readonly("height", &CameraIntrinsics::height)
        .def_readonly("fx", &CameraIntrinsics::fx)
        .def_readonly("fy", &CameraIntrinsics::fy)
        .def_readonly("cx", &CameraIntrinsics::cx)
        .def_readonly("cy", &CameraIntrinsics::cy)
        .def_property_readonly("horizontal_fov_deg", &CameraIntrinsics::horizontal_fov_deg)
        .def("resized", &CameraIntrinsics::resized)
        .def("__eq__", [](const CameraIntrinsics& a, const CameraIntrinsics& b) { return a == b; })
        .def("__repr__", [](const CameraIntrinsics& c) {
            std::ostringstream s;
            s << "CameraIntrinsics(" << c.width << "x" << c.height << ", fx=" << c.fx << ", fy=" << c.fy
              << ", cx=" << c.cx << ", cy=" << c.cy << ")";
            return s.str();
        });

    m.def("intrinsics_from_fov", &intrinsics_from_fov, py::arg("fov_deg"), py::arg("width"), py::arg("height"));

    m.def(
        "_render_scene",
        [](const std::string& text, std::optional<int> width) {
            const SceneSpec s = parse_scene(text).scene;
            return to_array(render_scene(s, width));
        },
        py::arg("scene_json"), py::arg("width") = py::none());

    m.def(
        "_canonical_scene",
        [](const std::string& text) {
            const SceneLoadResult r = parse_scene(text);
            return py::make_tuple(dump_scene(r.scene), r.notes);
        },
        py::arg("scene_json"));

    m.def(
        "_boundary_proxy",
        [](const DepthArray& depth, double fov_deg, bool include_ceiling, std::optional<double> far_m) {
            BoundaryOptions o;
            o.include_ceiling = include_ceiling;
            o.far_m = far_m;
            const BoundaryResult r = boundary_proxy(to_depth(depth, camera_for(depth, fov_deg)), o);
            return py::make_tuple(to_array(r.condition), dump_scene(r.scene));
        },
        py::arg("depth"), py::arg("fov_deg"), py::arg("include_ceiling") = false, py::arg("far_m") = py::none());

    m.def(
        "_box_proxy",
        [](const DepthArray& depth, const LabelArray& segments, const CameraIntrinsics& cam, std::size_t min_area,
           std::optional<double> k_mad) {
            BoxProxyOptions o;
            o.min_mask_area = min_area;
            o.k_mad = k_mad;
            const BoxPipelineResult r = box_proxy(to_depth(depth, cam), to_segments(segments), o);
            return py::make_tuple(to_array(r.condition), box_result_to_json(r).dump());
        },
        py::arg("depth"), py::arg("segments"), py::arg("intrinsics"), py::arg("min_area") = kDefaultMinMaskArea,
        py::arg("k_mad") = py::none());

    m.def(
        "_check_exact",
        [](const DepthArray& gen, const DepthArray& cond, double tau_rel) {
            const CameraIntrinsics cam = camera_for(cond, 50.0);
            ExactCheckOptions o;
            o.tau_rel = tau_rel;
            return report_json(check_exact(to_depth(gen, cam), to_depth(cond, cam), o));
        },
        py::arg("gen"), py::arg("cond"), py::arg("tau_rel") = 0.05);

    m.def(
        "_check_boundary",
        [](const DepthArray& gen, const DepthArray& cond, double tau_rel, double eta) {
            const CameraIntrinsics cam = camera_for(cond, 50.0);
            BoundaryCheckOptions o;
            o.tau_rel = tau_rel;
            o.eta = eta;
            const ConditionReport r = check_boundary(to_depth(gen, cam), to_depth(cond, cam), o);
            return py::make_tuple(report_json(r), to_array(r.width, r.height, r.per_pixel_violation));
        },
        py::arg("gen"), py::arg("cond"), py::arg("tau_rel") = 0.05, py::arg("eta") = 0.01);

    m.def(
        "_encode_depth",
        [](const DepthArray& depth, const CameraIntrinsics& cam, const std::string& format) {
            return to_bytes(encode_depth(to_depth(depth, cam), parse_depth_format(format)));
        },
        py::arg("depth"), py::arg("intrinsics"), py::arg("format") = "pfm");

    m.def(
        "_decode_depth",
        [](const py::bytes& data) {
            const Bytes b = from_bytes(data);
            const DecodedDepth d = decode_depth(b);
            return py::make_tuple(to_array(d.width, d.height, d.data), to_string(d.meta.format), d.intrinsics);
        },
        py::arg("data"));

    m.def(
        "fit_min_obb_yaw",
        [](const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>& points) {
            PointCloud cloud;
            cloud.points.reserve(static_cast<std::size_t>(points.rows()));
            for (Eigen::Index i = 0; i < points.rows(); ++i) cloud.points.emplace_back(points.row(i).transpose());
            const OrientedBox3D b = fit_min_obb_yaw(cloud);
            return py::dict(py::arg("center") = Vec3(b.center), py::arg("half_extents") = Vec3(b.half_extents),
                            py::arg("yaw") = b.yaw);
        },
        py::arg("points"));

    m.def(
        "lora_forward",
        [](const Matrix& W, const Matrix& A, const Matrix& B, double gamma, const Vector& x) {
            LoraLayer l{W, A, B, gamma};
            return lora_forward(l, x);
        },
        py::arg("W"), py::arg("A"), py::arg("B"), py::arg("gamma"), py::arg("x"));

    m.def(
        "jacobian_fd",
        [](const std::function<Vector(const Vector&)>& f, const Vector& x) { return jacobian_fd(f, x); },
        py::arg("f"), py::arg("x"));

    m.def(
        "top_directions",
        [](const Matrix& J, int n, std::uint64_t seed) {
            DirectionOptions o;
            o.seed = seed;
            const EditDirectionSet s = top_directions_svd(J, n, o);
            return py::make_tuple(s.directions, s.sigmas, s.x_directions);
        },
        py::arg("J"), py::arg("n"), py::arg("seed") = 0);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = run_cli(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
