#include "loosectl/camera.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "loosectl/error.hpp"

namespace lc {

void CameraIntrinsics::validate() const {
    if (width <= 0 || height <= 0)
        throw InvalidArgument("camera dimensions must be positive");
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
        throw InvalidArgument("focal lengths must be positive and finite");
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
        throw InvalidArgument("principal point must lie inside the image");
}

double CameraIntrinsics::horizontal_fov_deg() const {
    return 2.0 * std::atan((width / 2.0) / fx) * 180.0 / std::numbers::pi;
}

CameraIntrinsics CameraIntrinsics::resized(int new_width, int new_height) const {
    if (new_width <= 0 || new_height <= 0)
        throw InvalidArgument("camera dimensions must be positive");
    const double sx = static_cast<double>(new_width) / width;
    const double sy = static_cast<double>(new_height) / height;
    return {new_width, new_height, fx * sx, fy * sy, cx * sx, cy * sy};
}

CameraIntrinsics intrinsics_from_fov(double fov_deg, int width, int height) {
    if (!(fov_deg > 0.0 && fov_deg < 180.0))
        throw InvalidArgument("fov_deg must lie in (0, 180), got " + std::to_string(fov_deg));
    if (width <= 0 || height <= 0)
        throw InvalidArgument("camera dimensions must be positive");
    const double half = fov_deg * std::numbers::pi / 360.0;
    const double f = (width / 2.0) / std::tan(half);
    return {width, height, f, f, width / 2.0, height / 2.0};
}

DepthMap::DepthMap(CameraIntrinsics intrinsics, std::vector<float> data)
    : intrinsics_(intrinsics), data_(std::move(data)) {
    intrinsics_.validate();
    if (data_.size() != static_cast<std::size_t>(width()) * static_cast<std::size_t>(height()))
        throw InvalidArgument("depth data length does not match width * height");
    for (float d : data_) {
        if (d != kInvalid && !(std::isfinite(d) && d > 0.0f))
            throw InvalidArgument("depth values must be finite and positive (0 = no data)");
    }
}

DepthMap::DepthMap(CameraIntrinsics intrinsics, float fill)
    : DepthMap(intrinsics, std::vector<float>(static_cast<std::size_t>(intrinsics.width) *
                                                  static_cast<std::size_t>(intrinsics.height),
                                              fill)) {}

float DepthMap::max_depth() const noexcept {
    float m = 0.0f;
    for (float d : data_) m = std::max(m, d);
    return m;
}

SegmentMap::SegmentMap(int w, int h, std::vector<std::uint32_t> l)
    : width(w), height(h), labels(std::move(l)) {
    if (w <= 0 || h <= 0) throw InvalidArgument("segment map dimensions must be positive");
    if (labels.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h))
        throw InvalidArgument("segment label count does not match width * height");
}

}  // namespace lc
