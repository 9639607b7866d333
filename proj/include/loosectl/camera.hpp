#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace lc {

/// Pinhole intrinsics. Pixel (u, v) samples the ray through image
/// coordinate (u, v); image rows grow downwards (world -y).
struct CameraIntrinsics {
    int width = 0;
    int height = 0;
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;

    /// Throws InvalidArgument when any field violates the pinhole invariants.
    void validate() const;

    /// Horizontal field of view in degrees recovered from fx and width.
    double horizontal_fov_deg() const;

    /// Same camera at a different resolution (focal lengths and principal
    /// point scaled proportionally).
    CameraIntrinsics resized(int new_width, int new_height) const;

    bool operator==(const CameraIntrinsics&) const = default;
};

/// fx = fy = (width/2)/tan(fov/2), principal point at (width/2, height/2).
CameraIntrinsics intrinsics_from_fov(double fov_deg, int width, int height);

/// Dense z-depth in meters, row-major. 0.0 marks pixels with no data.
class DepthMap {
public:
    static constexpr float kInvalid = 0.0f;

    DepthMap() = default;
    DepthMap(CameraIntrinsics intrinsics, std::vector<float> data);
    /// Constant-valued map.
    DepthMap(CameraIntrinsics intrinsics, float fill);

    int width() const noexcept { return intrinsics_.width; }
    int height() const noexcept { return intrinsics_.height; }
    std::size_t size() const noexcept { return data_.size(); }
    const CameraIntrinsics& intrinsics() const noexcept { return intrinsics_; }

    float at(int u, int v) const { return data_[index(u, v)]; }
    float& at(int u, int v) { return data_[index(u, v)]; }
    static bool valid(float d) noexcept { return d != kInvalid; }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }

    /// Largest valid depth, 0 when the map holds no valid pixel.
    float max_depth() const noexcept;

private:
    std::size_t index(int u, int v) const noexcept {
        return static_cast<std::size_t>(v) * static_cast<std::size_t>(intrinsics_.width) +
               static_cast<std::size_t>(u);
    }

    CameraIntrinsics intrinsics_;
    std::vector<float> data_;
};

/// Per-pixel segment ids, row-major; id 0 is background.
struct SegmentMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> labels;

    SegmentMap() = default;
    SegmentMap(int w, int h, std::vector<std::uint32_t> l);

    std::uint32_t at(int u, int v) const {
        return labels[static_cast<std::size_t>(v) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(u)];
    }
};

}  // namespace lc
