#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "loosectl/camera.hpp"
#include "loosectl/geometry.hpp"
#include "loosectl/rng.hpp"
#include "loosectl/scene.hpp"

namespace lc::testing {

/// Star-shaped room around the camera: 4-8 vertices, walls 4-8 m away,
/// edges >= 1.5 m, turns >= 20 degrees. Floor at -1.2, ceiling at 1.4.
struct Room {
    SceneSpec empty;      // walls + floor + ceiling
    SceneSpec furnished;  // same plus interior cuboids
};

Room random_room(Rng& rng, int size_px, int max_furniture = 6);

/// Depth rendered with the ray oracle; the analytic reference.
DepthMap oracle_depth(const SceneSpec& scene);

struct BoxScene {
    std::vector<OrientedBox3D> boxes;
    CameraIntrinsics cam;
    double far_m = 30.0;
    DepthMap depth;
    SegmentMap segments;  // id i+1 for boxes[i]
};

/// 1-4 cuboids below the camera, no box occluding another, each mask
/// >= min_area pixels. Resamples until the constraints hold.
BoxScene random_box_scene(Rng& rng, int size_px, std::size_t min_area = 10000);

/// Exact segment labels by matching each box's solo render to the
/// composite (bitwise-equal depth).
SegmentMap exact_masks(const std::vector<OrientedBox3D>& boxes, const CameraIntrinsics& cam, double far_m,
                       const DepthMap& composite);

/// Random z-depth map with a fraction of invalid pixels.
DepthMap random_depth_map(Rng& rng, int w, int h, double d_lo, double d_hi, double invalid_fraction);

/// Unique scratch directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Writes n sample folders (image.png, depth.pfm, caption.txt,
/// segments.png) rendered from random rooms.
void write_sample_corpus(const std::filesystem::path& dir, int n, std::uint64_t seed, int size_px = 96);

/// Lower-case hex SHA-256.
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);

}  // namespace lc::testing
