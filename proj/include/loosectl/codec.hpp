#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "loosectl/camera.hpp"

namespace lc {

using Bytes = std::vector<std::uint8_t>;

enum class DepthFormat { pfm, png16, png8inv };

std::string to_string(DepthFormat f);
/// Throws InvalidArgument for unknown names.
DepthFormat parse_depth_format(std::string_view name);

inline constexpr const char* kDepthMetaKey = "lc_depth_meta";

struct DepthFileMeta {
    DepthFormat format = DepthFormat::pfm;
    /// png16: meters per stored unit.
    double scale = 0.001;
    /// png8inv: normalization range in meters.
    double d_min = 0.0;
    double d_max = 0.0;
};

/// Encoding parameters; unset fields take format defaults (png16 scale
/// 0.001 m widened if needed to fit the map; png8inv range = the map's
/// 1st/99th valid-depth percentiles).
struct EncodeOptions {
    std::optional<double> scale;
    std::optional<double> d_min;
    std::optional<double> d_max;
    /// Store fx/fy/cx/cy in the PNG metadata chunk.
    bool embed_intrinsics = true;
};

/// pfm: "Pf", little-endian float32, bottom-up rows, scale -1.0.
/// png16: 16-bit gray, value = round(d / scale).
/// png8inv: 8-bit gray, near = bright inverse depth.
/// PNG metadata lives in a tEXt chunk keyed lc_depth_meta as "k=v;k=v".
Bytes encode_depth(const DepthMap& depth, DepthFormat format, const EncodeOptions& opts = {});

struct DecodedDepth {
    int width = 0;
    int height = 0;
    std::vector<float> data;
    DepthFileMeta meta;
    std::optional<CameraIntrinsics> intrinsics;

    /// Attach intrinsics; embedded ones win unless override_cam is set.
    DepthMap to_depth_map(const std::optional<CameraIntrinsics>& fallback,
                          bool override_cam = false) const;
};

/// Format detected from the magic bytes. Throws DecodeError.
DecodedDepth decode_depth(std::span<const std::uint8_t> bytes);

/// 16-bit grayscale PNG of segment ids (ids must fit in 16 bits).
Bytes encode_segments(const SegmentMap& segments);
/// Accepts 8- or 16-bit grayscale PNG.
SegmentMap decode_segments(std::span<const std::uint8_t> bytes);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::filesystem::path& path, std::string_view text);

std::string base64_encode(std::span<const std::uint8_t> bytes);

}  // namespace lc
