#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "loosectl/codec.hpp"
#include "loosectl/proxy.hpp"

namespace lc {

enum class ProxyMode { boundary, boxes };

std::string to_string(ProxyMode m);
ProxyMode parse_proxy_mode(std::string_view name);

inline constexpr double kFovSampleMinDeg = 43.0;
inline constexpr double kFovSampleMaxDeg = 57.0;

struct ManifestEntry {
    std::string sample;
    std::string image_path;
    std::string caption;
    std::string condition_path;
    ProxyMode mode = ProxyMode::boundary;
    double fov_deg = 0.0;
    std::uint64_t seed = 0;
};

struct SkippedSample {
    std::string sample;
    std::string reason;
};

struct DatasetOptions {
    ProxyMode mode = ProxyMode::boundary;
    std::uint64_t seed = 0;
    DepthFormat condition_format = DepthFormat::pfm;
    BoundaryOptions boundary;
    BoxProxyOptions boxes;
    unsigned threads = 1;
};

struct DatasetResult {
    std::vector<ManifestEntry> entries;
    std::vector<SkippedSample> skipped;
};

/// Seed of the per-sample stream for the sample at sorted position index.
std::uint64_t sample_stream_seed(std::uint64_t seed, std::size_t index);

/// Per-sample FOV draw in [43, 57) degrees from the sample's stream.
double sample_fov_deg(std::uint64_t seed, std::size_t index);

/// Builds (caption, condition, image) triplets for every sample directory
/// under input_dir (sorted by name). Each sample directory holds
/// image.{png,jpg,jpeg}, depth.{pfm,png}, caption.txt, segments.png (boxes
/// mode) and optionally intrinsics.json ({fx, fy, cx, cy} or {fov_deg}).
/// Condition files go to <manifest dir>/conditions/ and the manifest is
/// written to manifest_path. Failing samples are skipped and reported.
/// Throws IoError when input_dir is unreadable.
DatasetResult prepare_dataset(const std::filesystem::path& input_dir,
                              const std::filesystem::path& manifest_path,
                              const DatasetOptions& opts = {});

/// One JSON object per line, fields in fixed order. condition_path is
/// relative to the manifest directory; image_path is absolute.
std::string manifest_to_jsonl(const std::vector<ManifestEntry>& entries);

}  // namespace lc
