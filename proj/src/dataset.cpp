#include "loosectl/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <optional>
#include <thread>

#include <nlohmann/json.hpp>

#include "loosectl/error.hpp"
#include "loosectl/rng.hpp"
#include "loosectl/scene.hpp"

namespace fs = std::filesystem;

namespace lc {

std::string to_string(ProxyMode m) { return m == ProxyMode::boxes ? "boxes" : "boundary"; }

ProxyMode parse_proxy_mode(std::string_view name) {
    if (name == "boundary") return ProxyMode::boundary;
    if (name == "boxes") return ProxyMode::boxes;
    throw InvalidArgument("unknown mode '" + std::string(name) + "' (boundary, boxes)");
}

std::uint64_t sample_stream_seed(std::uint64_t seed, std::size_t index) {
    return mix64(mix64(seed) + static_cast<std::uint64_t>(index));
}

double sample_fov_deg(std::uint64_t seed, std::size_t index) {
    Rng rng(sample_stream_seed(seed, index));
    return rng.uniform(kFovSampleMinDeg, kFovSampleMaxDeg);
}

namespace {

std::optional<fs::path> find_first(const fs::path& dir, std::initializer_list<const char*> names) {
    for (const char* n : names) {
        const fs::path p = dir / n;
        if (fs::is_regular_file(p)) return p;
    }
    return std::nullopt;
}

std::string read_text(const fs::path& p) {
    const Bytes b = read_file(p);
    std::string s(b.begin(), b.end());
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t start = 0;
    while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) ++start;
    return s.substr(start);
}

std::optional<CameraIntrinsics> read_intrinsics(const fs::path& dir, int width, int height) {
    const fs::path p = dir / "intrinsics.json";
    if (!fs::is_regular_file(p)) return std::nullopt;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(p));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("intrinsics.json: " + std::string(e.what()));
    }
    if (!j.is_object()) throw InvalidArgument("intrinsics.json must be an object");
    if (j.contains("fov_deg")) return intrinsics_from_fov(j.at("fov_deg").get<double>(), width, height);
    CameraIntrinsics cam{width, height, j.at("fx").get<double>(), j.at("fy").get<double>(),
                         j.at("cx").get<double>(), j.at("cy").get<double>()};
    cam.validate();
    return cam;
}

struct Outcome {
    std::optional<ManifestEntry> entry;
    std::string reason;
};

Outcome process_sample(const fs::path& dir, std::size_t index, const fs::path& cond_dir,
                       const DatasetOptions& opts) {
    Outcome out;
    ManifestEntry e;
    e.sample = dir.filename().string();
    e.mode = opts.mode;
    e.seed = sample_stream_seed(opts.seed, index);
    try {
        const auto image = find_first(dir, {"image.png", "image.jpg", "image.jpeg"});
        if (!image) throw IoError("missing image file");
        const auto depth_file = find_first(dir, {"depth.pfm", "depth.png"});
        if (!depth_file) throw IoError("missing depth file");
        const auto caption = find_first(dir, {"caption.txt"});
        if (!caption) throw IoError("missing caption.txt");
        e.image_path = fs::absolute(*image).lexically_normal().string();
        e.caption = read_text(*caption);

        const DecodedDepth decoded = decode_depth(read_file(*depth_file));
        std::optional<CameraIntrinsics> cam = read_intrinsics(dir, decoded.width, decoded.height);
        if (!cam) cam = intrinsics_from_fov(sample_fov_deg(opts.seed, index), decoded.width, decoded.height);
        const DepthMap depth = decoded.to_depth_map(cam, true);
        e.fov_deg = canonical_float(depth.intrinsics().horizontal_fov_deg());

        DepthMap condition;
        if (opts.mode == ProxyMode::boundary) {
            condition = boundary_proxy(depth, opts.boundary).condition;
        } else {
            const auto seg_file = find_first(dir, {"segments.png"});
            if (!seg_file) throw IoError("missing segments.png");
            condition = box_proxy(depth, decode_segments(read_file(*seg_file)), opts.boxes).condition;
        }
        const std::string ext = opts.condition_format == DepthFormat::pfm ? "pfm" : "png";
        const std::string name = e.sample + "." + to_string(opts.mode) + "." + ext;
        write_file(cond_dir / name, encode_depth(condition, opts.condition_format));
        e.condition_path = (fs::path("conditions") / name).generic_string();
        out.entry = std::move(e);
    } catch (const std::exception& ex) {
        out.reason = ex.what();
    }
    return out;
}

}  // namespace

DatasetResult prepare_dataset(const fs::path& input_dir, const fs::path& manifest_path, const DatasetOptions& opts) {
    std::error_code ec;
    if (!fs::is_directory(input_dir, ec)) throw IoError("cannot read input directory " + input_dir.string());
    std::vector<fs::path> samples;
    for (fs::directory_iterator it(input_dir, ec), end; !ec && it != end; it.increment(ec)) {
        const auto name = it->path().filename().string();
        if (it->is_directory() && !name.empty() && name[0] != '.') samples.push_back(it->path());
    }
    if (ec) throw IoError("cannot list input directory " + input_dir.string() + ": " + ec.message());
    std::sort(samples.begin(), samples.end());

    const fs::path manifest_dir = manifest_path.has_parent_path() ? manifest_path.parent_path() : fs::path(".");
    const fs::path cond_dir = manifest_dir / "conditions";
    fs::create_directories(cond_dir, ec);
    if (ec) throw IoError("cannot create " + cond_dir.string() + ": " + ec.message());

    std::vector<Outcome> outcomes(samples.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < samples.size(); i = next++)
            outcomes[i] = process_sample(samples[i], i, cond_dir, opts);
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(samples.size())));
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
    }

    DatasetResult result;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (outcomes[i].entry)
            result.entries.push_back(std::move(*outcomes[i].entry));
        else
            result.skipped.push_back({samples[i].filename().string(), outcomes[i].reason});
    }
    write_text_file(manifest_path, manifest_to_jsonl(result.entries));
    return result;
}

std::string manifest_to_jsonl(const std::vector<ManifestEntry>& entries) {
    std::string out;
    for (const auto& e : entries) {
        nlohmann::ordered_json j;
        j["sample"] = e.sample;
        j["image_path"] = e.image_path;
        j["caption"] = e.caption;
        j["condition_path"] = e.condition_path;
        j["mode"] = to_string(e.mode);
        j["fov_deg"] = e.fov_deg;
        j["seed"] = e.seed;
        out += j.dump() + "\n";
    }
    return out;
}

}  // namespace lc
