#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "loosectl/codec.hpp"
#include "loosectl/error.hpp"
#include "loosectl/rng.hpp"

using namespace lc;

namespace {

DepthMap random_depth(Rng& rng, int w, int h, double lo, double hi, double invalid_fraction = 0.0) {
    std::vector<float> v(static_cast<std::size_t>(w * h));
    for (auto& x : v) x = rng.uniform(0, 1) < invalid_fraction ? 0.0f : static_cast<float>(rng.uniform(lo, hi));
    return DepthMap(intrinsics_from_fov(rng.uniform(43, 57), w, h), std::move(v));
}

std::uint32_t read_le32(const Bytes& b, std::size_t at) {
    std::uint32_t x;
    std::memcpy(&x, b.data() + at, 4);
    return x;
}

}  // namespace

TEST_SUITE("codec") {

TEST_CASE("pfm constant map is bit identical") {
    const DepthMap d(intrinsics_from_fov(50, 7, 5), 2.0f);
    const Bytes b = encode_depth(d, DepthFormat::pfm);
    const std::string header(b.begin(), b.begin() + 12);
    CHECK(header == "Pf\n7 5\n-1.0\n");
    CHECK(b.size() == 12 + 7 * 5 * 4);
    const DecodedDepth r = decode_depth(b);
    CHECK(r.meta.format == DepthFormat::pfm);
    CHECK(r.width == 7);
    CHECK(r.height == 5);
    CHECK(std::equal(r.data.begin(), r.data.end(), d.data().begin()));
}

TEST_CASE("pfm rows are stored bottom-up") {
    std::vector<float> v{1, 2, 3, 4, 5, 6};
    const DepthMap d(intrinsics_from_fov(50, 3, 2), v);
    const Bytes b = encode_depth(d, DepthFormat::pfm);
    const std::size_t body = b.size() - 24;
    float first;
    const std::uint32_t raw = read_le32(b, body);
    std::memcpy(&first, &raw, 4);
    CHECK(first == 4.0f);
}

TEST_CASE("png16 stores millimetres") {
    const DepthMap d(intrinsics_from_fov(50, 4, 4), 2.0f);
    EncodeOptions o;
    o.scale = 0.001;
    const DecodedDepth r = decode_depth(encode_depth(d, DepthFormat::png16, o));
    CHECK(r.meta.format == DepthFormat::png16);
    CHECK(r.meta.scale == 0.001);
    for (float x : r.data) CHECK(std::lround(x / 0.001) == 2000);
}

TEST_CASE("png8inv endpoints") {
    const DepthMap d(intrinsics_from_fov(50, 2, 1), std::vector<float>{1.0f, 10.0f});
    EncodeOptions o;
    o.d_min = 1.0;
    o.d_max = 10.0;
    const DecodedDepth r = decode_depth(encode_depth(d, DepthFormat::png8inv, o));
    CHECK(r.meta.d_min == 1.0);
    CHECK(r.meta.d_max == 10.0);
    CHECK(r.data[0] == doctest::Approx(1.0));
    CHECK(r.data[1] == doctest::Approx(10.0));
    // stored values through the segment reader, which accepts 8-bit gray
    const SegmentMap raw = decode_segments(encode_depth(d, DepthFormat::png8inv, o));
    CHECK(raw.labels[0] == 255);
    CHECK(raw.labels[1] == 0);
}

TEST_CASE("sentinel depth") {
    const DepthMap d(intrinsics_from_fov(50, 2, 1), std::vector<float>{0.0f, 3.0f});
    CHECK(decode_depth(encode_depth(d, DepthFormat::pfm)).data[0] == 0.0f);
    CHECK(decode_depth(encode_depth(d, DepthFormat::png16)).data[0] == 0.0f);
    EncodeOptions o;
    o.d_min = 1.0;
    o.d_max = 10.0;
    const Bytes b = encode_depth(d, DepthFormat::png8inv, o);
    CHECK(decode_segments(b).labels[0] == 0);
    CHECK(decode_depth(b).data[0] == doctest::Approx(10.0));
}

TEST_CASE("random round trips within quantization bounds") {
    Rng rng(50);
    for (int i = 0; i < 100; ++i) {
        const int w = rng.uniform_int(1, 40), h = rng.uniform_int(1, 40);
        const DepthMap d = random_depth(rng, w, h, 0.3, 25.0, 0.1);
        const auto src = d.data();

        const DecodedDepth pfm = decode_depth(encode_depth(d, DepthFormat::pfm));
        CHECK(std::equal(pfm.data.begin(), pfm.data.end(), src.begin()));

        const DecodedDepth p16 = decode_depth(encode_depth(d, DepthFormat::png16));
        for (std::size_t k = 0; k < src.size(); ++k) {
            if (src[k] == 0.0f) {
                CHECK(p16.data[k] == 0.0f);
                continue;
            }
            CHECK(std::abs(p16.data[k] - src[k]) <= p16.meta.scale / 2 + 1e-6);
        }

        EncodeOptions o;
        o.d_min = 0.3;
        o.d_max = 25.0;
        const DecodedDepth p8 = decode_depth(encode_depth(d, DepthFormat::png8inv, o));
        const double step = (1.0 / 0.3 - 1.0 / 25.0) / 255.0;
        for (std::size_t k = 0; k < src.size(); ++k) {
            if (src[k] == 0.0f) continue;
            CHECK(std::abs(1.0 / p8.data[k] - 1.0 / src[k]) <= step / 2 + 1e-6);
        }
    }
}

TEST_CASE("png16 scale widens to fit and rejects overflow") {
    const DepthMap far(intrinsics_from_fov(50, 2, 2), 100.0f);
    const DecodedDepth r = decode_depth(encode_depth(far, DepthFormat::png16));
    CHECK(r.meta.scale > 0.001);
    CHECK(std::abs(r.data[0] - 100.0f) <= r.meta.scale / 2);
    EncodeOptions o;
    o.scale = 0.001;
    CHECK_THROWS_AS(encode_depth(far, DepthFormat::png16, o), InvalidArgument);
}

TEST_CASE("embedded intrinsics") {
    const auto cam = intrinsics_from_fov(47, 6, 4);
    const DepthMap d(cam, 1.5f);
    const DecodedDepth r = decode_depth(encode_depth(d, DepthFormat::png16));
    REQUIRE(r.intrinsics.has_value());
    CHECK(r.intrinsics->fx == doctest::Approx(cam.fx).epsilon(1e-9));
    CHECK(r.to_depth_map(std::nullopt).intrinsics().cx == doctest::Approx(cam.cx));
    const auto other = intrinsics_from_fov(60, 6, 4);
    CHECK(r.to_depth_map(other).intrinsics().fx == doctest::Approx(cam.fx));
    CHECK(r.to_depth_map(other, true).intrinsics().fx == other.fx);
    EncodeOptions o;
    o.embed_intrinsics = false;
    const DecodedDepth bare = decode_depth(encode_depth(d, DepthFormat::png16, o));
    CHECK_FALSE(bare.intrinsics.has_value());
    CHECK_THROWS_AS(bare.to_depth_map(std::nullopt), InvalidArgument);
    CHECK_FALSE(decode_depth(encode_depth(d, DepthFormat::pfm)).intrinsics.has_value());
}

TEST_CASE("malformed input names a byte offset") {
    CHECK_THROWS_AS(decode_depth(Bytes{'x', 'y', 'z'}), DecodeError);
    const std::string bad_dims = "Pf\n3 x\n-1.0\n";
    try {
        decode_depth(Bytes(bad_dims.begin(), bad_dims.end()));
        FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
        CHECK(e.offset() == 5);
        CHECK(std::string(e.what()).find("byte offset 5") != std::string::npos);
    }
    Bytes truncated = encode_depth(DepthMap(intrinsics_from_fov(50, 3, 3), 1.0f), DepthFormat::pfm);
    truncated.resize(truncated.size() - 4);
    CHECK_THROWS_AS(decode_depth(truncated), DecodeError);
    Bytes png = encode_depth(DepthMap(intrinsics_from_fov(50, 3, 3), 1.0f), DepthFormat::png16);
    png.resize(png.size() / 2);
    CHECK_THROWS_AS(decode_depth(png), DecodeError);
    const std::string color = "PF\n1 1\n-1.0\n";
    CHECK_THROWS_AS(decode_depth(Bytes(color.begin(), color.end())), DecodeError);
}

TEST_CASE("segments round trip") {
    Rng rng(51);
    std::vector<std::uint32_t> labels(30 * 20);
    for (auto& l : labels) l = static_cast<std::uint32_t>(rng.uniform_int(0, 65535));
    const SegmentMap s(30, 20, labels);
    const SegmentMap r = decode_segments(encode_segments(s));
    CHECK(r.width == 30);
    CHECK(r.height == 20);
    CHECK(r.labels == labels);
    labels[0] = 70000;
    CHECK_THROWS_AS(encode_segments(SegmentMap(30, 20, labels)), InvalidArgument);
}

TEST_CASE("format names and base64") {
    for (auto f : {DepthFormat::pfm, DepthFormat::png16, DepthFormat::png8inv})
        CHECK(parse_depth_format(to_string(f)) == f);
    CHECK_THROWS_AS(parse_depth_format("exr"), InvalidArgument);
    const std::string s = "foobar";
    const Bytes b(s.begin(), s.end());
    CHECK(base64_encode(std::span(b).first(0)) == "");
    CHECK(base64_encode(std::span(b).first(1)) == "Zg==");
    CHECK(base64_encode(std::span(b).first(2)) == "Zm8=");
    CHECK(base64_encode(b) == "Zm9vYmFy");
}

TEST_CASE("file helpers") {
    const auto dir = std::filesystem::temp_directory_path() / "lc_codec_test";
    std::filesystem::create_directories(dir);
    const Bytes b{1, 2, 3, 0, 255};
    write_file(dir / "x.bin", b);
    CHECK(read_file(dir / "x.bin") == b);
    CHECK_THROWS_AS(read_file(dir / "missing.bin"), IoError);
    std::filesystem::remove_all(dir);
}

}
