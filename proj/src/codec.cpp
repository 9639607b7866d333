#include "loosectl/codec.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>

#include "loosectl/error.hpp"
#include "loosectl/geometry.hpp"

namespace lc {

std::string to_string(DepthFormat f) {
    switch (f) {
        case DepthFormat::pfm: return "pfm";
        case DepthFormat::png16: return "png16";
        case DepthFormat::png8inv: return "png8inv";
    }
    return "pfm";
}

DepthFormat parse_depth_format(std::string_view name) {
    if (name == "pfm") return DepthFormat::pfm;
    if (name == "png16") return DepthFormat::png16;
    if (name == "png8inv") return DepthFormat::png8inv;
    throw InvalidArgument("unknown depth format '" + std::string(name) + "' (pfm, png16, png8inv)");
}

namespace {

constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---- PFM ----

Bytes encode_pfm(const DepthMap& depth) {
    const int w = depth.width(), h = depth.height();
    const std::string header = "Pf\n" + std::to_string(w) + " " + std::to_string(h) + "\n-1.0\n";
    Bytes out(header.begin(), header.end());
    out.reserve(header.size() + depth.size() * 4);
    const auto data = depth.data();
    for (int row = h - 1; row >= 0; --row) {
        for (int u = 0; u < w; ++u) {
            std::uint32_t bits;
            std::memcpy(&bits, &data[static_cast<std::size_t>(row) * static_cast<std::size_t>(w) + u], 4);
            for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
        }
    }
    return out;
}

struct Cursor {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;
    std::size_t start = 0;  // of the last token

    std::string token(const char* what) {
        while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
        start = pos;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
        if (start == pos) throw DecodeError(std::string("missing ") + what, start);
        return {reinterpret_cast<const char*>(bytes.data()) + start, pos - start};
    }
};

long parse_int(const std::string& s, std::size_t at, const char* what) {
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size() || v <= 0 || v > (1 << 24))
        throw DecodeError(std::string("invalid ") + what + " '" + s + "'", at);
    return v;
}

DecodedDepth decode_pfm(std::span<const std::uint8_t> bytes) {
    Cursor c{bytes};
    const std::string magic = c.token("magic");
    if (magic == "PF") throw DecodeError("color PFM is not a depth map", 0);
    if (magic != "Pf") throw DecodeError("not a PFM file", 0);
    const std::string w_tok = c.token("width");
    const long w = parse_int(w_tok, c.start, "width");
    const std::string h_tok = c.token("height");
    const long h = parse_int(h_tok, c.start, "height");
    const std::string scale_tok = c.token("scale");
    const std::size_t at = c.start;
    char* end = nullptr;
    const double scale = std::strtod(scale_tok.c_str(), &end);
    if (end != scale_tok.c_str() + scale_tok.size() || scale == 0.0 || !std::isfinite(scale))
        throw DecodeError("invalid PFM scale '" + scale_tok + "'", at);
    if (c.pos >= bytes.size() || !std::isspace(bytes[c.pos])) throw DecodeError("truncated PFM header", c.pos);
    const std::size_t data_start = c.pos + 1;
    const auto count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() - data_start < count * 4)
        throw DecodeError("PFM pixel data truncated: expected " + std::to_string(count * 4) + " bytes",
                          bytes.size());
    const bool little = scale < 0.0;

    DecodedDepth out;
    out.width = static_cast<int>(w);
    out.height = static_cast<int>(h);
    out.meta.format = DepthFormat::pfm;
    out.data.resize(count);
    std::size_t off = data_start;
    for (long row = h - 1; row >= 0; --row) {
        for (long u = 0; u < w; ++u, off += 4) {
            std::uint32_t bits = 0;
            for (int k = 0; k < 4; ++k) {
                const std::uint32_t b = bytes[off + static_cast<std::size_t>(k)];
                bits |= little ? (b << (8 * k)) : (b << (8 * (3 - k)));
            }
            float d;
            std::memcpy(&d, &bits, 4);
            if (!std::isfinite(d) || d < 0.0f) throw DecodeError("depth value is negative or not finite", off);
            out.data[static_cast<std::size_t>(row) * static_cast<std::size_t>(w) + static_cast<std::size_t>(u)] = d;
        }
    }
    return out;
}

// ---- PNG plumbing ----

struct PngWriteCtx {
    Bytes* out;
    char message[256];
};

void png_write_cb(png_structp png, png_bytep data, png_size_t len) {
    auto* ctx = static_cast<PngWriteCtx*>(png_get_io_ptr(png));
    ctx->out->insert(ctx->out->end(), data, data + len);
}

void png_flush_cb(png_structp) {}

void png_error_cb(png_structp png, png_const_charp msg) {
    auto* buf = static_cast<char*>(png_get_error_ptr(png));
    std::snprintf(buf, 256, "%s", msg);
    png_longjmp(png, 1);
}

void png_warning_cb(png_structp, png_const_charp) {}

// Rows are big-endian samples already packed for the given bit depth.
Bytes write_gray_png(int w, int h, int bit_depth, const std::vector<std::uint8_t>& pixels,
                     const std::string* meta_text) {
    Bytes out;
    char message[256] = {0};
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, message, png_error_cb, png_warning_cb);
    if (!png) throw IoError("cannot allocate PNG writer");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("cannot allocate PNG writer");
    }
    PngWriteCtx ctx{&out, {}};
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    const std::size_t stride = static_cast<std::size_t>(w) * static_cast<std::size_t>(bit_depth / 8);
    for (int r = 0; r < h; ++r)
        rows[static_cast<std::size_t>(r)] = const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(r) * stride);
    png_text text{};
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError(std::string("PNG encode failed: ") + message);
    }
    png_set_write_fn(png, &ctx, png_write_cb, png_flush_cb);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    if (meta_text) {
        text.compression = PNG_TEXT_COMPRESSION_NONE;
        text.key = const_cast<char*>(kDepthMetaKey);
        text.text = const_cast<char*>(meta_text->c_str());
        text.text_length = meta_text->size();
        png_set_text(png, info, &text, 1);
    }
    png_set_rows(png, info, rows.data());
    png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

struct PngReadCtx {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;
};

void png_read_cb(png_structp png, png_bytep data, png_size_t len) {
    auto* ctx = static_cast<PngReadCtx*>(png_get_io_ptr(png));
    if (ctx->bytes.size() - ctx->pos < len) {
        ctx->pos = ctx->bytes.size();
        png_error(png, "unexpected end of PNG data");
    }
    std::memcpy(data, ctx->bytes.data() + ctx->pos, len);
    ctx->pos += len;
}

struct GrayImage {
    int width = 0;
    int height = 0;
    int bit_depth = 0;
    std::vector<std::uint16_t> values;
    std::optional<std::string> meta_text;
    std::size_t meta_offset = 0;
};

// Walks the chunk list first so structural damage reports a precise offset.
void scan_png_chunks(std::span<const std::uint8_t> bytes, GrayImage& img) {
    if (bytes.size() < 8 || !std::equal(kPngSig, kPngSig + 8, bytes.begin()))
        throw DecodeError("bad PNG signature", 0);
    std::size_t off = 8;
    bool seen_end = false;
    while (off < bytes.size()) {
        if (bytes.size() - off < 12) throw DecodeError("truncated PNG chunk header", off);
        const std::uint32_t len = (std::uint32_t(bytes[off]) << 24) | (std::uint32_t(bytes[off + 1]) << 16) |
                                  (std::uint32_t(bytes[off + 2]) << 8) | std::uint32_t(bytes[off + 3]);
        if (len > bytes.size() - off - 12) throw DecodeError("PNG chunk length exceeds file size", off);
        const std::string type(reinterpret_cast<const char*>(bytes.data() + off + 4), 4);
        if (type == "tEXt") {
            const auto* data = reinterpret_cast<const char*>(bytes.data() + off + 8);
            const std::string chunk(data, len);
            const auto nul = chunk.find('\0');
            if (nul != std::string::npos && chunk.substr(0, nul) == kDepthMetaKey) {
                img.meta_text = chunk.substr(nul + 1);
                img.meta_offset = off + 8 + nul + 1;
            }
        }
        off += 12 + len;
        if (type == "IEND") {
            seen_end = true;
            break;
        }
    }
    if (!seen_end) throw DecodeError("PNG has no IEND chunk", off);
}

GrayImage read_gray_png(std::span<const std::uint8_t> bytes) {
    GrayImage img;
    scan_png_chunks(bytes, img);

    char message[256] = {0};
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, message, png_error_cb, png_warning_cb);
    if (!png) throw IoError("cannot allocate PNG reader");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("cannot allocate PNG reader");
    }
    PngReadCtx ctx{bytes, 0};
    std::vector<png_byte> raw;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DecodeError(std::string("PNG decode failed: ") + message, ctx.pos);
    }
    png_set_read_fn(png, &ctx, png_read_cb);
    png_read_info(png, info);
    const auto w = png_get_image_width(png, info);
    const auto h = png_get_image_height(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (color != PNG_COLOR_TYPE_GRAY || (depth != 8 && depth != 16)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DecodeError("expected an 8- or 16-bit grayscale PNG", 16);
    }
    png_set_interlace_handling(png);
    png_read_update_info(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    raw.resize(stride * h);
    rows.resize(h);
    for (png_uint_32 r = 0; r < h; ++r) rows[r] = raw.data() + r * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.bit_depth = depth;
    img.values.resize(static_cast<std::size_t>(w) * h);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t u = 0; u < w; ++u) {
            const std::uint8_t* p = raw.data() + r * stride;
            img.values[r * w + u] = depth == 16 ? static_cast<std::uint16_t>((p[2 * u] << 8) | p[2 * u + 1]) : p[u];
        }
    return img;
}

std::vector<std::uint8_t> pack_rows(const std::vector<std::uint16_t>& values, int bit_depth) {
    std::vector<std::uint8_t> out;
    out.reserve(values.size() * static_cast<std::size_t>(bit_depth / 8));
    for (std::uint16_t v : values) {
        if (bit_depth == 16) out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v & 0xff));
    }
    return out;
}

std::string meta_to_text(const DepthFileMeta& meta, const CameraIntrinsics* cam) {
    std::string s = "format=" + to_string(meta.format);
    if (meta.format == DepthFormat::png16) s += ";scale=" + fmt_num(meta.scale);
    if (meta.format == DepthFormat::png8inv) s += ";d_min=" + fmt_num(meta.d_min) + ";d_max=" + fmt_num(meta.d_max);
    if (cam) {
        s += ";fx=" + fmt_num(cam->fx) + ";fy=" + fmt_num(cam->fy) + ";cx=" + fmt_num(cam->cx) +
             ";cy=" + fmt_num(cam->cy);
    }
    return s;
}

std::map<std::string, double> parse_meta_text(const std::string& text, std::size_t base, std::string& format) {
    std::map<std::string, double> kv;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t stop = text.find(';', start);
        if (stop == std::string::npos) stop = text.size();
        const std::string item = text.substr(start, stop - start);
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw DecodeError("malformed " + std::string(kDepthMetaKey) + " entry '" + item + "'", base + start);
        const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
        if (key == "format") {
            format = value;
        } else {
            char* end = nullptr;
            const double v = std::strtod(value.c_str(), &end);
            if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(v))
                throw DecodeError("malformed number for '" + key + "'", base + start + eq + 1);
            kv[key] = v;
        }
        start = stop + 1;
    }
    return kv;
}

DecodedDepth decode_png_depth(std::span<const std::uint8_t> bytes) {
    const GrayImage img = read_gray_png(bytes);
    DecodedDepth out;
    out.width = img.width;
    out.height = img.height;
    std::string format;
    std::map<std::string, double> kv;
    if (img.meta_text) kv = parse_meta_text(*img.meta_text, img.meta_offset, format);
    if (format.empty()) format = img.bit_depth == 16 ? "png16" : "png8inv";
    if (format == "png16") {
        if (img.bit_depth != 16) throw DecodeError("png16 metadata on an 8-bit image", 24);
        out.meta.format = DepthFormat::png16;
        out.meta.scale = kv.count("scale") ? kv["scale"] : 0.001;
        if (!(out.meta.scale > 0.0)) throw DecodeError("png16 scale must be positive", img.meta_offset);
    } else if (format == "png8inv") {
        if (img.bit_depth != 8) throw DecodeError("png8inv metadata on a 16-bit image", 24);
        if (!kv.count("d_min") || !kv.count("d_max"))
            throw DecodeError("png8inv needs d_min and d_max metadata", img.meta_offset);
        out.meta.format = DepthFormat::png8inv;
        out.meta.d_min = kv["d_min"];
        out.meta.d_max = kv["d_max"];
        if (!(out.meta.d_min > 0.0 && out.meta.d_min < out.meta.d_max))
            throw DecodeError("png8inv range must satisfy 0 < d_min < d_max", img.meta_offset);
    } else {
        throw DecodeError("unknown depth format '" + format + "' in metadata", img.meta_offset);
    }
    if (kv.count("fx") && kv.count("fy") && kv.count("cx") && kv.count("cy"))
        out.intrinsics = CameraIntrinsics{img.width, img.height, kv["fx"], kv["fy"], kv["cx"], kv["cy"]};

    out.data.resize(img.values.size());
    if (out.meta.format == DepthFormat::png16) {
        for (std::size_t i = 0; i < img.values.size(); ++i)
            out.data[i] = img.values[i] == 0 ? 0.0f : static_cast<float>(img.values[i] * out.meta.scale);
    } else {
        const double inv_max = 1.0 / out.meta.d_max;
        const double inv_span = 1.0 / out.meta.d_min - inv_max;
        for (std::size_t i = 0; i < img.values.size(); ++i)
            out.data[i] = static_cast<float>(1.0 / (inv_max + inv_span * img.values[i] / 255.0));
    }
    return out;
}

}  // namespace

Bytes encode_depth(const DepthMap& depth, DepthFormat format, const EncodeOptions& opts) {
    if (depth.size() == 0) throw InvalidArgument("cannot encode an empty depth map");
    if (format == DepthFormat::pfm) return encode_pfm(depth);

    const auto data = depth.data();
    const CameraIntrinsics* cam = opts.embed_intrinsics ? &depth.intrinsics() : nullptr;
    DepthFileMeta meta;
    meta.format = format;
    std::vector<std::uint16_t> values(data.size(), 0);
    if (format == DepthFormat::png16) {
        const double dmax = depth.max_depth();
        if (opts.scale) {
            if (!(*opts.scale > 0.0)) throw InvalidArgument("png16 scale must be positive");
            meta.scale = *opts.scale;
            if (std::round(dmax / meta.scale) > 65535.0)
                throw InvalidArgument("depth exceeds the png16 range for scale " + fmt_num(meta.scale));
        } else {
            meta.scale = 0.001;
            while (std::round(dmax / meta.scale) > 65535.0) meta.scale *= 2.0;
        }
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (!DepthMap::valid(data[i])) continue;
            values[i] = static_cast<std::uint16_t>(std::max(1.0, std::round(data[i] / meta.scale)));
        }
        const std::string text = meta_to_text(meta, cam);
        return write_gray_png(depth.width(), depth.height(), 16, pack_rows(values, 16), &text);
    }

    std::vector<double> valid;
    for (float d : data)
        if (DepthMap::valid(d)) valid.push_back(d);
    if (opts.d_min && opts.d_max) {
        meta.d_min = *opts.d_min;
        meta.d_max = *opts.d_max;
    } else {
        if (valid.empty()) throw InvalidArgument("png8inv needs a range; the map holds no valid depth");
        meta.d_min = opts.d_min.value_or(percentile(valid, 1.0));
        meta.d_max = opts.d_max.value_or(percentile(valid, 99.0));
        if (!(meta.d_max > meta.d_min)) meta.d_max = meta.d_min * (1.0 + 1e-6) + 1e-6;
    }
    if (!(meta.d_min > 0.0 && meta.d_min < meta.d_max))
        throw InvalidArgument("png8inv range must satisfy 0 < d_min < d_max");
    const double inv_max = 1.0 / meta.d_max;
    const double inv_span = 1.0 / meta.d_min - inv_max;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!DepthMap::valid(data[i])) continue;
        const double q = 255.0 * ((1.0 / data[i] - inv_max) / inv_span);
        values[i] = static_cast<std::uint16_t>(std::clamp(std::round(q), 0.0, 255.0));
    }
    const std::string text = meta_to_text(meta, cam);
    return write_gray_png(depth.width(), depth.height(), 8, pack_rows(values, 8), &text);
}

DecodedDepth decode_depth(std::span<const std::uint8_t> bytes) {
    if (bytes.size() >= 8 && std::equal(kPngSig, kPngSig + 8, bytes.begin())) return decode_png_depth(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == 'f' || bytes[1] == 'F')) return decode_pfm(bytes);
    throw DecodeError("unrecognized depth file (expected PFM or PNG)", 0);
}

DepthMap DecodedDepth::to_depth_map(const std::optional<CameraIntrinsics>& fallback, bool override_cam) const {
    std::optional<CameraIntrinsics> cam = override_cam ? fallback : (intrinsics ? intrinsics : fallback);
    if (!cam) throw InvalidArgument("depth file carries no intrinsics; pass --fov or an intrinsics file");
    if (cam->width != width || cam->height != height) cam = cam->resized(width, height);
    return DepthMap(*cam, data);
}

Bytes encode_segments(const SegmentMap& segments) {
    if (segments.width <= 0 || segments.height <= 0) throw InvalidArgument("cannot encode an empty segment map");
    std::vector<std::uint16_t> values(segments.labels.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (segments.labels[i] > 0xffff) throw InvalidArgument("segment id exceeds 16 bits");
        values[i] = static_cast<std::uint16_t>(segments.labels[i]);
    }
    return write_gray_png(segments.width, segments.height, 16, pack_rows(values, 16), nullptr);
}

SegmentMap decode_segments(std::span<const std::uint8_t> bytes) {
    const GrayImage img = read_gray_png(bytes);
    return SegmentMap(img.width, img.height, std::vector<std::uint32_t>(img.values.begin(), img.values.end()));
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    Bytes out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("error reading " + path.string());
    return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("error writing " + path.string());
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        for (int s = 18; s >= 0; s -= 6) out.push_back(kAlphabet[(n >> s) & 63]);
    }
    if (i < bytes.size()) {
        std::uint32_t n = bytes[i] << 16;
        if (i + 1 < bytes.size()) n |= bytes[i + 1] << 8;
        out.push_back(kAlphabet[(n >> 18) & 63]);
        out.push_back(kAlphabet[(n >> 12) & 63]);
        out.push_back(i + 1 < bytes.size() ? kAlphabet[(n >> 6) & 63] : '=');
        out.push_back('=');
    }
    return out;
}

}  // namespace lc
