#pragma once

// Label maps: per-pixel class ids stored as an 8-bit indexed PNG plus a
// UTF-8 class table sidecar (`id<TAB>name<TAB>#RRGGBB` per line).

#include <png.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace specshape {

using ClassId = std::uint16_t;
inline constexpr ClassId kUnclassified = 0;

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct ClassInfo {
    std::string name;
    Rgb color;
    friend bool operator==(const ClassInfo&, const ClassInfo&) = default;
};

using ClassTable = std::map<ClassId, ClassInfo>;

struct LabelMap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<ClassId> labels;  // row-major
    ClassTable class_table;

    LabelMap() = default;
    LabelMap(std::size_t r, std::size_t c, ClassTable table = {})
        : rows(r), cols(c), labels(r * c, kUnclassified), class_table(std::move(table)) {}

    ClassId at(std::size_t row, std::size_t col) const { return labels[row * cols + col]; }
    ClassId& at(std::size_t row, std::size_t col) { return labels[row * cols + col]; }

    /// Pixel count per class id (including 0).
    std::map<ClassId, std::size_t> counts() const {
        std::map<ClassId, std::size_t> out;
        for (auto l : labels) ++out[l];
        return out;
    }

    friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

/// Distinct display colors; index 0 is the background.
inline Rgb default_class_color(ClassId id) {
    static constexpr std::array<Rgb, 13> palette{{{0, 0, 0},
                                                  {230, 25, 75},
                                                  {60, 180, 75},
                                                  {255, 225, 25},
                                                  {0, 130, 200},
                                                  {245, 130, 48},
                                                  {145, 30, 180},
                                                  {70, 240, 240},
                                                  {240, 50, 230},
                                                  {210, 245, 60},
                                                  {250, 190, 212},
                                                  {0, 128, 128},
                                                  {170, 110, 40}}};
    if (id < palette.size()) return palette[id];
    // Deterministic hash colour for the long tail.
    std::uint32_t h = 2166136261u ^ id;
    h *= 16777619u;
    h ^= h >> 13;
    h *= 0x5bd1e995u;
    return {std::uint8_t(64 + (h & 0xbf)), std::uint8_t(64 + ((h >> 8) & 0xbf)), std::uint8_t(64 + ((h >> 16) & 0xbf))};
}

inline std::string format_color(Rgb c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02X%02X%02X", c.r, c.g, c.b);
    return buf;
}

inline Rgb parse_color(const std::string& s) {
    if (s.size() != 7 || s[0] != '#') throw IoError("bad colour '" + s + "', expected #RRGGBB");
    unsigned v = 0;
    for (std::size_t i = 1; i < 7; ++i) {
        const char ch = s[i];
        unsigned d;
        if (ch >= '0' && ch <= '9') d = unsigned(ch - '0');
        else if (ch >= 'a' && ch <= 'f') d = unsigned(ch - 'a' + 10);
        else if (ch >= 'A' && ch <= 'F') d = unsigned(ch - 'A' + 10);
        else throw IoError("bad colour '" + s + "', expected #RRGGBB");
        v = v * 16 + d;
    }
    return {std::uint8_t(v >> 16), std::uint8_t(v >> 8), std::uint8_t(v)};
}

/// Sidecar path for a label image: `labels.png` -> `labels.classes.tsv`.
inline std::filesystem::path class_table_path(const std::filesystem::path& png_path) {
    auto p = png_path;
    p.replace_extension(".classes.tsv");
    return p;
}

inline std::string format_class_table(const ClassTable& table) {
    std::ostringstream out;
    for (const auto& [id, info] : table) out << id << '\t' << info.name << '\t' << format_color(info.color) << '\n';
    return out.str();
}

inline ClassTable parse_class_table(const std::string& text) {
    ClassTable table;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string::npos)
            throw IoError("class table line " + std::to_string(lineno) + ": expected id<TAB>name<TAB>#RRGGBB");
        unsigned long id = 0;
        try {
            std::size_t used = 0;
            id = std::stoul(line.substr(0, t1), &used);
            if (used != t1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw IoError("class table line " + std::to_string(lineno) + ": bad class id");
        }
        if (id > 0xffff) throw IoError("class table line " + std::to_string(lineno) + ": class id out of range");
        if (!table.emplace(ClassId(id), ClassInfo{line.substr(t1 + 1, t2 - t1 - 1), parse_color(line.substr(t2 + 1))})
                 .second)
            throw IoError("class table line " + std::to_string(lineno) + ": duplicate id " + std::to_string(id));
    }
    return table;
}

namespace detail {

struct PngFile {
    std::FILE* fp = nullptr;
    ~PngFile() {
        if (fp) std::fclose(fp);
    }
};

[[noreturn]] inline void png_error_fn(png_structp png, png_const_charp msg) {
    auto* err = static_cast<std::string*>(png_get_error_ptr(png));
    if (err) *err = msg;
    png_longjmp(png, 1);
}

inline void png_warning_fn(png_structp, png_const_charp) {}

struct PngSink {
    std::string bytes;
    std::string err;
};

// Kept free of C++ locals so nothing lives across setjmp/longjmp.
inline bool png_encode_indexed(const png_color* palette, int palette_size, const png_byte* pixels, png_uint_32 width,
                               png_uint_32 height, PngSink& sink) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &sink.err, png_error_fn, png_warning_fn);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_set_write_fn(
        png, &sink,
        [](png_structp p, png_bytep data, png_size_t len) {
            static_cast<PngSink*>(png_get_io_ptr(p))->bytes.append(reinterpret_cast<const char*>(data), len);
        },
        [](png_structp) {});
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_PALETTE, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_set_PLTE(png, info, palette, palette_size);
    png_write_info(png, info);
    for (png_uint_32 r = 0; r < height; ++r) png_write_row(png, pixels + std::size_t(r) * width);
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
    return true;
}

struct PngDecoded {
    png_uint_32 width = 0, height = 0;
    std::vector<png_byte> pixels;
    std::vector<png_bytep> rows;
    std::string err;
};

// Decodes an 8-bit (or packed) palette or grey image to one byte per pixel.
// `fp` is positioned after the signature. Same setjmp rule as above.
inline bool png_decode_indexed(std::FILE* fp, PngDecoded& out) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &out.err, png_error_fn, png_warning_fn);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_init_io(png, fp);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    if (color_type != PNG_COLOR_TYPE_PALETTE && color_type != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        out.err = "label map must be an indexed (palette) or grey PNG";
        return false;
    }
    if (bit_depth == 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        out.err = "16-bit label images are not supported";
        return false;
    }
    if (bit_depth < 8) png_set_packing(png);
    png_read_update_info(png, info);
    out.width = png_get_image_width(png, info);
    out.height = png_get_image_height(png, info);
    out.pixels.resize(std::size_t(out.width) * out.height);
    out.rows.resize(out.height);
    for (png_uint_32 r = 0; r < out.height; ++r) out.rows[r] = out.pixels.data() + std::size_t(r) * out.width;
    png_read_image(png, out.rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

}  // namespace detail

inline void check_writable(const LabelMap& map) {
    if (map.labels.size() != map.rows * map.cols) throw IoError("label map size does not match its dimensions");
    if (map.rows == 0 || map.cols == 0) throw IoError("cannot write an empty label map");
    if (map.class_table.size() > 255 || (!map.class_table.empty() && map.class_table.rbegin()->first > 255))
        throw IoError("palette overflow: indexed PNG holds at most 255 classes (ids 1..255)");
    for (auto l : map.labels) {
        if (l > 255) throw IoError("palette overflow: label id above 255");
        if (l != kUnclassified && !map.class_table.count(l))
            throw IoError("label " + std::to_string(l) + " has no class-table entry");
    }
}

/// Indexed 8-bit PNG bytes for a label map.
inline std::string encode_label_png(const LabelMap& map) {
    check_writable(map);
    ClassId max_id = 0;
    for (auto l : map.labels) max_id = std::max(max_id, l);
    if (!map.class_table.empty()) max_id = std::max(max_id, map.class_table.rbegin()->first);

    std::vector<png_color> palette(std::size_t(max_id) + 1);
    for (std::size_t i = 0; i < palette.size(); ++i) {
        Rgb c = default_class_color(ClassId(i));
        if (auto it = map.class_table.find(ClassId(i)); it != map.class_table.end()) c = it->second.color;
        palette[i] = {c.r, c.g, c.b};
    }
    std::vector<png_byte> pixels(map.labels.begin(), map.labels.end());

    detail::PngSink sink;
    if (!detail::png_encode_indexed(palette.data(), int(palette.size()), pixels.data(), png_uint_32(map.cols),
                                    png_uint_32(map.rows), sink))
        throw IoError("PNG encode failed: " + sink.err);
    return std::move(sink.bytes);
}

/// Writes the indexed PNG and its class-table sidecar. Fails when an id is
/// above 255 (8-bit palette) or a nonzero label has no class-table entry.
inline void write_label_map(const LabelMap& map, const std::filesystem::path& path) {
    const std::string bytes = encode_label_png(map);
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out.write(bytes.data(), std::streamsize(bytes.size()));
        if (!out) throw IoError("write failed on " + path.string());
    }
    std::ofstream side(class_table_path(path), std::ios::trunc | std::ios::binary);
    if (!side) throw IoError("cannot write " + class_table_path(path).string());
    side << format_class_table(map.class_table);
}

/// Reads a label map written by write_label_map. When `expected_rows/cols`
/// are given the image must match them.
inline LabelMap read_label_map(const std::filesystem::path& path, std::optional<std::size_t> expected_rows = {},
                               std::optional<std::size_t> expected_cols = {}) {
    detail::PngFile file;
    file.fp = std::fopen(path.string().c_str(), "rb");
    if (!file.fp) throw IoError("cannot open " + path.string());
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, file.fp) != 8 || png_sig_cmp(sig, 0, 8)) throw IoError(path.string() + " is not a PNG");

    detail::PngDecoded img;
    if (!detail::png_decode_indexed(file.fp, img))
        throw IoError(img.err.empty() ? "PNG decode failed for " + path.string() : path.string() + ": " + img.err);
    LabelMap map;
    map.rows = img.height;
    map.cols = img.width;
    map.labels.assign(img.pixels.begin(), img.pixels.end());
    if ((expected_rows && *expected_rows != map.rows) || (expected_cols && *expected_cols != map.cols))
        throw IoError("label map " + path.string() + " is " + std::to_string(map.rows) + "x" + std::to_string(map.cols) +
                      ", expected " + std::to_string(expected_rows.value_or(map.rows)) + "x" +
                      std::to_string(expected_cols.value_or(map.cols)));

    const auto side = class_table_path(path);
    if (std::filesystem::exists(side)) {
        std::ifstream in(side, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        map.class_table = parse_class_table(ss.str());
    }
    for (auto l : map.labels)
        if (l != kUnclassified && !map.class_table.count(l))
            throw IoError("label " + std::to_string(l) + " in " + path.string() + " has no class-table entry");
    return map;
}

}  // namespace specshape
