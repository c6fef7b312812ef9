#pragma once

// ENVI-style header + raw binary cubes.
//
// Header dialect: `key = value` lines, keys case-insensitive, brace lists
// (`wavelength = { 900, 905, ... }`) may span lines. The first line must be
// `ENVI`. Supported data types: 1 uint8, 2 int16, 4 float32, 5 float64,
// 12 uint16. Raw data is little-endian unless `byte order = 1`.

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cube.hpp"
#include "error.hpp"

namespace specshape::envi {

namespace fs = std::filesystem;

enum class DataType : int { uint8 = 1, int16 = 2, float32 = 4, float64 = 5, uint16 = 12 };

inline std::size_t bytes_per_sample(DataType t) {
    switch (t) {
        case DataType::uint8: return 1;
        case DataType::int16: return 2;
        case DataType::uint16: return 2;
        case DataType::float32: return 4;
        case DataType::float64: return 8;
    }
    return 0;
}

struct Header {
    std::size_t samples = 0;  // columns
    std::size_t lines = 0;    // rows
    std::size_t bands = 0;
    Interleave interleave = Interleave::bsq;
    DataType data_type = DataType::float32;
    int byte_order = 0;
    std::size_t header_offset = 0;
    std::vector<double> wavelengths;  // nm
    std::vector<std::string> band_names;
};

namespace detail {

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = char(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string collapse_spaces(std::string s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = true;
            continue;
        }
        if (space && !out.empty()) out += ' ';
        space = false;
        out += c;
    }
    return out;
}

inline std::size_t parse_count(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) throw IoError("header key '" + key + "': not a count: '" + v + "'");
    return out;
}

inline double parse_double(const std::string& key, std::string v) {
    v = trim(v);
    double out = 0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) throw IoError("header key '" + key + "': not a number: '" + v + "'");
    return out;
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::string body = trim(v);
    if (body.size() >= 2 && body.front() == '{' && body.back() == '}') body = body.substr(1, body.size() - 2);
    std::vector<std::string> items;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto t = trim(item);
        if (!t.empty()) items.push_back(t);
    }
    return items;
}

}  // namespace detail

/// Parses header text. Unknown keys are reported through `warnings` (when
/// given) and otherwise ignored.
inline Header parse_header(std::string_view text, std::vector<std::string>* warnings = nullptr) {
    using namespace detail;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || trim(line) != "ENVI") throw IoError("header does not start with 'ENVI'");

    std::map<std::string, std::string> kv;
    while (std::getline(in, line)) {
        if (trim(line).empty() || trim(line).front() == ';') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("header line without '=': '" + trim(line) + "'");
        std::string key = collapse_spaces(lower(trim(line.substr(0, eq))));
        std::string value = trim(line.substr(eq + 1));
        if (!value.empty() && value.front() == '{') {
            while (value.find('}') == std::string::npos) {
                std::string more;
                if (!std::getline(in, more)) throw IoError("unterminated '{' list for key '" + key + "'");
                value += ' ' + trim(more);
            }
        }
        auto [it, inserted] = kv.emplace(key, value);
        if (!inserted && it->second != value) throw IoError("contradictory values for header key '" + key + "'");
    }

    auto require = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw IoError(std::string("missing header key '") + key + "'");
        return it->second;
    };

    Header h;
    h.samples = parse_count("samples", require("samples"));
    h.lines = parse_count("lines", require("lines"));
    h.bands = parse_count("bands", require("bands"));
    const int dt = int(parse_count("data type", require("data type")));
    switch (dt) {
        case 1: case 2: case 4: case 5: case 12: h.data_type = DataType(dt); break;
        default: throw IoError("unsupported data type " + std::to_string(dt));
    }
    const std::string il = lower(require("interleave"));
    if (il == "bsq") h.interleave = Interleave::bsq;
    else if (il == "bil") h.interleave = Interleave::bil;
    else if (il == "bip") h.interleave = Interleave::bip;
    else throw IoError("unsupported interleave '" + il + "'");

    static const char* known[] = {"samples", "lines", "bands", "data type", "interleave", "byte order",
                                  "header offset", "wavelength", "wavelength units", "band names",
                                  "description", "file type", "sensor type"};
    for (const auto& [key, value] : kv) {
        (void)value;
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
                std::end(known) &&
            warnings)
            warnings->push_back("ignoring unknown header key '" + key + "'");
    }

    if (auto it = kv.find("byte order"); it != kv.end()) {
        h.byte_order = int(parse_count("byte order", it->second));
        if (h.byte_order != 0 && h.byte_order != 1) throw IoError("byte order must be 0 or 1");
    }
    if (auto it = kv.find("header offset"); it != kv.end()) h.header_offset = parse_count("header offset", it->second);

    auto wl = kv.find("wavelength");
    if (wl == kv.end()) throw IoError("missing header key 'wavelength'");
    double scale = 1.0;
    if (auto u = kv.find("wavelength units"); u != kv.end()) {
        const auto units = lower(u->second);
        if (units == "micrometers" || units == "um" || units == "microns") scale = 1000.0;
        else if (units != "nanometers" && units != "nm") throw IoError("unsupported wavelength units '" + units + "'");
    }
    for (const auto& item : split_list(wl->second)) h.wavelengths.push_back(parse_double("wavelength", item) * scale);
    if (h.wavelengths.size() != h.bands)
        throw IoError("header declares " + std::to_string(h.bands) + " bands but lists " +
                      std::to_string(h.wavelengths.size()) + " wavelengths");
    for (std::size_t i = 1; i < h.wavelengths.size(); ++i)
        if (!(h.wavelengths[i] > h.wavelengths[i - 1]))
            throw IoError("wavelengths not strictly increasing at band " + std::to_string(i));
    if (auto bn = kv.find("band names"); bn != kv.end()) h.band_names = split_list(bn->second);
    return h;
}

inline std::string format_header(const Header& h) {
    std::ostringstream out;
    out << "ENVI\n"
        << "description = {specshape cube}\n"
        << "samples = " << h.samples << "\n"
        << "lines = " << h.lines << "\n"
        << "bands = " << h.bands << "\n"
        << "header offset = " << h.header_offset << "\n"
        << "file type = ENVI Standard\n"
        << "data type = " << int(h.data_type) << "\n"
        << "interleave = " << to_string(h.interleave) << "\n"
        << "byte order = " << h.byte_order << "\n"
        << "wavelength units = Nanometers\n"
        << "wavelength = {";
    out.precision(17);
    for (std::size_t i = 0; i < h.wavelengths.size(); ++i) out << (i ? ", " : "") << h.wavelengths[i];
    out << "}\n";
    return out.str();
}

/// Raw file next to a header: `x.hdr` pairs with `x`, `x.raw`, `x.img`,
/// `x.dat`, `x.bin` or `x.<interleave>`, first match wins.
inline fs::path find_raw_file(const fs::path& header_path) {
    fs::path stem = header_path;
    if (detail::lower(stem.extension().string()) == ".hdr") stem.replace_extension();
    for (const char* ext : {"", ".raw", ".img", ".dat", ".bin", ".bsq", ".bil", ".bip"}) {
        fs::path candidate = stem;
        candidate += ext;
        if (candidate != header_path && fs::is_regular_file(candidate)) return candidate;
    }
    throw IoError("no raw data file found for header " + header_path.string());
}

inline std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace detail {

template <class T>
T load_sample(const unsigned char* p, bool swap) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, p, sizeof(T));
    if (swap) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

inline double load_any(const unsigned char* p, DataType t, bool swap) {
    switch (t) {
        case DataType::uint8: return *p;
        case DataType::int16: return load_sample<std::int16_t>(p, swap);
        case DataType::uint16: return load_sample<std::uint16_t>(p, swap);
        case DataType::float32: return load_sample<float>(p, swap);
        case DataType::float64: return load_sample<double>(p, swap);
    }
    return 0;
}

inline std::size_t file_offset(Interleave il, std::size_t rows, std::size_t cols, std::size_t bands,
                               std::size_t r, std::size_t c, std::size_t b) {
    (void)rows;
    switch (il) {
        case Interleave::bsq: return (b * rows + r) * cols + c;
        case Interleave::bil: return (r * bands + b) * cols + c;
        case Interleave::bip: return (r * cols + c) * bands + b;
    }
    return 0;
}

}  // namespace detail

/// Reads a cube. Pixels holding any non-finite sample are marked invalid and
/// zeroed (write_envi stores invalid pixels as NaN when writing floats).
inline SpectralCube read_envi(const fs::path& header_path, std::vector<std::string>* warnings = nullptr) {
    if (!fs::is_regular_file(header_path)) throw IoError("header not found: " + header_path.string());
    const Header h = parse_header(read_text_file(header_path), warnings);
    const fs::path raw_path = find_raw_file(header_path);

    const std::size_t bps = bytes_per_sample(h.data_type);
    const std::size_t n = h.lines * h.samples * h.bands;
    const std::uintmax_t expected = h.header_offset + n * bps;
    const std::uintmax_t actual = fs::file_size(raw_path);
    if (actual != expected)
        throw IoError("raw file " + raw_path.string() + " has " + std::to_string(actual) + " bytes, header implies " +
                      std::to_string(expected));

    std::ifstream in(raw_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + raw_path.string());
    std::vector<unsigned char> bytes(n * bps);
    in.seekg(std::streamoff(h.header_offset));
    in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!in) throw IoError("short read on " + raw_path.string());

    const bool swap = (h.byte_order == 1) != (std::endian::native == std::endian::big);
    std::vector<float> data(n);
    for (std::size_t r = 0; r < h.lines; ++r)
        for (std::size_t c = 0; c < h.samples; ++c)
            for (std::size_t b = 0; b < h.bands; ++b) {
                const auto off = detail::file_offset(h.interleave, h.lines, h.samples, h.bands, r, c, b) * bps;
                data[(r * h.samples + c) * h.bands + b] = float(detail::load_any(bytes.data() + off, h.data_type, swap));
            }

    SpectralCube cube(h.lines, h.samples, h.wavelengths, std::move(data), h.interleave);
    for (std::size_t r = 0; r < cube.rows(); ++r)
        for (std::size_t c = 0; c < cube.cols(); ++c) {
            auto px = cube.pixel(r, c);
            if (std::any_of(px.begin(), px.end(), [](float v) { return !std::isfinite(v); })) {
                std::fill(px.begin(), px.end(), 0.0f);
                cube.set_valid(r, c, false);
            }
        }
    return cube;
}

/// Writes `<stem>.hdr` + `<stem>.raw` (little-endian). Invalid pixels are
/// written as NaN for float types and as 0 for integer types.
inline void write_envi(const SpectralCube& cube, const fs::path& header_path, Interleave layout = Interleave::bsq,
                       DataType type = DataType::float32) {
    if (type != DataType::float32 && type != DataType::float64 && type != DataType::uint16)
        throw IoError("write_envi supports float32, float64 and uint16 only");
    Header h;
    h.samples = cube.cols();
    h.lines = cube.rows();
    h.bands = cube.bands();
    h.interleave = layout;
    h.data_type = type;
    h.wavelengths.assign(cube.wavelengths().begin(), cube.wavelengths().end());

    fs::path stem = header_path;
    if (detail::lower(stem.extension().string()) == ".hdr") stem.replace_extension();
    fs::path hdr = stem;
    hdr += ".hdr";
    fs::path raw = stem;
    raw += ".raw";

    const std::size_t bps = bytes_per_sample(type);
    std::vector<unsigned char> bytes(cube.rows() * cube.cols() * cube.bands() * bps);
    const bool swap = std::endian::native == std::endian::big;
    for (std::size_t r = 0; r < cube.rows(); ++r)
        for (std::size_t c = 0; c < cube.cols(); ++c) {
            const bool valid = cube.is_valid(r, c);
            for (std::size_t b = 0; b < cube.bands(); ++b) {
                const float v = cube.at(r, c, b);
                unsigned char* p =
                    bytes.data() + detail::file_offset(layout, cube.rows(), cube.cols(), cube.bands(), r, c, b) * bps;
                unsigned char buf[8];
                if (type == DataType::float32) {
                    const float x = valid ? v : std::numeric_limits<float>::quiet_NaN();
                    std::memcpy(buf, &x, 4);
                } else if (type == DataType::float64) {
                    const double x = valid ? double(v) : std::numeric_limits<double>::quiet_NaN();
                    std::memcpy(buf, &x, 8);
                } else {
                    const double clamped = std::clamp(std::round(double(v)), 0.0, 65535.0);
                    const std::uint16_t x = valid ? std::uint16_t(clamped) : 0;
                    std::memcpy(buf, &x, 2);
                }
                if (swap) std::reverse(buf, buf + bps);
                std::memcpy(p, buf, bps);
            }
        }

    {
        std::ofstream out(raw, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + raw.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
        if (!out) throw IoError("write failed on " + raw.string());
    }
    std::ofstream out(hdr, std::ios::trunc);
    if (!out) throw IoError("cannot write " + hdr.string());
    out << format_header(h);
    if (!out) throw IoError("write failed on " + hdr.string());
}

}  // namespace specshape::envi
