#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include <specshape/calibrate.hpp>
#include <specshape/envi.hpp>

#include "test_support.hpp"

using namespace specshape;
using testutil::TempDir;
using testutil::write_file;

namespace {

std::string tiny_header(const std::string& extra = "") {
    return "ENVI\nsamples = 2\nlines = 1\nbands = 3\nheader offset = 0\ndata type = 4\ninterleave = bsq\n"
           "byte order = 0\nwavelength = { 900, 905, 910 }\n" +
           extra;
}

std::string floats(std::initializer_list<float> v) {
    std::string s(v.size() * 4, '\0');
    std::size_t i = 0;
    for (float f : v) std::memcpy(s.data() + 4 * i++, &f, 4);
    return s;
}

SpectralCube random_cube(std::size_t rows, std::size_t cols, std::size_t bands, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.2f);
    auto cube = SpectralCube::zeros(rows, cols, linear_axis(900, 1700, bands));
    for (auto& v : cube.data()) v = u(rng);
    return cube;
}

void expect_same_samples(const SpectralCube& a, const SpectralCube& b) {
    ASSERT_EQ(a.rows(), b.rows());
    ASSERT_EQ(a.cols(), b.cols());
    ASSERT_EQ(a.bands(), b.bands());
    EXPECT_TRUE(std::equal(a.wavelengths().begin(), a.wavelengths().end(), b.wavelengths().begin()));
    EXPECT_TRUE(std::equal(a.valid_mask().begin(), a.valid_mask().end(), b.valid_mask().begin()));
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
            for (std::size_t k = 0; k < a.bands(); ++k) ASSERT_EQ(a.at(r, c, k), b.at(r, c, k)) << r << "," << c << "," << k;
}

}  // namespace

TEST(EnviRead, SmallestWellFormedCube) {
    TempDir dir;
    write_file(dir / "c.hdr", tiny_header());
    write_file(dir / "c.raw", floats({0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.6f}));
    const auto cube = envi::read_envi(dir / "c.hdr");
    EXPECT_EQ(cube.rows(), 1u);
    EXPECT_EQ(cube.cols(), 2u);
    EXPECT_EQ(cube.bands(), 3u);
    EXPECT_EQ(cube.wavelengths()[0], 900.0);
    EXPECT_EQ(cube.wavelengths()[2], 910.0);
    // BSQ: band 0 holds both samples first.
    EXPECT_FLOAT_EQ(cube.at(0, 0, 0), 0.1f);
    EXPECT_FLOAT_EQ(cube.at(0, 1, 0), 0.2f);
    EXPECT_FLOAT_EQ(cube.at(0, 0, 1), 0.3f);
    EXPECT_FLOAT_EQ(cube.at(0, 1, 2), 0.6f);
    EXPECT_EQ(cube.valid_count(), 2u);
}

TEST(EnviRead, SizeMismatchIsAnError) {
    TempDir dir;
    write_file(dir / "c.hdr", tiny_header());
    write_file(dir / "c.raw", std::string(23, '\0'));
    try {
        envi::read_envi(dir / "c.hdr");
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("23 bytes"), std::string::npos) << e.what();
    }
}

TEST(EnviRead, PlasticsSizedHeader) {
    TempDir dir;
    std::string wl = "wavelength = {";
    const auto axis = linear_axis(900, 1700, 229);
    for (std::size_t i = 0; i < axis.size(); ++i) wl += (i ? ", " : " ") + std::to_string(axis[i]);
    wl += " }\n";
    write_file(dir / "plastics.hdr", "ENVI\nsamples = 500\nlines = 661\nbands = 229\ndata type = 1\n"
                                     "interleave = bil\n" + wl);
    write_file(dir / "plastics.raw", std::string(std::size_t(661) * 500 * 229, '\x10'));
    const auto cube = envi::read_envi(dir / "plastics.hdr");
    EXPECT_EQ(cube.rows(), 661u);
    EXPECT_EQ(cube.cols(), 500u);
    EXPECT_EQ(cube.bands(), 229u);
    EXPECT_NEAR(cube.wavelengths().front(), 900.0, 1e-6);
    EXPECT_NEAR(cube.wavelengths().back(), 1700.0, 1e-6);
    EXPECT_EQ(cube.at(660, 499, 228), 16.0f);
}

TEST(EnviRead, HeaderErrors) {
    std::vector<std::string> warnings;
    EXPECT_THROW(envi::parse_header("ENVI\nsamples = 2\nbands = 3\ndata type = 4\n"), IoError);  // no lines
    EXPECT_THROW(envi::parse_header("ENVI\nsamples = 2\nlines = 1\nbands = 3\ndata type = 6\n"
                                    "wavelength = {1,2,3}\n"),
                 IoError);  // complex
    EXPECT_THROW(envi::parse_header("ENVI\nsamples = 2\nlines = 1\nbands = 3\ndata type = 4\n"
                                    "wavelength = {900, 910, 905}\n"),
                 IoError);
    EXPECT_THROW(envi::parse_header("ENVI\nsamples = 2\nsamples = 3\nlines = 1\nbands = 3\ndata type = 4\n"
                                    "wavelength = {1,2,3}\n"),
                 IoError);  // contradictory duplicate
    EXPECT_THROW(envi::parse_header("ENVI\nsamples = 2\nlines = 1\nbands = 3\ndata type = 4\n"
                                    "wavelength = {1,2}\n"),
                 IoError);
    EXPECT_THROW(envi::parse_header("not a header\n"), IoError);
    EXPECT_THROW(envi::read_envi("/nonexistent/cube.hdr"), IoError);
}

TEST(EnviRead, HeaderDialect) {
    std::vector<std::string> warnings;
    const auto h = envi::parse_header("ENVI\nSAMPLES = 2\nLines=1\nBands = 3\nData Type = 12\nInterleave = BIP\n"
                                      "wavelength units = Micrometers\nwavelength = {\n 0.9,\n 0.905,\n 0.91}\n"
                                      "sensor type = Specim FX17\nFrame Rate = 100\n",
                                      &warnings);
    EXPECT_EQ(h.samples, 2u);
    EXPECT_EQ(h.data_type, envi::DataType::uint16);
    EXPECT_EQ(h.interleave, Interleave::bip);
    ASSERT_EQ(h.wavelengths.size(), 3u);
    EXPECT_NEAR(h.wavelengths[1], 905.0, 1e-9);
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("frame rate"), std::string::npos);
}

TEST(EnviRead, BigEndianAndUint16) {
    TempDir dir;
    write_file(dir / "u.hdr", "ENVI\nsamples = 1\nlines = 1\nbands = 3\ndata type = 12\nbyte order = 1\n"
                              "interleave = bip\nwavelength = {900, 905, 910}\n");
    write_file(dir / "u.raw", std::string("\x01\x00\x00\x02\xff\xff", 6));
    const auto cube = envi::read_envi(dir / "u.hdr");
    EXPECT_EQ(cube.at(0, 0, 0), 256.0f);
    EXPECT_EQ(cube.at(0, 0, 1), 2.0f);
    EXPECT_EQ(cube.at(0, 0, 2), 65535.0f);
}

TEST(EnviRoundTrip, AllLayoutsPreserveEverySample) {
    TempDir dir;
    auto cube = random_cube(5, 7, 11, 3);
    cube.set_valid(2, 3, false);
    for (auto il : {Interleave::bsq, Interleave::bil, Interleave::bip}) {
        const auto path = dir / (std::string("c_") + to_string(il) + ".hdr");
        envi::write_envi(cube, path, il);
        const auto back = envi::read_envi(path);
        EXPECT_EQ(back.source_layout(), il);
        // Invalid pixels are stored as NaN and come back invalid with zeros.
        auto expect = cube;
        std::fill(expect.pixel(2, 3).begin(), expect.pixel(2, 3).end(), 0.0f);
        expect_same_samples(back, expect);
        // Cross-conversion: re-write in another layout, read again.
        const auto path2 = dir / (std::string("x_") + to_string(il) + ".hdr");
        envi::write_envi(back, path2, il == Interleave::bip ? Interleave::bsq : Interleave::bip);
        expect_same_samples(envi::read_envi(path2), expect);
    }
}

TEST(EnviRoundTrip, Float64AndUint16) {
    TempDir dir;
    auto cube = SpectralCube::zeros(3, 4, linear_axis(900, 1700, 6));
    std::mt19937 rng(9);
    for (auto& v : cube.data()) v = float(rng() % 4000);
    envi::write_envi(cube, dir / "a.hdr", Interleave::bil, envi::DataType::uint16);
    expect_same_samples(envi::read_envi(dir / "a.hdr"), cube);
    envi::write_envi(cube, dir / "b.hdr", Interleave::bsq, envi::DataType::float64);
    expect_same_samples(envi::read_envi(dir / "b.hdr"), cube);
}

TEST(Calibrate, RawEqualsWhiteGivesOnes) {
    // One-line references, so the averaged white equals the raw line exactly.
    auto raw = random_cube(1, 6, 8, 1);
    for (auto& v : raw.data()) v += 100.0f;
    auto dark = SpectralCube::zeros(1, 6, std::vector<double>(raw.wavelengths().begin(), raw.wavelengths().end()));
    for (auto& v : dark.data()) v = 3.0f;
    const auto ones = calibrate(raw, dark, raw);
    for (float v : ones.data()) EXPECT_FLOAT_EQ(v, 1.0f);
    EXPECT_EQ(ones.valid_count(), ones.pixel_count());
}

TEST(Calibrate, RawEqualsDarkGivesZeros) {
    const auto axis = linear_axis(900, 1700, 5);
    auto dark = SpectralCube::zeros(1, 3, axis);
    auto white = SpectralCube::zeros(1, 3, axis);
    for (auto& v : dark.data()) v = 10.0f;
    for (auto& v : white.data()) v = 200.0f;
    auto raw = SpectralCube::zeros(2, 3, axis);
    for (auto& v : raw.data()) v = 10.0f;
    const auto out = calibrate(raw, dark, white);
    for (float v : out.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Calibrate, HandEvaluatedRatio) {
    const std::vector<double> axis{1000};
    SpectralCube raw(1, 1, axis, {0.5f}), dark(1, 1, axis, {0.1f}), white(1, 1, axis, {0.9f});
    EXPECT_NEAR(calibrate(raw, dark, white).at(0, 0, 0), 0.5f, 1e-6);
}

TEST(Calibrate, ReferencesAreAveragedOverLines) {
    const std::vector<double> axis{1000};
    SpectralCube raw(1, 1, axis, {0.6f});
    SpectralCube dark(2, 1, axis, {0.0f, 0.2f});   // mean 0.1
    SpectralCube white(2, 1, axis, {0.8f, 1.0f});  // mean 0.9
    EXPECT_NEAR(calibrate(raw, dark, white).at(0, 0, 0), 0.625f, 1e-6);
}

TEST(Calibrate, ClampsAndMarksDegenerateColumns) {
    const std::vector<double> axis{1000, 1100};
    SpectralCube raw(1, 3, axis, {5.0f, -1.0f, 0.5f, 0.5f, 0.5f, 0.5f});
    SpectralCube dark(1, 3, axis, {0, 0, 0, 0, 0.3f, 0});
    SpectralCube white(1, 3, axis, {1, 1, 1, 1, 0.3f, 1});  // column 2 band 0 degenerate
    const auto out = calibrate(raw, dark, white);
    EXPECT_EQ(out.at(0, 0, 0), 1.5f);
    EXPECT_EQ(out.at(0, 0, 1), 0.0f);
    EXPECT_TRUE(out.is_valid(0, 1));
    EXPECT_FALSE(out.is_valid(0, 2));
    EXPECT_EQ(out.valid_count(), 2u);
}

TEST(Calibrate, Errors) {
    const std::vector<double> axis{1000, 1100};
    SpectralCube raw(1, 1, axis, {0.5f, 0.5f});
    SpectralCube same(1, 1, axis, {0.2f, 0.2f});
    EXPECT_THROW(calibrate(raw, same, same), CalibrationError);
    SpectralCube other(1, 1, {1000, 1200}, {0.0f, 0.0f});
    EXPECT_THROW(calibrate(raw, other, raw), CalibrationError);
    SpectralCube narrow(1, 2, axis, {0, 0, 0, 0});
    EXPECT_THROW(calibrate(raw, narrow, narrow), CalibrationError);
}

TEST(Calibrate, UnitCubeIsAFixedPoint) {
    auto cube = random_cube(6, 5, 9, 17);
    for (auto& v : cube.data()) v = std::min(v, 1.5f);
    const auto axis = std::vector<double>(cube.wavelengths().begin(), cube.wavelengths().end());
    auto dark = SpectralCube::zeros(1, 5, axis);
    auto white = SpectralCube::zeros(1, 5, axis);
    for (auto& v : white.data()) v = 1.0f;
    const auto out = calibrate(cube, dark, white);
    expect_same_samples(out, cube);
    expect_same_samples(calibrate(out, dark, white), out);
}

TEST(Calibrate, InvalidInputStaysInvalid) {
    auto raw = random_cube(2, 2, 3, 5);
    raw.set_valid(1, 0, false);
    const auto axis = std::vector<double>(raw.wavelengths().begin(), raw.wavelengths().end());
    auto dark = SpectralCube::zeros(1, 2, axis);
    auto white = SpectralCube::zeros(1, 2, axis);
    for (auto& v : white.data()) v = 2.0f;
    const auto out = calibrate(raw, dark, white);
    EXPECT_FALSE(out.is_valid(1, 0));
    EXPECT_EQ(out.valid_count(), 3u);
}
