#include <gtest/gtest.h>

#include <cmath>

#include <specshape/plot.hpp>

using namespace specshape;

namespace {

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
    return n;
}

PixelAnalysis analysis(const std::vector<double>& v, double threshold = 0.1) {
    PipelineConfig cfg;
    cfg.threshold = threshold;
    return analyze_spectrum({linear_axis(900, 1700, v.size()), v, SpectrumKind::raw}, cfg);
}

}  // namespace

TEST(Plot, StraightLineHasNoStemsOrMarkers) {
    std::vector<double> v(100);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.3 + 0.002 * double(i);
    const auto svg = render_pixel_svg(analysis(v));
    EXPECT_TRUE(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
    EXPECT_EQ(count(svg, "class=\"stem\""), 0u);
    EXPECT_EQ(count(svg, "class=\"stem significant\""), 0u);
    EXPECT_EQ(count(svg, "class=\"marker "), 0u);
    EXPECT_EQ(count(svg, "class=\"spectrum\""), 1u);
}

TEST(Plot, GaussianDipMarksItsFeaturePoints) {
    std::vector<double> v(101);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 - 0.5 * std::exp(-0.5 * std::pow((double(i) - 50) / 5, 2));
    const auto a = analysis(v, 0.005);
    const auto svg = render_pixel_svg(a);
    EXPECT_EQ(count(svg, "class=\"marker "), a.features.points.size());
    // The far tails sit a hair under the hull and add faint extrema; only
    // the dip center (convex) and its two shoulders (concave) are significant.
    std::vector<std::size_t> strong;
    for (const auto& p : a.features.points)
        if (p.is_significant) strong.push_back(p.band);
    EXPECT_EQ(strong, (std::vector<std::size_t>{41, 50, 59}));
    EXPECT_EQ(count(svg, "class=\"stem significant\""), 3u);
    EXPECT_NE(svg.find("class=\"marker convex\" data-band=\"50\""), std::string::npos);
    EXPECT_NE(svg.find("class=\"marker concave\" data-band=\"41\""), std::string::npos);
    EXPECT_NE(svg.find("class=\"marker concave\" data-band=\"59\""), std::string::npos);
    EXPECT_GT(count(svg, "class=\"stem\""), 10u);
    EXPECT_EQ(svg.back(), '\n');
}
