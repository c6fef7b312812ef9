#pragma once

// SVG rendering of one pixel: continuum-removed spectrum (black), per-band
// curvature stems (green), significant stems at feature points (red), and
// feature markers (red dots concave, magenta dots convex).
//
// Elements carry classes (`spectrum`, `stem`, `stem significant`,
// `marker concave`, `marker convex`) so tools can count them.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "pipeline.hpp"

namespace specshape {

struct PlotOptions {
    double width = 900;
    double height = 420;
    double margin = 50;
    /// Curvature values below this magnitude draw no stem.
    double stem_epsilon = 1e-12;
};

inline std::string render_pixel_svg(const PixelAnalysis& a, const PlotOptions& opt = {}) {
    const auto& wl = a.continuum_removed.wavelengths;
    const auto& cr = a.continuum_removed.values;
    const auto& kappa = a.features.curvature.kappa;
    const std::size_t n = cr.size();

    const double x0 = opt.margin, x1 = opt.width - opt.margin;
    const double y0 = opt.margin, y1 = opt.height - opt.margin;
    const double wmin = n ? wl.front() : 0, wmax = n ? wl.back() : 1;
    double vmin = 0, vmax = 1;
    for (double v : cr) vmin = std::min(vmin, v), vmax = std::max(vmax, v);
    double kmax = a.features.threshold;
    for (double k : kappa) kmax = std::max(kmax, std::abs(k));

    auto px = [&](double w) { return wmax > wmin ? x0 + (w - wmin) / (wmax - wmin) * (x1 - x0) : x0; };
    auto py = [&](double v) { return y1 - (v - vmin) / (vmax - vmin) * (y1 - y0); };
    // Stems hang from the mid line; full scale is half the plot height.
    const double mid = (y0 + y1) / 2;
    auto stem_y = [&](double k) { return mid - k / kmax * (y1 - y0) / 2; };

    std::ostringstream s;
    s.precision(6);
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
      << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line class=\"axis\" x1=\"" << x0 << "\" y1=\"" << mid << "\" x2=\"" << x1 << "\" y2=\"" << mid
      << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n"
      << "<text x=\"" << x0 << "\" y=\"" << opt.height - 12 << "\" font-size=\"12\">" << wmin << " nm</text>\n"
      << "<text x=\"" << x1 - 60 << "\" y=\"" << opt.height - 12 << "\" font-size=\"12\">" << wmax << " nm</text>\n"
      << "<text x=\"" << x0 << "\" y=\"" << y0 - 16 << "\" font-size=\"12\">continuum removed ("
      << to_string(a.continuum_removed.mode) << "), curvature threshold " << a.features.threshold << "</text>\n";

    s << "<g class=\"stems\" stroke=\"#2a9d3a\" stroke-width=\"1\">\n";
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(kappa[i]) < opt.stem_epsilon) continue;
        s << "<line class=\"stem\" data-band=\"" << i << "\" x1=\"" << px(wl[i]) << "\" y1=\"" << mid << "\" x2=\""
          << px(wl[i]) << "\" y2=\"" << stem_y(kappa[i]) << "\"/>\n";
    }
    s << "</g>\n<g class=\"significant\" stroke=\"#d62828\" stroke-width=\"2\">\n";
    for (const auto& p : a.features.points) {
        if (!p.is_significant) continue;
        s << "<line class=\"stem significant\" data-band=\"" << p.band << "\" x1=\"" << px(p.wavelength) << "\" y1=\""
          << mid << "\" x2=\"" << px(p.wavelength) << "\" y2=\"" << stem_y(p.kappa) << "\"/>\n";
    }
    s << "</g>\n";

    s << "<polyline class=\"spectrum\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < n; ++i) s << (i ? " " : "") << px(wl[i]) << ',' << py(cr[i]);
    s << "\"/>\n<g class=\"markers\">\n";
    for (const auto& p : a.features.points) {
        const bool concave = p.direction == Direction::concave;
        s << "<circle class=\"marker " << (concave ? "concave" : "convex") << "\" data-band=\"" << p.band
          << "\" cx=\"" << px(p.wavelength) << "\" cy=\"" << py(cr[p.band]) << "\" r=\"3.5\" fill=\""
          << (concave ? "#d62828" : "#d633c8") << "\"/>\n";
    }
    s << "</g>\n</svg>\n";
    return s.str();
}

}  // namespace specshape
