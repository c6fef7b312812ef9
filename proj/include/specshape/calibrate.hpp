#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cube.hpp"
#include "error.hpp"

namespace specshape {

struct CalibrationOptions {
    /// Minimum usable (white - dark), in the raw cube's units.
    double degenerate_epsilon = 1e-6;
    double clamp_min = 0.0;
    double clamp_max = 1.5;
};

namespace detail {

/// Mean over scan lines of a reference cube: cols x bands, row-major.
inline std::vector<double> line_average(const SpectralCube& ref) {
    std::vector<double> mean(ref.cols() * ref.bands(), 0.0);
    std::vector<std::size_t> count(ref.cols(), 0);
    for (std::size_t r = 0; r < ref.rows(); ++r)
        for (std::size_t c = 0; c < ref.cols(); ++c) {
            if (!ref.is_valid(r, c)) continue;
            ++count[c];
            const auto px = ref.pixel(r, c);
            for (std::size_t b = 0; b < ref.bands(); ++b) mean[c * ref.bands() + b] += px[b];
        }
    for (std::size_t c = 0; c < ref.cols(); ++c)
        for (std::size_t b = 0; b < ref.bands(); ++b)
            mean[c * ref.bands() + b] = count[c] ? mean[c * ref.bands() + b] / double(count[c])
                                                 : std::nan("");
    return mean;
}

inline void check_axis(const SpectralCube& raw, const SpectralCube& ref, const char* what) {
    if (ref.bands() != raw.bands())
        throw CalibrationError(std::string(what) + " reference has " + std::to_string(ref.bands()) +
                               " bands, raw cube has " + std::to_string(raw.bands()));
    for (std::size_t b = 0; b < raw.bands(); ++b)
        if (std::abs(ref.wavelengths()[b] - raw.wavelengths()[b]) > 1e-6)
            throw CalibrationError(std::string(what) + " reference wavelength axis differs at band " + std::to_string(b));
    if (ref.cols() != raw.cols())
        throw CalibrationError(std::string(what) + " reference has " + std::to_string(ref.cols()) +
                               " columns, raw cube has " + std::to_string(raw.cols()));
    if (ref.rows() == 0) throw CalibrationError(std::string(what) + " reference has no scan lines");
}

}  // namespace detail

/// reflectance = (raw - dark) / (white - dark), clamped to [0, 1.5].
///
/// Both references are averaged over their scan lines, so a single pushbroom
/// line and a full frame are handled alike. A pixel is invalidated when its
/// column's (white - dark) is at most epsilon at any band; when that holds for
/// every column the references are unusable and CalibrationError is thrown.
/// The white tile is treated as 100% reflectance.
inline SpectralCube calibrate(const SpectralCube& raw, const SpectralCube& dark, const SpectralCube& white,
                              const CalibrationOptions& opt = {}) {
    detail::check_axis(raw, dark, "dark");
    detail::check_axis(raw, white, "white");
    const auto d = detail::line_average(dark);
    const auto w = detail::line_average(white);
    const std::size_t bands = raw.bands();

    std::vector<char> column_ok(raw.cols(), 1);
    for (std::size_t c = 0; c < raw.cols(); ++c)
        for (std::size_t b = 0; b < bands; ++b) {
            const double span = w[c * bands + b] - d[c * bands + b];
            if (!(span > opt.degenerate_epsilon)) column_ok[c] = 0;
        }
    if (raw.cols() > 0 && std::none_of(column_ok.begin(), column_ok.end(), [](char ok) { return ok; }))
        throw CalibrationError("white - dark is degenerate in every reference column");

    SpectralCube out = SpectralCube::zeros(raw.rows(), raw.cols(),
                                           std::vector<double>(raw.wavelengths().begin(), raw.wavelengths().end()));
    out.set_source_layout(raw.source_layout());
    for (std::size_t r = 0; r < raw.rows(); ++r)
        for (std::size_t c = 0; c < raw.cols(); ++c) {
            if (!column_ok[c] || !raw.is_valid(r, c)) {
                out.set_valid(r, c, false);
                continue;
            }
            const auto in = raw.pixel(r, c);
            auto dst = out.pixel(r, c);
            bool finite = true;
            for (std::size_t b = 0; b < bands; ++b) {
                const double dk = d[c * bands + b];
                const double v = (double(in[b]) - dk) / (w[c * bands + b] - dk);
                if (!std::isfinite(v)) finite = false;
                dst[b] = float(std::clamp(v, opt.clamp_min, opt.clamp_max));
            }
            if (!finite) {
                std::fill(dst.begin(), dst.end(), 0.0f);
                out.set_valid(r, c, false);
            }
        }
    return out;
}

}  // namespace specshape
