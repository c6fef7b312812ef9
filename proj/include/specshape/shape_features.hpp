#pragma once

// Derivatives, signed curvature and 2nd-derivative feature points.
//
// Everything is computed in (band index, value) coordinates: x advances by
// `x_scale` per band (default 1). The published +-0.1 curvature thresholds are
// only meaningful at O(1) x-spacing, so keep the default unless reproducing
// results under a different scale.
//
// Curvature of the graph (t, y(t)) is kappa = y'' / (1 + y'^2)^(3/2). The sign
// is kept: positive is convex (valley-like), negative concave (peak-like).

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "preprocess.hpp"

namespace specshape {

enum class Direction { convex, concave };

inline const char* to_string(Direction d) { return d == Direction::convex ? "convex" : "concave"; }

/// Central differences inside, one-sided at the two end bands.
/// Requires values.size() >= 3 and 0 < i < size for the formulas used.
inline double first_derivative_at(std::span<const double> v, std::size_t i, double x_scale = 1.0) {
    const std::size_t n = v.size();
    if (i == 0) return (v[1] - v[0]) / x_scale;
    if (i == n - 1) return (v[n - 1] - v[n - 2]) / x_scale;
    return (v[i + 1] - v[i - 1]) / (2.0 * x_scale);
}

inline double second_derivative_at(std::span<const double> v, std::size_t i, double x_scale = 1.0) {
    const std::size_t n = v.size();
    const double h2 = x_scale * x_scale;
    if (i == 0) return (v[0] - 2.0 * v[1] + v[2]) / h2;
    if (i == n - 1) return (v[n - 1] - 2.0 * v[n - 2] + v[n - 3]) / h2;
    return (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2;
}

inline double curvature_from_derivatives(double first, double second) {
    const double g = 1.0 + first * first;
    return second / (g * std::sqrt(g));
}

inline double curvature_at(std::span<const double> v, std::size_t i, double x_scale = 1.0) {
    return curvature_from_derivatives(first_derivative_at(v, i, x_scale), second_derivative_at(v, i, x_scale));
}

struct Derivatives {
    std::vector<double> first;
    std::vector<double> second;
};

inline Derivatives derivatives(std::span<const double> values, double x_scale = 1.0) {
    if (values.size() < 3) throw ConfigError("derivatives need at least 3 samples");
    if (!(x_scale > 0.0)) throw ConfigError("x-scale must be positive");
    Derivatives d{std::vector<double>(values.size()), std::vector<double>(values.size())};
    for (std::size_t i = 0; i < values.size(); ++i) {
        d.first[i] = first_derivative_at(values, i, x_scale);
        d.second[i] = second_derivative_at(values, i, x_scale);
    }
    return d;
}

inline Derivatives derivatives(const Spectrum& s, double x_scale = 1.0) { return derivatives(s.values, x_scale); }

struct CurvatureSeries {
    std::vector<double> kappa;
    std::vector<double> first;
    std::vector<double> second;

    std::size_t size() const { return kappa.size(); }
};

inline CurvatureSeries curvature(std::span<const double> values, double x_scale = 1.0) {
    auto d = derivatives(values, x_scale);
    CurvatureSeries c;
    c.kappa.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) c.kappa[i] = curvature_from_derivatives(d.first[i], d.second[i]);
    c.first = std::move(d.first);
    c.second = std::move(d.second);
    return c;
}

inline CurvatureSeries curvature(const Spectrum& s, double x_scale = 1.0) { return curvature(s.values, x_scale); }

struct FeaturePoint {
    std::size_t band = 0;
    double wavelength = 0.0;
    double kappa = 0.0;
    Direction direction = Direction::concave;
    bool is_significant = false;

    friend bool operator==(const FeaturePoint&, const FeaturePoint&) = default;
};

struct FeatureSet {
    CurvatureSeries curvature;
    std::vector<FeaturePoint> points;  // sorted by band
    double threshold = 0.1;

    std::size_t significant_count() const {
        std::size_t n = 0;
        for (const auto& p : points) n += p.is_significant;
        return n;
    }
};

/// Second-derivative values closer than this are treated as equal when
/// looking for extrema, so rounding noise on a straight line is a plateau.
inline constexpr double kExtremumTolerance = 1e-12;

/// Bands where `second` has a strict local maximum or minimum. Plateaus
/// report their leftmost band. The two end bands are never candidates.
inline std::vector<std::size_t> second_derivative_extrema(std::span<const double> second,
                                                          double tolerance = kExtremumTolerance) {
    std::vector<std::size_t> out;
    const std::size_t n = second.size();
    if (n < 3) return out;
    std::size_t i = 1;
    while (i + 1 < n) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(second[j + 1] - second[i]) <= tolerance) ++j;
        if (j + 1 >= n) break;  // plateau runs into the last band
        const double left = second[i - 1], mid = second[i], right = second[j + 1];
        const bool is_max = mid - left > tolerance && mid - right > tolerance;
        const bool is_min = left - mid > tolerance && right - mid > tolerance;
        if (is_max || is_min) out.push_back(i);
        i = j + 1;
    }
    return out;
}

/// Candidates are extrema of the 2nd derivative; every candidate is returned
/// and flagged significant when |kappa| >= threshold.
inline FeatureSet detect_feature_points(std::span<const double> values, std::span<const double> wavelengths,
                                        double threshold = 0.1, double x_scale = 1.0) {
    if (!(threshold > 0.0)) throw ConfigError("feature threshold must be positive");
    if (wavelengths.size() != values.size()) throw ConfigError("spectrum wavelength/value lengths differ");
    FeatureSet fs;
    fs.threshold = threshold;
    fs.curvature = curvature(values, x_scale);
    for (auto band : second_derivative_extrema(fs.curvature.second)) {
        const double k = fs.curvature.kappa[band];
        fs.points.push_back({band, wavelengths[band], k, k > 0.0 ? Direction::convex : Direction::concave,
                             std::abs(k) >= threshold});
    }
    return fs;
}

inline FeatureSet detect_feature_points(const Spectrum& s, double threshold = 0.1, double x_scale = 1.0) {
    return detect_feature_points(s.values, s.wavelengths, threshold, x_scale);
}

/// `band,wavelength_nm,kappa,direction,significant` rows.
inline std::string format_feature_csv(const FeatureSet& fs) {
    std::ostringstream out;
    out.precision(17);
    out << "band,wavelength_nm,kappa,direction,significant\n";
    for (const auto& p : fs.points)
        out << p.band << ',' << p.wavelength << ',' << p.kappa << ',' << to_string(p.direction) << ','
            << (p.is_significant ? 1 : 0) << '\n';
    return out.str();
}

}  // namespace specshape
