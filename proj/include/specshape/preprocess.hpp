#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace specshape {

enum class SpectrumKind { raw, smoothed, continuum_removed };

/// ratio: value / hull, in (0, 1] with 1 on the hull.
/// difference: hull - value, in [0, hull).
enum class ContinuumMode { ratio, difference };

inline const char* to_string(ContinuumMode m) { return m == ContinuumMode::ratio ? "ratio" : "difference"; }

inline ContinuumMode parse_continuum_mode(std::string_view s) {
    if (s == "ratio") return ContinuumMode::ratio;
    if (s == "difference") return ContinuumMode::difference;
    throw ConfigError("continuum mode must be 'ratio' or 'difference', got '" + std::string(s) + "'");
}

struct Spectrum {
    std::vector<double> wavelengths;
    std::vector<double> values;
    SpectrumKind kind = SpectrumKind::raw;
    ContinuumMode mode = ContinuumMode::ratio;  // meaningful for continuum_removed only

    std::size_t size() const { return values.size(); }
    friend bool operator==(const Spectrum&, const Spectrum&) = default;
};

// ---------------------------------------------------------------------------
// Savitzky-Golay smoothing
// ---------------------------------------------------------------------------

/// Precomputed Savitzky-Golay weights for a fixed spectrum length.
///
/// Each output sample is the value at that position of a least-squares
/// polynomial fitted over the samples of its window. Near the ends the window
/// is truncated to the samples that exist (one-sided), keeping the
/// polynomial order, so polynomials of degree <= order pass through exactly.
class SavitzkyGolay {
public:
    SavitzkyGolay(std::size_t length, std::size_t window, std::size_t order)
        : length_(length), window_(window), order_(order) {
        if (window % 2 == 0) throw ConfigError("smoothing window must be odd, got " + std::to_string(window));
        if (window < 3) throw ConfigError("smoothing window must be at least 3");
        if (window > length)
            throw ConfigError("smoothing window " + std::to_string(window) + " exceeds spectrum length " +
                              std::to_string(length));
        if (order >= window) throw ConfigError("polynomial order must be below the window size");
        const std::size_t half = window / 2;
        first_.resize(length);
        weights_.resize(length);
        for (std::size_t i = 0; i < length; ++i) {
            const std::size_t lo = i >= half ? i - half : 0;
            const std::size_t hi = std::min(length - 1, i + half);
            first_[i] = lo;
            weights_[i] = fit_weights(lo, hi, i);
        }
    }

    std::size_t length() const { return length_; }
    std::size_t window() const { return window_; }
    std::size_t order() const { return order_; }

    void apply(std::span<const double> in, std::span<double> out) const {
        for (std::size_t i = 0; i < length_; ++i) {
            const auto& w = weights_[i];
            const double* x = in.data() + first_[i];
            double acc = 0.0;
            for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * x[k];
            out[i] = acc;
        }
    }

    std::span<const double> weights(std::size_t i) const { return weights_[i]; }

private:
    // Row of the least-squares pseudo-inverse that evaluates the fitted
    // polynomial at `at`, using offsets (j - at) as the abscissa.
    std::vector<double> fit_weights(std::size_t lo, std::size_t hi, std::size_t at) const {
        const std::size_t m = hi - lo + 1;
        const std::size_t p = std::min(order_, m - 1) + 1;
        // Normal matrix A = V^T V (p x p), solve A z = e0, weights = V z.
        std::vector<double> a(p * p, 0.0);
        for (std::size_t j = lo; j <= hi; ++j) {
            const double t = double(j) - double(at);
            std::vector<double> pw(2 * p - 1, 1.0);
            for (std::size_t k = 1; k < pw.size(); ++k) pw[k] = pw[k - 1] * t;
            for (std::size_t r = 0; r < p; ++r)
                for (std::size_t c = 0; c < p; ++c) a[r * p + c] += pw[r + c];
        }
        std::vector<double> z(p, 0.0);
        z[0] = 1.0;
        solve(a, z, p);
        std::vector<double> w(m, 0.0);
        for (std::size_t j = lo; j <= hi; ++j) {
            const double t = double(j) - double(at);
            double tk = 1.0, acc = 0.0;
            for (std::size_t k = 0; k < p; ++k, tk *= t) acc += z[k] * tk;
            w[j - lo] = acc;
        }
        return w;
    }

    // Gaussian elimination with partial pivoting; `a` is overwritten.
    static void solve(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
        for (std::size_t col = 0; col < n; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < n; ++r)
                if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
            if (piv != col) {
                for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
                std::swap(b[col], b[piv]);
            }
            for (std::size_t r = col + 1; r < n; ++r) {
                const double f = a[r * n + col] / a[col * n + col];
                for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
                b[r] -= f * b[col];
            }
        }
        for (std::size_t i = n; i-- > 0;) {
            double acc = b[i];
            for (std::size_t c = i + 1; c < n; ++c) acc -= a[i * n + c] * b[c];
            b[i] = acc / a[i * n + i];
        }
    }

    std::size_t length_;
    std::size_t window_;
    std::size_t order_;
    std::vector<std::size_t> first_;
    std::vector<std::vector<double>> weights_;
};

inline Spectrum smooth(const Spectrum& s, std::size_t window = 7, std::size_t poly_order = 2) {
    if (s.wavelengths.size() != s.values.size()) throw ConfigError("spectrum wavelength/value lengths differ");
    SavitzkyGolay sg(s.size(), window, poly_order);
    Spectrum out{s.wavelengths, std::vector<double>(s.size()), SpectrumKind::smoothed, s.mode};
    sg.apply(s.values, out.values);
    return out;
}

// ---------------------------------------------------------------------------
// Continuum (upper convex hull) and its removal
// ---------------------------------------------------------------------------

struct HullKnot {
    std::size_t band;
    double value;
    friend bool operator==(const HullKnot&, const HullKnot&) = default;
};

struct Continuum {
    std::vector<HullKnot> knots;  // strictly increasing bands, first and last band included
    std::vector<double> hull;     // per band
};

/// Upper hull of the points (i, values[i]) into caller-owned buffers.
/// `knot_bands` receives knot indices; `hull` the interpolated continuum,
/// never below the spectrum. Collinear interior points are not knots.
inline void upper_convex_hull_into(std::span<const double> values, std::vector<std::size_t>& knot_bands,
                                   std::span<double> hull) {
    const std::size_t n = values.size();
    knot_bands.clear();
    for (std::size_t i = 0; i < n; ++i) {
        while (knot_bands.size() >= 2) {
            const std::size_t a = knot_bands[knot_bands.size() - 2];
            const std::size_t b = knot_bands.back();
            // Drop b unless a -> b -> i turns clockwise (b strictly above chord a-i).
            const double cross = double(b - a) * (values[i] - values[a]) - (values[b] - values[a]) * double(i - a);
            if (cross >= 0.0) knot_bands.pop_back();
            else break;
        }
        knot_bands.push_back(i);
    }
    for (std::size_t k = 0; k + 1 < knot_bands.size(); ++k) {
        const std::size_t a = knot_bands[k], b = knot_bands[k + 1];
        const double va = values[a], vb = values[b];
        hull[a] = va;
        for (std::size_t i = a + 1; i < b; ++i) {
            const double h = va + (vb - va) * double(i - a) / double(b - a);
            hull[i] = std::max(h, values[i]);
        }
    }
    if (n) hull[knot_bands.back()] = values[knot_bands.back()];
}

inline Continuum upper_convex_hull(const Spectrum& s) {
    if (s.size() < 2) throw ConfigError("continuum needs at least 2 samples");
    Continuum c;
    c.hull.resize(s.size());
    std::vector<std::size_t> bands;
    upper_convex_hull_into(s.values, bands, c.hull);
    c.knots.reserve(bands.size());
    for (auto b : bands) c.knots.push_back({b, s.values[b]});
    return c;
}

/// Writes the continuum-removed spectrum into `out`. Returns false when ratio
/// mode meets a non-positive hull value (the pixel should be invalidated).
inline bool continuum_remove_into(std::span<const double> values, std::span<const double> hull, ContinuumMode mode,
                                  std::span<double> out) {
    const std::size_t n = values.size();
    if (mode == ContinuumMode::ratio) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!(hull[i] > 0.0)) return false;
            out[i] = values[i] / hull[i];
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) out[i] = hull[i] - values[i];
    }
    return true;
}

struct ContinuumRemoved {
    Spectrum spectrum;
    Continuum continuum;
    bool valid = true;
};

inline ContinuumRemoved continuum_remove(const Spectrum& s, ContinuumMode mode = ContinuumMode::ratio) {
    ContinuumRemoved r;
    r.continuum = upper_convex_hull(s);
    r.spectrum = Spectrum{s.wavelengths, std::vector<double>(s.size()), SpectrumKind::continuum_removed, mode};
    r.valid = continuum_remove_into(s.values, r.continuum.hull, mode, r.spectrum.values);
    if (!r.valid) std::fill(r.spectrum.values.begin(), r.spectrum.values.end(), 0.0);
    return r;
}

// ---------------------------------------------------------------------------
// Spectral library CSV: `wavelength_nm,<name>...`, one row per band.
// ---------------------------------------------------------------------------

struct NamedSpectrum {
    std::string name;
    std::vector<double> values;
};

struct SpectralLibrary {
    std::vector<double> wavelengths;
    std::vector<NamedSpectrum> spectra;

    Spectrum spectrum(std::size_t i) const { return {wavelengths, spectra.at(i).values, SpectrumKind::raw}; }
};

inline std::string format_spectral_library(const SpectralLibrary& lib) {
    std::ostringstream out;
    out.precision(17);
    out << "wavelength_nm";
    for (const auto& s : lib.spectra) out << ',' << s.name;
    out << '\n';
    for (std::size_t b = 0; b < lib.wavelengths.size(); ++b) {
        out << lib.wavelengths[b];
        for (const auto& s : lib.spectra) out << ',' << s.values.at(b);
        out << '\n';
    }
    return out.str();
}

inline SpectralLibrary parse_spectral_library(const std::string& text) {
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            if (!cell.empty() && cell.back() == '\r') cell.pop_back();
            cells.push_back(cell);
        }
        return cells;
    };
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw IoError("spectral library is empty");
    const auto header = split(line);
    if (header.empty() || header[0] != "wavelength_nm") throw IoError("spectral library header must start with 'wavelength_nm'");
    SpectralLibrary lib;
    for (std::size_t i = 1; i < header.size(); ++i) lib.spectra.push_back({header[i], {}});
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw IoError("spectral library line " + std::to_string(lineno) + ": expected " +
                          std::to_string(header.size()) + " columns");
        try {
            lib.wavelengths.push_back(std::stod(cells[0]));
            for (std::size_t i = 1; i < cells.size(); ++i) lib.spectra[i - 1].values.push_back(std::stod(cells[i]));
        } catch (const std::exception&) {
            throw IoError("spectral library line " + std::to_string(lineno) + ": not a number");
        }
    }
    for (std::size_t i = 1; i < lib.wavelengths.size(); ++i)
        if (!(lib.wavelengths[i] > lib.wavelengths[i - 1]))
            throw IoError("spectral library wavelengths not strictly increasing");
    return lib;
}

inline SpectralLibrary read_spectral_library(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_spectral_library(ss.str());
}

inline void write_spectral_library(const SpectralLibrary& lib, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << format_spectral_library(lib);
}

}  // namespace specshape
