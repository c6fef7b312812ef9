#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "label_map.hpp"
#include "preprocess.hpp"
#include "rules.hpp"
#include "shape_features.hpp"

namespace specshape::rules {

/// FNV-1a over the band count and the bit patterns of the wavelengths.
inline std::uint64_t axis_fingerprint(std::span<const double> wavelengths) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    mix(wavelengths.size());
    for (double w : wavelengths) mix(std::bit_cast<std::uint64_t>(w));
    return h;
}

struct BoundAtom {
    Feature feature = Feature::cv;
    std::size_t band = 0;
    double bound_wavelength = 0.0;
    double requested_wavelength = 0.0;
    Comparator comparator = Comparator::lt;
    double threshold = 0.0;
    SourceLocation location{};
};

/// Flattened expression: node 0 is the root.
struct CompiledExpr {
    struct Node {
        Expr::Kind kind;
        std::uint32_t atom = 0;                  // index into atoms (kind == atom)
        std::uint32_t first = 0, count = 0;      // child node ids in `children`
    };
    std::vector<Node> nodes;
    std::vector<std::uint32_t> children;
    std::vector<BoundAtom> atoms;
};

struct CompiledRule {
    std::string class_name;
    ClassId class_id = 0;
    CompiledExpr expr;
};

struct BindOptions {
    double tolerance_nm = 10.0;
    ContinuumMode continuum_mode = ContinuumMode::ratio;
    double x_scale = 1.0;
};

struct CompiledRuleSet {
    std::vector<CompiledRule> rules;
    std::uint64_t axis_fingerprint = 0;
    std::size_t bands = 0;
    ContinuumMode continuum_mode = ContinuumMode::ratio;
    double x_scale = 1.0;
    double tolerance_nm = 10.0;

    /// Class ids are 1-based in declaration order; 0 is unclassified.
    ClassTable class_table() const {
        ClassTable t;
        for (const auto& r : rules) t[r.class_id] = {r.class_name, default_class_color(r.class_id)};
        return t;
    }
};

/// Nearest band to `nm`; ties go to the lower band. Axis must be non-empty
/// and strictly increasing.
inline std::size_t nearest_band(std::span<const double> axis, double nm) {
    const auto it = std::lower_bound(axis.begin(), axis.end(), nm);
    if (it == axis.begin()) return 0;
    if (it == axis.end()) return axis.size() - 1;
    const std::size_t hi = std::size_t(it - axis.begin());
    const std::size_t lo = hi - 1;
    return (nm - axis[lo]) <= (axis[hi] - nm) ? lo : hi;
}

namespace detail {

inline std::uint32_t compile_node(const Expr& e, CompiledExpr& out, std::span<const double> axis, double tol,
                                  std::vector<Diagnostic>& diags) {
    const auto id = std::uint32_t(out.nodes.size());
    out.nodes.push_back({e.kind});
    if (e.kind == Expr::Kind::atom) {
        const Atom& a = e.atom;
        const std::size_t band = nearest_band(axis, a.wavelength_nm);
        const double dist = std::abs(axis[band] - a.wavelength_nm);
        if (dist > tol)
            diags.push_back({DiagnosticKind::binding, a.location,
                             format_atom(a) + ": nearest band is " + format_number(axis[band]) + " nm, " +
                                 format_number(dist) + " nm away (tolerance " + format_number(tol) + " nm)"});
        out.nodes[id].atom = std::uint32_t(out.atoms.size());
        out.atoms.push_back({a.feature, band, axis[band], a.wavelength_nm, a.comparator, a.threshold, a.location});
        return id;
    }
    std::vector<std::uint32_t> kids;
    for (const auto& c : e.children) kids.push_back(compile_node(c, out, axis, tol, diags));
    out.nodes[id].first = std::uint32_t(out.children.size());
    out.nodes[id].count = std::uint32_t(kids.size());
    out.children.insert(out.children.end(), kids.begin(), kids.end());
    return id;
}

}  // namespace detail

/// Binds every atom to its nearest band. All out-of-tolerance atoms are
/// reported together in one RuleError.
inline CompiledRuleSet bind(const RuleSet& rs, std::span<const double> wavelengths, const BindOptions& opt = {}) {
    if (wavelengths.empty()) throw ConfigError("cannot bind rules to an empty wavelength axis");
    if (!(opt.tolerance_nm > 0.0)) throw ConfigError("binding tolerance must be positive");
    if (!(opt.x_scale > 0.0)) throw ConfigError("x-scale must be positive");
    for (std::size_t i = 1; i < wavelengths.size(); ++i)
        if (!(wavelengths[i] > wavelengths[i - 1])) throw ConfigError("wavelength axis is not strictly increasing");
    if (rs.rules.size() > 255) throw ConfigError("at most 255 rules are supported");

    CompiledRuleSet out;
    out.axis_fingerprint = axis_fingerprint(wavelengths);
    out.bands = wavelengths.size();
    out.continuum_mode = opt.continuum_mode;
    out.x_scale = opt.x_scale;
    out.tolerance_nm = opt.tolerance_nm;
    std::vector<Diagnostic> diags;
    for (std::size_t i = 0; i < rs.rules.size(); ++i) {
        CompiledRule cr;
        cr.class_name = rs.rules[i].class_name;
        cr.class_id = ClassId(i + 1);
        detail::compile_node(rs.rules[i].expr, cr.expr, wavelengths, opt.tolerance_nm, diags);
        out.rules.push_back(std::move(cr));
    }
    if (!diags.empty()) throw RuleError(std::move(diags));
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Anything that yields per-band values for one pixel.
template <class S>
concept FeatureSource = requires(const S& s, std::size_t band) {
    { s.cv(band) } -> std::convertible_to<double>;
    { s.crrv(band) } -> std::convertible_to<double>;
    { s.rv(band) } -> std::convertible_to<double>;
};

/// Reads precomputed per-band series.
struct SeriesSource {
    std::span<const double> kappa;
    std::span<const double> continuum_removed;
    std::span<const double> reflectance;

    double cv(std::size_t b) const { return kappa[b]; }
    double crrv(std::size_t b) const { return continuum_removed[b]; }
    double rv(std::size_t b) const { return reflectance[b]; }
};

/// Computes curvature on demand from the continuum-removed series, so a rule
/// touches only the bands it names (plus their two neighbours).
struct LazyCurvatureSource {
    std::span<const double> continuum_removed;
    std::span<const double> reflectance;
    double x_scale = 1.0;

    double cv(std::size_t b) const { return curvature_at(continuum_removed, b, x_scale); }
    double crrv(std::size_t b) const { return continuum_removed[b]; }
    double rv(std::size_t b) const { return reflectance[b]; }
};

template <FeatureSource S>
double atom_value(const BoundAtom& a, const S& src) {
    switch (a.feature) {
        case Feature::cv: return src.cv(a.band);
        case Feature::crrv: return src.crrv(a.band);
        case Feature::rv: return src.rv(a.band);
    }
    return 0.0;
}

/// Short-circuit evaluation of one compiled expression.
template <FeatureSource S>
bool evaluate_expr(const CompiledExpr& e, const S& src, std::uint32_t node = 0) {
    const auto& n = e.nodes[node];
    switch (n.kind) {
        case Expr::Kind::atom: {
            const auto& a = e.atoms[n.atom];
            return compare(atom_value(a, src), a.comparator, a.threshold);
        }
        case Expr::Kind::all_of:
            for (std::uint32_t i = 0; i < n.count; ++i)
                if (!evaluate_expr(e, src, e.children[n.first + i])) return false;
            return true;
        case Expr::Kind::any_of:
            for (std::uint32_t i = 0; i < n.count; ++i)
                if (evaluate_expr(e, src, e.children[n.first + i])) return true;
            return false;
    }
    return false;
}

/// First rule (declaration order) that fires, or nullopt.
template <FeatureSource S>
std::optional<ClassId> classify(const CompiledRuleSet& crs, const S& src) {
    for (const auto& r : crs.rules)
        if (evaluate_expr(r.expr, src)) return r.class_id;
    return std::nullopt;
}

/// Every rule that fires, for overlap auditing.
template <FeatureSource S>
std::vector<ClassId> matching_classes(const CompiledRuleSet& crs, const S& src) {
    std::vector<ClassId> out;
    for (const auto& r : crs.rules)
        if (evaluate_expr(r.expr, src)) out.push_back(r.class_id);
    return out;
}

inline void check_axis(const CompiledRuleSet& crs, std::span<const double> wavelengths) {
    if (crs.rules.empty()) return;
    if (axis_fingerprint(wavelengths) != crs.axis_fingerprint)
        throw ConfigError("compiled rules were bound to a different wavelength axis");
}

/// Evaluates one pixel from its feature set, continuum-removed and calibrated
/// spectra. Throws ConfigError when the spectra's axis is not the bound one.
inline std::optional<ClassId> evaluate(const CompiledRuleSet& crs, const FeatureSet& fs, const Spectrum& cr,
                                       const Spectrum& raw) {
    check_axis(crs, cr.wavelengths);
    check_axis(crs, raw.wavelengths);
    return classify(crs, SeriesSource{fs.curvature.kappa, cr.values, raw.values});
}

inline std::vector<ClassId> evaluate_all(const CompiledRuleSet& crs, const FeatureSet& fs, const Spectrum& cr,
                                         const Spectrum& raw) {
    check_axis(crs, cr.wavelengths);
    check_axis(crs, raw.wavelengths);
    return matching_classes(crs, SeriesSource{fs.curvature.kappa, cr.values, raw.values});
}

}  // namespace specshape::rules
