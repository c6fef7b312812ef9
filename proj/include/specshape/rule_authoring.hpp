#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rules.hpp"
#include "shape_features.hpp"

namespace specshape::rules {

struct AuthoringOptions {
    /// Threshold written into each condition (`CV[nm] < -t` or `> t`).
    double rule_threshold = 0.1;
    /// Only feature points with |kappa| at least this large become
    /// conditions; keeping it above rule_threshold leaves margin for noise.
    double min_abs_kappa = 0.1;
    /// Strongest points first; 0 keeps all.
    std::size_t max_atoms = 0;
};

/// Drafts an all-AND rule from a reference spectrum's feature points: concave
/// points become `CV[nm] < -t`, convex ones `CV[nm] > t`. Wavelengths are
/// rounded to whole nm the way hand-written rules name them. The result is a
/// starting point for the expert, not a finished rule.
inline Rule suggest_rule(const std::string& class_name, const FeatureSet& fs, const AuthoringOptions& opt = {}) {
    std::vector<FeaturePoint> pts;
    for (const auto& p : fs.points)
        if (std::abs(p.kappa) >= opt.min_abs_kappa && std::abs(p.kappa) >= fs.threshold) pts.push_back(p);
    std::stable_sort(pts.begin(), pts.end(),
                     [](const FeaturePoint& a, const FeaturePoint& b) { return std::abs(a.kappa) > std::abs(b.kappa); });
    if (opt.max_atoms && pts.size() > opt.max_atoms) pts.resize(opt.max_atoms);
    // Concave conditions first, then convex, each by wavelength.
    std::stable_sort(pts.begin(), pts.end(), [](const FeaturePoint& a, const FeaturePoint& b) {
        if (a.direction != b.direction) return a.direction == Direction::concave;
        return a.band < b.band;
    });
    if (pts.empty()) throw ConfigError("no feature points strong enough to draft a rule for '" + class_name + "'");

    std::vector<Expr> atoms;
    for (const auto& p : pts) {
        Atom a;
        a.feature = Feature::cv;
        a.wavelength_nm = std::round(p.wavelength);
        if (p.direction == Direction::concave) {
            a.comparator = Comparator::lt;
            a.threshold = -opt.rule_threshold;
        } else {
            a.comparator = Comparator::gt;
            a.threshold = opt.rule_threshold;
        }
        atoms.push_back(Expr::leaf(a));
    }
    Rule r;
    r.class_name = class_name;
    r.expr = atoms.size() == 1 ? atoms.front() : Expr::all(std::move(atoms));
    return r;
}

}  // namespace specshape::rules
