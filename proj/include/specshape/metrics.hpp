#pragma once

// Confusion-matrix scores: overall accuracy, per-class and macro-averaged
// precision / sensitivity / false positive rate / F1, and Cohen's kappa.
//
// Macro averages are unweighted means over the classes present in the
// ground truth. Ratios with an empty denominator are reported as 0.

#include <algorithm>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "label_map.hpp"

namespace specshape {

struct ConfusionMatrix {
    std::vector<ClassId> classes;        // sorted; row/column order
    std::vector<std::uint64_t> counts;   // [truth][pred], classes.size()^2

    std::size_t size() const { return classes.size(); }
    std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts[truth * classes.size() + pred]; }
    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }
};

struct ClassScores {
    ClassId class_id = 0;
    std::string name;
    std::uint64_t support = 0;  // truth count
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 0, sensitivity = 0, false_positive_rate = 0, f1 = 0;
    bool in_truth = false;
};

struct Metrics {
    ConfusionMatrix confusion;
    std::vector<ClassScores> per_class;  // same order as confusion.classes
    double overall_accuracy = 0;
    double precision = 0;
    double sensitivity = 0;
    double false_positive_rate = 0;
    double f1 = 0;
    double kappa = 0;
    std::uint64_t evaluated = 0;
};

namespace detail {
inline double ratio(double num, double den) { return den > 0 ? num / den : 0.0; }
}  // namespace detail

/// Scores a confusion matrix. `names` is optional display metadata.
inline Metrics metrics_from_confusion(const ConfusionMatrix& cm, const ClassTable& names = {}) {
    const std::size_t k = cm.size();
    if (cm.counts.size() != k * k) throw ConfigError("confusion matrix is not square");
    Metrics m;
    m.confusion = cm;
    const std::uint64_t n = cm.total();
    if (n == 0) throw ConfigError("no pixels were evaluated");
    m.evaluated = n;

    std::vector<std::uint64_t> row(k, 0), col(k, 0);
    std::uint64_t trace = 0;
    for (std::size_t t = 0; t < k; ++t)
        for (std::size_t p = 0; p < k; ++p) {
            row[t] += cm.at(t, p);
            col[p] += cm.at(t, p);
            if (t == p) trace += cm.at(t, p);
        }
    const double total = double(n);
    m.overall_accuracy = double(trace) / total;
    double pe = 0;
    for (std::size_t i = 0; i < k; ++i) pe += (double(row[i]) / total) * (double(col[i]) / total);
    m.kappa = pe < 1.0 ? (m.overall_accuracy - pe) / (1.0 - pe) : (m.overall_accuracy == 1.0 ? 1.0 : 0.0);

    std::size_t present = 0;
    for (std::size_t i = 0; i < k; ++i) {
        ClassScores s;
        s.class_id = cm.classes[i];
        if (auto it = names.find(s.class_id); it != names.end()) s.name = it->second.name;
        else if (s.class_id == kUnclassified) s.name = "unclassified";
        s.support = row[i];
        s.tp = cm.at(i, i);
        s.fp = col[i] - s.tp;
        s.fn = row[i] - s.tp;
        s.tn = n - s.tp - s.fp - s.fn;
        s.precision = detail::ratio(double(s.tp), double(s.tp + s.fp));
        s.sensitivity = detail::ratio(double(s.tp), double(s.tp + s.fn));
        s.false_positive_rate = detail::ratio(double(s.fp), double(s.fp + s.tn));
        s.f1 = detail::ratio(2.0 * s.precision * s.sensitivity, s.precision + s.sensitivity);
        s.in_truth = row[i] > 0;
        if (s.in_truth) {
            ++present;
            m.precision += s.precision;
            m.sensitivity += s.sensitivity;
            m.false_positive_rate += s.false_positive_rate;
            m.f1 += s.f1;
        }
        m.per_class.push_back(std::move(s));
    }
    if (present) {
        m.precision /= double(present);
        m.sensitivity /= double(present);
        m.false_positive_rate /= double(present);
        m.f1 /= double(present);
    }
    return m;
}

/// Builds the confusion matrix over pixels with nonzero truth (or all pixels
/// when `ignore_zero_truth` is false) and scores it. Unclassified predictions
/// stay in the matrix as class 0, so they count against sensitivity.
inline Metrics evaluate_metrics(const LabelMap& pred, const LabelMap& truth, bool ignore_zero_truth = true) {
    if (pred.rows != truth.rows || pred.cols != truth.cols)
        throw ConfigError("prediction is " + std::to_string(pred.rows) + "x" + std::to_string(pred.cols) +
                          " but truth is " + std::to_string(truth.rows) + "x" + std::to_string(truth.cols));
    std::map<std::pair<ClassId, ClassId>, std::uint64_t> pairs;
    std::vector<ClassId> ids;
    for (std::size_t i = 0; i < truth.labels.size(); ++i) {
        const ClassId t = truth.labels[i];
        if (ignore_zero_truth && t == kUnclassified) continue;
        ++pairs[{t, pred.labels[i]}];
    }
    if (pairs.empty()) throw ConfigError("no pixels were evaluated (truth has no labelled pixels)");
    for (const auto& [tp, n] : pairs) {
        (void)n;
        ids.push_back(tp.first);
        ids.push_back(tp.second);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    ConfusionMatrix cm;
    cm.classes = ids;
    cm.counts.assign(ids.size() * ids.size(), 0);
    auto index = [&](ClassId c) { return std::size_t(std::lower_bound(ids.begin(), ids.end(), c) - ids.begin()); };
    for (const auto& [tp, n] : pairs) cm.counts[index(tp.first) * ids.size() + index(tp.second)] += n;

    ClassTable names = truth.class_table;
    for (const auto& [id, info] : pred.class_table) names.emplace(id, info);
    return metrics_from_confusion(cm, names);
}

inline std::string format_metrics_text(const Metrics& m) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(4);
    out << "evaluated pixels    " << m.evaluated << "\n"
        << "overall accuracy    " << m.overall_accuracy << "\n"
        << "precision (macro)   " << m.precision << "\n"
        << "sensitivity (macro) " << m.sensitivity << "\n"
        << "false pos. rate     " << m.false_positive_rate << "\n"
        << "F1 (macro)          " << m.f1 << "\n"
        << "kappa               " << m.kappa << "\n\n"
        << "class  name            support  precision  sensitivity  fpr     f1\n";
    for (const auto& s : m.per_class) {
        char line[160];
        std::snprintf(line, sizeof line, "%-6u %-15s %8llu  %9.4f  %11.4f  %.4f  %.4f%s\n", unsigned(s.class_id),
                      s.name.c_str(), static_cast<unsigned long long>(s.support), s.precision, s.sensitivity,
                      s.false_positive_rate, s.f1, s.in_truth ? "" : "  (not in truth)");
        out << line;
    }
    return out.str();
}

/// One row per class, then a `summary` row with macro scores, OA and kappa.
inline std::string format_metrics_csv(const Metrics& m) {
    std::ostringstream out;
    out.precision(17);
    out << "row,class_id,class_name,support,tp,fp,fn,tn,precision,sensitivity,false_positive_rate,f1,"
           "overall_accuracy,kappa\n";
    for (const auto& s : m.per_class)
        out << "class," << s.class_id << ',' << s.name << ',' << s.support << ',' << s.tp << ',' << s.fp << ',' << s.fn
            << ',' << s.tn << ',' << s.precision << ',' << s.sensitivity << ',' << s.false_positive_rate << ',' << s.f1
            << ",,\n";
    out << "summary,,macro," << m.evaluated << ",,,,," << m.precision << ',' << m.sensitivity << ','
        << m.false_positive_rate << ',' << m.f1 << ',' << m.overall_accuracy << ',' << m.kappa << '\n';
    return out.str();
}

}  // namespace specshape
