#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include <specshape/metrics.hpp>

#include "oracles.hpp"

using namespace specshape;

namespace {

LabelMap map_of(std::size_t rows, std::size_t cols, std::vector<ClassId> labels) {
    LabelMap m(rows, cols);
    m.labels = std::move(labels);
    return m;
}

// Random truth/prediction pair over classes 1..k with every class in the truth.
std::pair<LabelMap, LabelMap> random_pair(std::mt19937_64& rng, std::size_t k, std::size_t n) {
    std::vector<ClassId> t(n), p(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = ClassId(i < k ? i + 1 : 1 + rng() % k);
    std::shuffle(t.begin(), t.end(), rng);
    const double skill = double(rng() % 100) / 100.0;
    for (std::size_t i = 0; i < n; ++i) p[i] = double(rng() % 1000) / 1000.0 < skill ? t[i] : ClassId(1 + rng() % k);
    return {map_of(1, n, p), map_of(1, n, t)};
}

std::vector<std::vector<std::uint64_t>> dense(const LabelMap& pred, const LabelMap& truth, std::size_t k) {
    std::vector<std::vector<std::uint64_t>> m(k, std::vector<std::uint64_t>(k, 0));
    for (std::size_t i = 0; i < truth.labels.size(); ++i) ++m[truth.labels[i] - 1][pred.labels[i] - 1];
    return m;
}

}  // namespace

TEST(Metrics, PerfectPrediction) {
    const auto t = map_of(2, 3, {1, 2, 3, 1, 2, 3});
    const auto m = evaluate_metrics(t, t);
    EXPECT_EQ(m.overall_accuracy, 1.0);
    EXPECT_EQ(m.kappa, 1.0);
    EXPECT_EQ(m.precision, 1.0);
    EXPECT_EQ(m.sensitivity, 1.0);
    EXPECT_EQ(m.f1, 1.0);
    EXPECT_EQ(m.false_positive_rate, 0.0);
    EXPECT_EQ(m.evaluated, 6u);
}

TEST(Metrics, ConstantPredictorHasZeroKappa) {
    const auto truth = map_of(1, 4, {1, 1, 2, 2});
    const auto pred = map_of(1, 4, {1, 1, 1, 1});
    const auto m = evaluate_metrics(pred, truth);
    EXPECT_DOUBLE_EQ(m.overall_accuracy, 0.5);
    EXPECT_DOUBLE_EQ(m.kappa, 0.0);
    // Class 1: p = 0.5, r = 1; class 2: p = 0 (no predictions), r = 0.
    EXPECT_DOUBLE_EQ(m.precision, 0.25);
    EXPECT_DOUBLE_EQ(m.sensitivity, 0.5);
    EXPECT_DOUBLE_EQ(m.false_positive_rate, 0.5);
    EXPECT_DOUBLE_EQ(m.f1, (2 * 0.5 / 1.5) / 2);
}

TEST(Metrics, SingleClassTruthAndPrediction) {
    const auto one = map_of(1, 3, {4, 4, 4});
    EXPECT_EQ(evaluate_metrics(one, one).kappa, 1.0);
    const auto m = evaluate_metrics(map_of(1, 3, {5, 5, 5}), one);
    EXPECT_EQ(m.overall_accuracy, 0.0);
    EXPECT_EQ(m.kappa, 0.0);
}

TEST(Metrics, HandComputedThreeClass) {
    // truth\pred  1  2  3
    //   1         5  1  0
    //   2         2  3  1
    //   3         0  0  4
    std::vector<ClassId> t, p;
    const int grid[3][3] = {{5, 1, 0}, {2, 3, 1}, {0, 0, 4}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int n = 0; n < grid[i][j]; ++n) t.push_back(ClassId(i + 1)), p.push_back(ClassId(j + 1));
    const auto m = evaluate_metrics(map_of(1, t.size(), p), map_of(1, t.size(), t));
    EXPECT_DOUBLE_EQ(m.overall_accuracy, 12.0 / 16.0);
    const double pe = (6.0 * 7 + 6.0 * 4 + 4.0 * 5) / 256.0;
    EXPECT_NEAR(m.kappa, (0.75 - pe) / (1 - pe), 1e-15);
    EXPECT_NEAR(m.precision, (5.0 / 7 + 3.0 / 4 + 4.0 / 5) / 3, 1e-15);
    EXPECT_NEAR(m.sensitivity, (5.0 / 6 + 3.0 / 6 + 4.0 / 4) / 3, 1e-15);
    EXPECT_EQ(m.per_class[1].tp, 3u);
    EXPECT_EQ(m.per_class[1].fp, 1u);
    EXPECT_EQ(m.per_class[1].fn, 3u);
    EXPECT_EQ(m.per_class[1].tn, 9u);
}

TEST(Metrics, MatchesDirectFormulasOnRandomMatrices) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t k = 2 + rng() % 9;
        const auto [pred, truth] = random_pair(rng, k, 20 + rng() % 500);
        const auto m = evaluate_metrics(pred, truth);
        const auto d = oracle::direct_scores(dense(pred, truth, k));
        ASSERT_NEAR(m.overall_accuracy, d.oa, 1e-12);
        ASSERT_NEAR(m.kappa, d.kappa, 1e-12);
        ASSERT_NEAR(m.precision, d.precision, 1e-12);
        ASSERT_NEAR(m.sensitivity, d.sensitivity, 1e-12);
        ASSERT_NEAR(m.false_positive_rate, d.fpr, 1e-12);
        ASSERT_NEAR(m.f1, d.f1, 1e-12);
    }
}

TEST(Metrics, InvariantUnderPixelPermutation) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        auto [pred, truth] = random_pair(rng, 2 + rng() % 6, 200);
        const auto a = evaluate_metrics(pred, truth);
        std::vector<std::size_t> idx(truth.labels.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        LabelMap p2 = pred, t2 = truth;
        for (std::size_t i = 0; i < idx.size(); ++i) p2.labels[i] = pred.labels[idx[i]], t2.labels[i] = truth.labels[idx[i]];
        const auto b = evaluate_metrics(p2, t2);
        EXPECT_EQ(a.confusion.counts, b.confusion.counts);
        EXPECT_EQ(a.overall_accuracy, b.overall_accuracy);
        EXPECT_EQ(a.kappa, b.kappa);
        EXPECT_EQ(a.f1, b.f1);
    }
}

TEST(Metrics, RelabellingClassesKeepsScores) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 2 + rng() % 6;
        auto [pred, truth] = random_pair(rng, k, 300);
        std::vector<ClassId> perm(k);
        std::iota(perm.begin(), perm.end(), ClassId(1));
        std::shuffle(perm.begin(), perm.end(), rng);
        LabelMap p2 = pred, t2 = truth;
        for (auto& l : p2.labels) l = perm[l - 1];
        for (auto& l : t2.labels) l = perm[l - 1];
        const auto a = evaluate_metrics(pred, truth), b = evaluate_metrics(p2, t2);
        EXPECT_NEAR(a.kappa, b.kappa, 1e-12);
        EXPECT_NEAR(a.precision, b.precision, 1e-12);
        EXPECT_NEAR(a.sensitivity, b.sensitivity, 1e-12);
        EXPECT_NEAR(a.false_positive_rate, b.false_positive_rate, 1e-12);
        EXPECT_NEAR(a.f1, b.f1, 1e-12);
    }
}

TEST(Metrics, ZeroTruthIsIgnoredByDefault) {
    const auto truth = map_of(1, 5, {0, 0, 1, 2, 2});
    const auto pred = map_of(1, 5, {1, 2, 1, 2, 0});
    const auto m = evaluate_metrics(pred, truth);
    EXPECT_EQ(m.evaluated, 3u);
    EXPECT_DOUBLE_EQ(m.overall_accuracy, 2.0 / 3.0);
    // Class 0 appears only as a prediction: in the matrix, out of the averages.
    ASSERT_EQ(m.confusion.classes, (std::vector<ClassId>{0, 1, 2}));
    EXPECT_FALSE(m.per_class[0].in_truth);
    EXPECT_DOUBLE_EQ(m.sensitivity, (1.0 + 0.5) / 2);

    const auto strict = evaluate_metrics(pred, truth, false);
    EXPECT_EQ(strict.evaluated, 5u);
    EXPECT_DOUBLE_EQ(strict.overall_accuracy, 2.0 / 5.0);
    EXPECT_TRUE(strict.per_class[0].in_truth);
}

TEST(Metrics, Errors) {
    EXPECT_THROW(evaluate_metrics(map_of(1, 2, {1, 1}), map_of(2, 1, {1, 1})), ConfigError);
    EXPECT_THROW(evaluate_metrics(map_of(1, 2, {1, 1}), map_of(1, 2, {0, 0})), ConfigError);
    EXPECT_NO_THROW(evaluate_metrics(map_of(1, 2, {1, 1}), map_of(1, 2, {0, 0}), false));
    ConfusionMatrix cm{{1, 2}, {0, 0, 0, 0}};
    EXPECT_THROW(metrics_from_confusion(cm), ConfigError);
    ConfusionMatrix ragged{{1, 2}, {1, 0, 0}};
    EXPECT_THROW(metrics_from_confusion(ragged), ConfigError);
}

TEST(Metrics, Formats) {
    auto truth = map_of(1, 4, {1, 1, 2, 2});
    truth.class_table = {{1, {"PE", default_class_color(1)}}, {2, {"PP", default_class_color(2)}}};
    const auto m = evaluate_metrics(map_of(1, 4, {1, 2, 2, 2}), truth);
    const auto csv = format_metrics_csv(m);
    EXPECT_TRUE(csv.starts_with("row,class_id,class_name,support,tp,fp,fn,tn,precision,sensitivity,"
                                "false_positive_rate,f1,overall_accuracy,kappa\n"));
    EXPECT_NE(csv.find("class,1,PE,2,1,0,1,2,1,0.5,0,"), std::string::npos);
    EXPECT_NE(csv.find("\nsummary,,macro,4,"), std::string::npos);
    const auto text = format_metrics_text(m);
    EXPECT_NE(text.find("overall accuracy    0.7500"), std::string::npos);
    EXPECT_NE(text.find("PP"), std::string::npos);
}
