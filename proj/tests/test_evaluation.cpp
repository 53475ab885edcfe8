#include <gtest/gtest.h>

#include <random>
#include <set>

#include "helpers.hpp"
#include "hyperforest/evaluation.hpp"
#include "oracles.hpp"

namespace hf = hyperforest;

namespace {

constexpr auto C = hf::Label::C;
constexpr auto NC = hf::Label::NC;

hf::RocCurve hand_curve(const std::vector<std::pair<double, double>>& fpr_tpr) {
  hf::RocCurve curve;
  const double n = static_cast<double>(fpr_tpr.size() - 1);
  for (std::size_t i = 0; i < fpr_tpr.size(); ++i) {
    curve.points.push_back({1.0 - static_cast<double>(i) / n, fpr_tpr[i].first, fpr_tpr[i].second});
  }
  curve.auc = hf::trapezoid_auc(curve.points);
  return curve;
}

}  // namespace

TEST(RocCurve, PerfectSeparation) {
  const std::vector<double> scores{1, 1, 0, 0};
  const std::vector<hf::Label> labels{NC, NC, C, C};
  const auto curve = hf::roc_curve(scores, labels, 45);
  EXPECT_DOUBLE_EQ(curve.auc, 1.0);
  EXPECT_EQ(curve.points.size(), 48u);
  EXPECT_EQ(curve.points.front().fpr, 0.0);
  EXPECT_EQ(curve.points.front().tpr, 0.0);
  EXPECT_EQ(curve.points.back().fpr, 1.0);
  EXPECT_EQ(curve.points.back().tpr, 1.0);
  const auto best = hf::select_best_threshold(curve);
  EXPECT_EQ(best.distance, 0.0);
  EXPECT_EQ(best.tpr, 1.0);
  EXPECT_EQ(best.fpr, 0.0);
}

TEST(RocCurve, RandomScoresNearHalf) {
  std::mt19937_64 gen(1);
  std::vector<double> scores;
  std::vector<hf::Label> labels;
  for (int i = 0; i < 20000; ++i) {
    scores.push_back(static_cast<double>(gen() % 46) / 45.0);
    labels.push_back(gen() % 2 ? NC : C);
  }
  EXPECT_NEAR(hf::roc_curve(scores, labels, 45).auc, 0.5, 0.02);
}

TEST(RocCurve, HandTrapezoid) {
  EXPECT_DOUBLE_EQ(hand_curve({{0, 0}, {0.5, 0.8}, {1, 1}}).auc, 0.65);
}

TEST(RocCurve, MatchesMannWhitneyAndIsMonotone) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + gen() % 199;
    std::vector<double> scores(n);
    std::vector<hf::Label> labels(n);
    std::vector<int> positive(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(gen() % 46) / 45.0;
      positive[i] = static_cast<int>(gen() % 2);
      labels[i] = positive[i] ? NC : C;
    }
    positive[0] = 1;
    labels[0] = NC;
    positive[1] = 0;
    labels[1] = C;
    const auto curve = hf::roc_curve(scores, labels, 45);
    EXPECT_NEAR(curve.auc, oracle::mann_whitney_auc(scores, positive), 1e-12);
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      EXPECT_GT(curve.points[i - 1].theta, curve.points[i].theta);
      EXPECT_LE(curve.points[i - 1].fpr, curve.points[i].fpr);
      EXPECT_LE(curve.points[i - 1].tpr, curve.points[i].tpr);
    }
    // Reversing labels mirrors the AUC.
    std::vector<hf::Label> flipped(n);
    for (std::size_t i = 0; i < n; ++i) flipped[i] = labels[i] == NC ? C : NC;
    EXPECT_NEAR(hf::roc_curve(scores, flipped, 45).auc, 1.0 - curve.auc, 1e-12);
    // Without a vote grid every distinct score is a threshold; same area.
    EXPECT_NEAR(hf::roc_curve(scores, labels).auc, curve.auc, 1e-12);
  }
}

TEST(RocCurve, Errors) {
  const std::vector<double> scores{0.5, 0.2};
  const std::vector<hf::Label> one_class{NC, NC};
  try {
    hf::roc_curve(scores, one_class);
    FAIL();
  } catch (const hf::Error& e) {
    EXPECT_EQ(e.code(), hf::ErrorCode::ClassAbsent);
  }
  const std::vector<hf::Label> short_labels{NC};
  EXPECT_THROW(hf::roc_curve(scores, short_labels), hf::Error);
}

TEST(SelectBestThreshold, HandCurve) {
  const auto best = hf::select_best_threshold(hand_curve({{0, 0}, {0.1, 0.9}, {0.3, 0.95}, {1, 1}}));
  EXPECT_EQ(best.fpr, 0.1);
  EXPECT_EQ(best.tpr, 0.9);
  EXPECT_NEAR(best.distance, 0.1414, 1e-4);
}

TEST(SelectBestThreshold, TiesPreferLowerFprThenHigherTheta) {
  // (0.1, 0.8) and (0.2, 0.9) are both at distance sqrt(0.05).
  auto best = hf::select_best_threshold(hand_curve({{0, 0}, {0.2, 0.9}, {0.1, 0.8}, {1, 1}}));
  EXPECT_EQ(best.fpr, 0.1);
  best = hf::select_best_threshold(hand_curve({{0, 0}, {0.1, 0.9}, {0.1, 0.9}, {1, 1}}));
  EXPECT_DOUBLE_EQ(best.theta, 2.0 / 3.0);
}

TEST(SelectBestThreshold, SkipsSentinels) {
  const std::vector<double> scores{0.2, 0.2, 0.2, 0.2};
  const std::vector<hf::Label> labels{NC, C, NC, C};
  const auto best = hf::select_best_threshold(hf::roc_curve(scores, labels, 5));
  EXPECT_GE(best.theta, 0.0);
  EXPECT_LE(best.theta, 1.0);
}

TEST(ConfusionMatrix, RowsNormalize) {
  const std::vector<hf::Label> predicted{NC, NC, C, C, NC};
  const std::vector<hf::Label> actual{NC, NC, NC, C, C};
  const auto cm = hf::confusion_matrix(predicted, actual);
  EXPECT_EQ(cm.tp, 2u);
  EXPECT_EQ(cm.fn, 1u);
  EXPECT_EQ(cm.tn, 1u);
  EXPECT_EQ(cm.fp, 1u);
  EXPECT_EQ(cm.total(), 5u);
  EXPECT_DOUBLE_EQ(cm.nc_row()->first, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(cm.nc_row()->second, 1.0 / 3.0);
  EXPECT_EQ(cm.c_row()->first + cm.c_row()->second, 1.0);
  const auto perfect = hf::confusion_matrix(actual, actual);
  EXPECT_EQ(perfect.nc_row(), (std::pair{1.0, 0.0}));
  EXPECT_EQ(perfect.c_row(), (std::pair{1.0, 0.0}));
  EXPECT_THROW(hf::confusion_matrix(predicted, std::vector<hf::Label>{NC}), hf::Error);
}

TEST(MetricsSuite, SymmetricCase) {
  const auto m = hf::metrics_suite({25, 25, 25, 25}, 0.5);
  for (const auto& v : {m.accuracy, m.balanced_accuracy, m.nc_accuracy, m.c_accuracy, m.precision, m.recall, m.f1}) {
    ASSERT_TRUE(v);
    EXPECT_DOUBLE_EQ(*v, 0.5);
  }
}

TEST(MetricsSuite, HandTriple) {
  const auto m = hf::metrics_suite({9, 1, 0, 0});
  EXPECT_DOUBLE_EQ(*m.precision, 0.9);
  EXPECT_DOUBLE_EQ(*m.recall, 1.0);
  EXPECT_NEAR(*m.f1, 18.0 / 19.0, 1e-9);
  EXPECT_EQ(*m.c_accuracy, 0.0);
  EXPECT_DOUBLE_EQ(*m.balanced_accuracy, 0.5);
  EXPECT_FALSE(m.auc);
  EXPECT_FALSE(hf::metrics_suite({9, 0, 0, 0}).c_accuracy);
}

TEST(MetricsSuite, Identities) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const hf::ConfusionMatrix cm{1 + gen() % 500, 1 + gen() % 500, 1 + gen() % 500, 1 + gen() % 500};
    const auto m = hf::metrics_suite(cm);
    EXPECT_NEAR(*m.balanced_accuracy, (*m.nc_accuracy + *m.c_accuracy) / 2.0, 1e-12);
    EXPECT_NEAR(*m.f1, 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall), 1e-12);
    EXPECT_GE(*m.accuracy, std::min(*m.nc_accuracy, *m.c_accuracy) - 1e-12);
    EXPECT_LE(*m.accuracy, std::max(*m.nc_accuracy, *m.c_accuracy) + 1e-12);
  }
  EXPECT_THROW(hf::metrics_suite({}), hf::Error);
}

TEST(ThresholdSweep, BoundariesAndMonotonicity) {
  // NC scores spread over 1..45 grid steps, C scores over 0..29.
  std::vector<double> scores;
  std::vector<hf::Label> labels;
  for (int k = 1; k <= 45; ++k) {
    scores.insert(scores.end(), 30, k / 45.0);
    labels.insert(labels.end(), 30, NC);
  }
  for (int k = 0; k < 30; ++k) {
    scores.insert(scores.end(), 10, k / 45.0);
    labels.insert(labels.end(), 10, C);
  }
  const auto grid = hf::vote_grid(45);
  std::vector<double> ascending(grid.rbegin(), grid.rend());
  const auto rows = hf::threshold_sweep(scores, labels, ascending);
  ASSERT_EQ(rows.size(), 46u);
  EXPECT_EQ(rows.front().theta, 0.0);
  EXPECT_EQ(*rows.front().recall, 1.0);
  EXPECT_EQ(*rows.back().recall, 0.0);
  EXPECT_FALSE(rows.back().precision);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LE(*rows[i].recall, *rows[i - 1].recall);
    if (rows[i].precision) {
      EXPECT_GE(*rows[i].precision, *rows[i - 1].precision - 1e-12);
    }
  }
}

TEST(Correlation, DiagonalAndScaledColumns) {
  std::mt19937_64 gen(5);
  std::vector<std::vector<double>> rows;
  std::vector<hf::Label> labels;
  for (int i = 0; i < 400; ++i) {
    const double spending = static_cast<double>(gen() % 10000);
    rows.push_back({spending, spending / 4.0, static_cast<double>(gen() % 1000), 3.0});
    labels.push_back(i % 2 ? NC : C);
  }
  const auto data = testing_support::numeric_dataset(rows, labels);
  const auto corr = hf::class_correlation_matrices(data);
  for (const auto* m : {&corr.c, &corr.nc}) {
    ASSERT_EQ(m->names.size(), 4u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(*m->at(i, i), 1.0);
    EXPECT_NEAR(*m->at(0, 1), 1.0, 1e-12);
    EXPECT_NEAR(*m->at(0, 2), 0.0, 0.25);
    EXPECT_EQ(*m->at(0, 2), *m->at(2, 0));
    EXPECT_FALSE(m->at(3, 3));
    EXPECT_FALSE(m->at(0, 3));
  }
}

TEST(Correlation, SkipsCategoricalAndNeedsTwoRowsPerClass) {
  const hf::FeatureSchema schema({{"x", hf::FeatureKind::Numeric, {}},
                                  {"g", hf::FeatureKind::Categorical, {"a", "b"}},
                                  {"y", hf::FeatureKind::Numeric, {}}});
  const hf::Dataset data(schema, {{1, 2, 3, 4}, {0, 1, 0, 1}, {2, 1, 4, 3}}, {C, C, NC, NC});
  const auto corr = hf::class_correlation_matrices(data);
  EXPECT_EQ(corr.c.names, (std::vector<std::string>{"x", "y"}));
  const hf::Dataset thin(schema, {{1, 2, 3}, {0, 1, 0}, {2, 1, 4}}, {C, NC, NC});
  EXPECT_THROW(hf::class_correlation_matrices(thin), hf::Error);
}
