#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperforest/contracts.hpp"
#include "hyperforest/dataset.hpp"
#include "hyperforest/error.hpp"

namespace hyperforest {

/// Offset of the two sentinel thresholds placed outside [0, 1].
inline constexpr double kSentinelOffset = 1e-6;

struct RocPoint {
  double theta = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;

  bool sentinel() const { return theta < 0.0 || theta > 1.0; }
};

/// Points ordered by descending theta, so FPR and TPR never decrease.
struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

struct CalibrationResult {
  double theta = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double auc = 0.0;
  double distance = 0.0;  // to the ideal corner (0, 1)
};

/// Thresholds k/T for k = T..0, the only values a T-voter tally can take.
inline std::vector<double> vote_grid(std::size_t voters) {
  std::vector<double> grid;
  grid.reserve(voters + 1);
  for (std::size_t k = voters + 1; k-- > 0;) grid.push_back(static_cast<double>(k) / static_cast<double>(voters));
  return grid;
}

inline void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(a) + " values against " + std::to_string(b) + " labels");
  }
}

/// Area under a polyline by the trapezoid rule, points in curve order.
inline double trapezoid_auc(std::span<const RocPoint> points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
  }
  return area;
}

/// ROC of P(NC|x) scores with NC positive: a row is called NC when its score
/// exceeds theta. With `voters` set the grid is {k/T}; otherwise every
/// distinct score is a threshold. Sentinels above 1 and below 0 pin the
/// (0,0) and (1,1) ends.
inline RocCurve roc_curve(std::span<const double> scores, std::span<const Label> labels,
                          std::optional<std::size_t> voters = std::nullopt) {
  check_lengths(scores.size(), labels.size());
  std::vector<std::pair<double, Label>> sorted;
  sorted.reserve(scores.size());
  std::size_t positives = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    sorted.emplace_back(scores[i], labels[i]);
    positives += labels[i] == Label::NC;
  }
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) throw Error(ErrorCode::ClassAbsent, "ROC needs both C and NC rows");
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  std::vector<double> grid;
  if (voters) {
    grid = vote_grid(*voters);
  } else {
    for (const auto& [s, l] : sorted) {
      if (grid.empty() || grid.back() != s) grid.push_back(s);
    }
  }
  grid.insert(grid.begin(), 1.0 + kSentinelOffset);
  grid.push_back(-kSentinelOffset);

  RocCurve curve;
  curve.points.reserve(grid.size());
  std::size_t above = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (const double theta : grid) {
    while (above < sorted.size() && sorted[above].first > theta) {
      (sorted[above].second == Label::NC ? tp : fp) += 1;
      ++above;
    }
    curve.points.push_back({theta, static_cast<double>(fp) / static_cast<double>(negatives),
                            static_cast<double>(tp) / static_cast<double>(positives)});
  }
  curve.auc = trapezoid_auc(curve.points);
  return curve;
}

/// Grid point closest to (FPR, TPR) = (0, 1). Ties go to the lower FPR, then
/// the higher theta. Sentinel points are never chosen.
inline CalibrationResult select_best_threshold(const RocCurve& curve) {
  constexpr double kTie = 1e-12;
  const RocPoint* best = nullptr;
  double best_distance = 0.0;
  for (const auto& point : curve.points) {
    if (point.sentinel()) continue;
    const double distance = std::hypot(point.fpr, 1.0 - point.tpr);
    bool take = best == nullptr || distance < best_distance - kTie;
    if (!take && std::abs(distance - best_distance) <= kTie) {
      take = point.fpr < best->fpr || (point.fpr == best->fpr && point.theta > best->theta);
    }
    if (take) {
      best = &point;
      best_distance = distance;
    }
  }
  if (best == nullptr) throw Error(ErrorCode::InvariantViolation, "ROC curve has no threshold inside [0, 1]");
  return {best->theta, best->tpr, best->fpr, curve.auc, best_distance};
}

/// Counts with NC as the positive class.
struct ConfusionMatrix {
  std::uint64_t tp = 0;  // NC called NC
  std::uint64_t fp = 0;  // C called NC
  std::uint64_t tn = 0;  // C called C
  std::uint64_t fn = 0;  // NC called C

  std::uint64_t total() const { return tp + fp + tn + fn; }

  /// (correct, wrong) share of actual NC rows.
  std::optional<std::pair<double, double>> nc_row() const {
    const auto n = tp + fn;
    if (n == 0) return std::nullopt;
    const double correct = static_cast<double>(tp) / static_cast<double>(n);
    return std::pair{correct, static_cast<double>(fn) / static_cast<double>(n)};
  }

  /// (correct, wrong) share of actual C rows.
  std::optional<std::pair<double, double>> c_row() const {
    const auto n = tn + fp;
    if (n == 0) return std::nullopt;
    return std::pair{static_cast<double>(tn) / static_cast<double>(n), static_cast<double>(fp) / static_cast<double>(n)};
  }
};

inline ConfusionMatrix confusion_matrix(std::span<const Label> predictions, std::span<const Label> labels) {
  check_lengths(predictions.size(), labels.size());
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted_nc = predictions[i] == Label::NC;
    if (labels[i] == Label::NC) {
      (predicted_nc ? cm.tp : cm.fn) += 1;
    } else {
      (predicted_nc ? cm.fp : cm.tn) += 1;
    }
  }
  return cm;
}

/// Absent entries mark metrics whose denominator is zero.
struct MetricsReport {
  std::optional<double> accuracy;
  std::optional<double> balanced_accuracy;
  std::optional<double> nc_accuracy;  // TPR, recall
  std::optional<double> c_accuracy;   // TNR
  std::optional<double> auc;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

namespace detail {
inline std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace detail

inline MetricsReport metrics_suite(const ConfusionMatrix& cm, std::optional<double> auc = std::nullopt) {
  if (cm.total() == 0) throw Error(ErrorCode::LengthMismatch, "metrics of an empty confusion matrix");
  MetricsReport m;
  m.accuracy = detail::ratio(cm.tp + cm.tn, cm.total());
  m.nc_accuracy = detail::ratio(cm.tp, cm.tp + cm.fn);
  m.c_accuracy = detail::ratio(cm.tn, cm.tn + cm.fp);
  if (m.nc_accuracy && m.c_accuracy) m.balanced_accuracy = (*m.nc_accuracy + *m.c_accuracy) / 2.0;
  m.precision = detail::ratio(cm.tp, cm.tp + cm.fp);
  m.recall = m.nc_accuracy;
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  m.auc = auc;
  return m;
}

struct SweepRow {
  double theta = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> nc_accuracy;
  std::optional<double> c_accuracy;
  std::optional<double> balanced_accuracy;
};

inline std::vector<SweepRow> threshold_sweep(std::span<const double> scores, std::span<const Label> labels,
                                             std::span<const double> grid) {
  check_lengths(scores.size(), labels.size());
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::NC));
  if (positives == 0 || positives == labels.size()) {
    throw Error(ErrorCode::ClassAbsent, "threshold sweep needs both C and NC rows");
  }
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  std::vector<Label> predicted(scores.size());
  for (const double theta : grid) {
    for (std::size_t i = 0; i < scores.size(); ++i) predicted[i] = scores[i] > theta ? Label::NC : Label::C;
    const auto m = metrics_suite(confusion_matrix(predicted, labels));
    rows.push_back({theta, m.precision, m.recall, m.nc_accuracy, m.c_accuracy, m.balanced_accuracy});
  }
  return rows;
}

/// Square matrix of optional entries, row-major.
struct CorrelationMatrix {
  std::vector<std::string> names;
  std::vector<std::optional<double>> values;

  const std::optional<double>& at(std::size_t i, std::size_t j) const { return values[i * names.size() + j]; }
};

struct ClassCorrelations {
  CorrelationMatrix c;
  CorrelationMatrix nc;
};

/// Pearson correlation between numeric columns over the given rows. A
/// constant column yields absent entries.
inline CorrelationMatrix pearson_matrix(const Dataset& data, std::span<const std::size_t> features,
                                        std::span<const std::uint32_t> rows) {
  const std::size_t p = features.size();
  const double n = static_cast<double>(rows.size());
  std::vector<std::vector<double>> centered(p, std::vector<double>(rows.size()));
  std::vector<double> norm(p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    double mean = 0.0;
    for (const auto r : rows) mean += data.value(r, features[i]);
    mean /= n;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      centered[i][j] = data.value(rows[j], features[i]) - mean;
      norm[i] += centered[i][j] * centered[i][j];
    }
  }
  CorrelationMatrix out;
  for (const auto f : features) out.names.push_back(data.schema()[f].name);
  out.values.assign(p * p, std::nullopt);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      if (norm[i] <= 0.0 || norm[j] <= 0.0) continue;
      double value = 1.0;
      if (i != j) {
        double dot = 0.0;
        for (std::size_t k = 0; k < rows.size(); ++k) dot += centered[i][k] * centered[j][k];
        value = std::clamp(dot / std::sqrt(norm[i] * norm[j]), -1.0, 1.0);
      }
      out.values[i * p + j] = value;
      out.values[j * p + i] = value;
    }
  }
  return out;
}

/// Per-class Pearson matrices over the numeric features.
inline ClassCorrelations class_correlation_matrices(const Dataset& data) {
  std::vector<std::size_t> numeric;
  for (std::size_t f = 0; f < data.features(); ++f) {
    if (!data.schema()[f].categorical()) numeric.push_back(f);
  }
  std::vector<std::uint32_t> rows[2];
  for (std::uint32_t r = 0; r < data.rows(); ++r) rows[static_cast<int>(data.label(r))].push_back(r);
  if (rows[0].size() < 2 || rows[1].size() < 2) {
    throw Error(ErrorCode::ClassAbsent, "correlations need at least two rows per class");
  }
  return {pearson_matrix(data, numeric, rows[static_cast<int>(Label::C)]),
          pearson_matrix(data, numeric, rows[static_cast<int>(Label::NC)])};
}

}  // namespace hyperforest
