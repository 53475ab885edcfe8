#pragma once

// Backward recursive feature elimination driven by aggregate permutation
// importance. Every stage retrains, recalibrates theta and scores the test
// split; the split itself never changes.

#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "hyperforest/features.hpp"
#include "hyperforest/io.hpp"
#include "hyperforest/pipeline.hpp"

namespace hyperforest {

struct RfeStage {
  std::vector<std::string> features;  // remaining at this stage
  std::optional<std::string> eliminated;
  std::optional<double> eliminated_importance;
  double theta = 0.0;
  std::optional<double> auc;
  std::optional<double> nc_accuracy;
  std::optional<double> c_accuracy;
  std::optional<double> balanced_accuracy;
};

struct RfeResult {
  std::vector<RfeStage> stages;  // backward order, all features first
  std::size_t best = 0;

  const std::vector<std::string>& best_features() const { return stages.at(best).features; }
};

namespace detail {

/// Least important position; ties go to the later position.
inline std::size_t least_important(const std::vector<double>& importance) {
  std::size_t pick = 0;
  for (std::size_t i = 1; i < importance.size(); ++i) {
    if (importance[i] <= importance[pick]) pick = i;
  }
  return pick;
}

}  // namespace detail

/// Highest balanced accuracy; ties go to the smaller subset.
inline std::size_t best_stage(const std::vector<RfeStage>& stages) {
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const auto& b = stages[k].balanced_accuracy;
    if (!b) continue;
    if (!best || *b >= *stages[*best].balanced_accuracy) best = k;
  }
  return best.value_or(stages.size() - 1);
}

inline RfeResult run_rfe(const Dataset& data, const SplitIndices& split, const ForestParams& params,
                         std::uint64_t seed, unsigned threads = 0,
                         const std::function<void(const RfeStage&)>& on_stage = {}) {
  if (data.features() == 0) throw Error(ErrorCode::ConfigError, "RFE needs at least one feature");
  std::vector<std::size_t> remaining(data.features());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});

  RfeResult result;
  while (!remaining.empty()) {
    const Dataset projected = data.select_features(remaining);
    const auto run = train_and_calibrate(projected, split, params, seed, threads);
    const auto test = evaluate_rows(run.model, projected, split.test, std::nullopt, threads);

    RfeStage stage;
    for (const auto f : remaining) stage.features.push_back(data.schema()[f].name);
    stage.theta = run.calibration.theta;
    stage.auc = test.metrics.auc;
    stage.nc_accuracy = test.metrics.nc_accuracy;
    stage.c_accuracy = test.metrics.c_accuracy;
    stage.balanced_accuracy = test.metrics.balanced_accuracy;

    std::optional<std::size_t> drop;
    if (remaining.size() > 1) {
      const auto importance = aggregate_importance(run.model, projected, threads);
      drop = detail::least_important(importance.values);
      stage.eliminated = stage.features[*drop];
      stage.eliminated_importance = importance.values[*drop];
    }
    if (on_stage) on_stage(stage);
    result.stages.push_back(std::move(stage));
    if (!drop) break;
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(*drop));
  }
  result.best = best_stage(result.stages);
  return result;
}

inline const std::vector<std::string>& rfe_tsv_header() {
  static const std::vector<std::string> header{"feature",    "type",        "balanced_accuracy", "nc_accuracy",
                                               "c_accuracy", "n_features",  "theta",             "auc",
                                               "best"};
  return header;
}

/// One backward-order stage row, as appended to the partial trace.
inline std::vector<std::string> rfe_stage_cells(const RfeStage& stage, bool best) {
  const std::string feature = stage.eliminated ? *stage.eliminated : stage.features.front();
  return {feature,
          std::string(feature_family(feature)),
          TsvWriter::cell(stage.balanced_accuracy),
          TsvWriter::cell(stage.nc_accuracy),
          TsvWriter::cell(stage.c_accuracy),
          std::to_string(stage.features.size()),
          format_double(stage.theta),
          TsvWriter::cell(stage.auc),
          best ? "1" : "0"};
}

/// Forward-order table: a class-prior "Random" row, then one row per stage
/// from the single-feature stage up to all features. Each row names the
/// feature that stage adds and the accuracies with it included.
inline std::string rfe_table(const RfeResult& result, const Dataset& data) {
  TsvWriter out(rfe_tsv_header());
  const double n = static_cast<double>(data.rows());
  const double nc_share = static_cast<double>(data.count(Label::NC)) / n;
  out.row("Random", "N/A", 0.5, nc_share, 1.0 - nc_share, 0, "NA", "NA", 0);
  for (std::size_t k = result.stages.size(); k-- > 0;) out.append(rfe_stage_cells(result.stages[k], k == result.best));
  return out.text();
}

}  // namespace hyperforest
