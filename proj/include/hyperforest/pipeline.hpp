#pragma once

// Split -> balanced sub-samples -> hyper-forest -> ROC calibration, and
// scoring of held-out rows.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperforest/dataset.hpp"
#include "hyperforest/evaluation.hpp"
#include "hyperforest/hyper_forest.hpp"
#include "hyperforest/parallel.hpp"
#include "hyperforest/random.hpp"
#include "hyperforest/splitter.hpp"

namespace hyperforest {

/// Independent streams derived from the one pipeline seed.
struct PipelineSeeds {
  std::uint64_t split;
  std::uint64_t subsample;
  std::uint64_t forest;
};

inline PipelineSeeds derive_seeds(std::uint64_t seed) { return {seed, splitmix64(seed + 1), splitmix64(seed + 2)}; }

inline SplitSpec split_spec(double train, double calibration, double test, std::uint64_t seed) {
  return {train, calibration, test, derive_seeds(seed).split};
}

struct TrainingRun {
  std::vector<BalancedSubsample> subsamples;
  HyperForestModel model;
  RocCurve roc;  // on the calibration split
  CalibrationResult calibration;
};

/// P(NC|x) of each listed row.
inline std::vector<double> score_rows(const HyperForestModel& model, const Dataset& data,
                                      std::span<const std::uint32_t> rows, unsigned threads = 0) {
  if (data.schema() != model.schema()) throw Error(ErrorCode::SchemaMismatch, "dataset schema differs from model");
  std::vector<double> scores(rows.size());
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (rows.size() + kBlock - 1) / kBlock;
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t end = std::min(rows.size(), (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) scores[i] = model.vote_row(data, rows[i]).probability();
  });
  return scores;
}

inline std::vector<Label> labels_of(const Dataset& data, std::span<const std::uint32_t> rows) {
  std::vector<Label> out;
  out.reserve(rows.size());
  for (const auto r : rows) out.push_back(data.label(r));
  return out;
}

/// Trains on split.train, then picks theta on split.calibration and stores it.
inline TrainingRun train_and_calibrate(const Dataset& data, const SplitIndices& split, const ForestParams& params,
                                       std::uint64_t seed, unsigned threads = 0, TrainingMetadata metadata = {}) {
  const auto seeds = derive_seeds(seed);
  TrainingRun run;
  run.subsamples = balanced_subsamples(split.train, data.labels(), seeds.subsample);
  metadata.seed = seed;
  run.model = train_hyper_forest(run.subsamples, data, params, seeds.forest, threads, std::move(metadata));
  const auto scores = score_rows(run.model, data, split.calibration, threads);
  run.roc = roc_curve(scores, labels_of(data, split.calibration), run.model.size());
  run.calibration = select_best_threshold(run.roc);
  run.model.set_threshold(run.calibration.theta);
  return run;
}

struct HeldOutEvaluation {
  std::vector<double> scores;
  std::vector<Label> labels;
  std::vector<Label> predictions;
  double theta = 0.0;
  ConfusionMatrix confusion;
  std::optional<RocCurve> roc;  // absent when the rows hold a single class
  MetricsReport metrics;
};

/// Scores `rows`, classifies at theta (the stored one by default) and
/// collects the metrics.
inline HeldOutEvaluation evaluate_rows(const HyperForestModel& model, const Dataset& data,
                                       std::span<const std::uint32_t> rows, std::optional<double> theta = std::nullopt,
                                       unsigned threads = 0) {
  HeldOutEvaluation out;
  out.theta = model.resolve(theta);
  out.scores = score_rows(model, data, rows, threads);
  out.labels = labels_of(data, rows);
  out.predictions.reserve(rows.size());
  for (const double p : out.scores) out.predictions.push_back(HyperForestModel::classify_probability(p, out.theta));
  out.confusion = confusion_matrix(out.predictions, out.labels);
  const auto nc = static_cast<std::size_t>(std::count(out.labels.begin(), out.labels.end(), Label::NC));
  if (nc > 0 && nc < out.labels.size()) out.roc = roc_curve(out.scores, out.labels, model.size());
  out.metrics = metrics_suite(out.confusion, out.roc ? std::optional<double>(out.roc->auc) : std::nullopt);
  return out;
}

}  // namespace hyperforest
