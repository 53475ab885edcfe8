#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperforest/forest.hpp"
#include "hyperforest/parallel.hpp"
#include "hyperforest/splitter.hpp"

namespace hyperforest {

struct TrainingMetadata {
  std::uint64_t seed = 0;
  SplitSpec split;
  ForestParams params;
  std::string dataset_fingerprint;  // SHA-256 of the canonical dataset text, may be empty

  friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

/// Seed of forest k inside a hyper-forest.
inline std::uint64_t forest_seed(std::uint64_t seed, std::size_t forest) { return splitmix64(seed + forest); }

/// One random forest per balanced sub-sample. Each forest casts a single
/// vote (its own tree majority, ties to NC); P(NC|x) = V(NC) / T.
class HyperForestModel {
 public:
  HyperForestModel() = default;
  HyperForestModel(FeatureSchema schema, std::vector<ForestModel> forests, TrainingMetadata metadata)
      : schema_(std::move(schema)), forests_(std::move(forests)), metadata_(std::move(metadata)) {
    if (forests_.empty()) throw Error(ErrorCode::InvariantViolation, "hyper-forest needs at least one forest");
    for (const auto& f : forests_) {
      if (f.schema() != schema_) throw Error(ErrorCode::SchemaMismatch, "forests disagree on the feature schema");
    }
  }

  const FeatureSchema& schema() const { return schema_; }
  const std::vector<ForestModel>& forests() const { return forests_; }
  std::size_t size() const { return forests_.size(); }
  const TrainingMetadata& metadata() const { return metadata_; }

  const std::optional<double>& threshold() const { return threshold_; }
  void set_threshold(double theta) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw Error(ErrorCode::InvariantViolation, "threshold must lie in [0, 1]");
    threshold_ = theta;
  }
  void clear_threshold() { threshold_.reset(); }

  template <class ValueAt>
  VoteTally vote_with(ValueAt&& value_at) const {
    VoteTally tally{0, forests_.size()};
    for (const auto& forest : forests_) tally.votes_nc += forest.vote_with(value_at).majority() == Label::NC;
    return tally;
  }

  VoteTally vote_probability(std::span<const double> row) const {
    check_width(row.size());
    return vote_with([row](std::size_t f) { return row[f]; });
  }

  VoteTally vote_row(const Dataset& data, std::size_t r) const {
    return vote_with([&data, r](std::size_t f) { return data.value(r, f); });
  }

  /// NC iff P(NC|x) > theta. Uses the stored threshold when none is given.
  Label classify(std::span<const double> row, std::optional<double> theta = std::nullopt) const {
    return classify_probability(vote_probability(row).probability(), resolve(theta));
  }

  double resolve(std::optional<double> theta) const {
    if (theta) {
      if (!(*theta >= 0.0 && *theta <= 1.0)) throw Error(ErrorCode::InvariantViolation, "threshold must lie in [0, 1]");
      return *theta;
    }
    if (!threshold_) throw Error(ErrorCode::ThresholdUnset, "no threshold supplied and none stored in the model");
    return *threshold_;
  }

  static Label classify_probability(double p_nc, double theta) { return p_nc > theta ? Label::NC : Label::C; }

  void check_width(std::size_t width) const {
    if (width != schema_.size()) {
      throw Error(ErrorCode::SchemaMismatch,
                  "row has " + std::to_string(width) + " values, model expects " + std::to_string(schema_.size()));
    }
  }

  friend bool operator==(const HyperForestModel&, const HyperForestModel&) = default;

 private:
  FeatureSchema schema_;
  std::vector<ForestModel> forests_;
  TrainingMetadata metadata_;
  std::optional<double> threshold_;
};

/// Trains one forest per sub-sample; forest k is seeded with forest_seed(seed, k). Tree jobs of all forests share one
/// work queue; seeds are fixed per (forest, tree), so results do not depend
/// on the thread count.
inline HyperForestModel train_hyper_forest(std::span<const BalancedSubsample> subsamples, const Dataset& data,
                                           const ForestParams& params, std::uint64_t seed, unsigned threads = 0,
                                           TrainingMetadata metadata = {}) {
  if (subsamples.empty()) throw Error(ErrorCode::InvariantViolation, "no balanced sub-samples to train on");
  if (params.trees == 0) throw Error(ErrorCode::ConfigError, "tree count must be at least 1");
  const std::size_t forests = subsamples.size();
  std::vector<std::vector<std::uint32_t>> rows(forests);
  for (std::size_t k = 0; k < forests; ++k) {
    rows[k] = subsamples[k].rows();
    check_training_rows(data, rows[k]);
  }

  std::vector<std::vector<DecisionTree>> trees(forests, std::vector<DecisionTree>(params.trees));
  std::vector<std::vector<std::vector<std::uint32_t>>> oob(forests,
                                                           std::vector<std::vector<std::uint32_t>>(params.trees));
  parallel_for(forests * params.trees, threads, [&](std::size_t job) {
    const std::size_t k = job / params.trees;
    const std::size_t t = job % params.trees;
    auto trained = train_tree(data, rows[k], params, tree_seed(forest_seed(seed, k), t));
    trees[k][t] = std::move(trained.tree);
    oob[k][t] = std::move(trained.oob);
  });

  std::vector<ForestModel> models;
  models.reserve(forests);
  for (std::size_t k = 0; k < forests; ++k) {
    models.emplace_back(data.schema(), params, forest_seed(seed, k), std::move(rows[k]), std::move(trees[k]),
                        std::move(oob[k]));
  }
  metadata.params = params;
  return HyperForestModel(data.schema(), std::move(models), std::move(metadata));
}

/// Feature-wise mean of each forest's permutation importance on its own sub-sample.
inline ImportanceVector aggregate_importance(const HyperForestModel& model, const Dataset& data, unsigned threads = 0) {
  ImportanceVector total;
  total.values.assign(data.features(), 0.0);
  std::vector<ImportanceVector> per_forest(model.size());
  parallel_for(model.size(), threads, [&](std::size_t k) {
    per_forest[k] = permutation_importance(model.forests()[k], data, 1);
  });
  for (const auto& imp : per_forest) {
    for (std::size_t f = 0; f < imp.values.size(); ++f) total.values[f] += imp.values[f];
    total.skipped_trees += imp.skipped_trees;
  }
  for (auto& v : total.values) v /= static_cast<double>(model.size());
  return total;
}

}  // namespace hyperforest
