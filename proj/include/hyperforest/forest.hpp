#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "hyperforest/dataset.hpp"
#include "hyperforest/error.hpp"
#include "hyperforest/parallel.hpp"
#include "hyperforest/random.hpp"
#include "hyperforest/tree.hpp"

namespace hyperforest {

struct ForestParams {
  std::size_t trees = 500;
  std::size_t features_per_split = 0;  // 0 selects floor(sqrt(p))
  std::size_t min_node_size = 1;
  CategoricalSearch categorical_search = CategoricalSearch::Ordering;

  std::size_t resolved_features_per_split(std::size_t p) const {
    if (features_per_split != 0) return std::clamp<std::size_t>(features_per_split, 1, p);
    const auto root = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p))));
    return std::clamp<std::size_t>(root, 1, p);
  }

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

/// Tree votes for one row.
struct VoteTally {
  std::size_t votes_nc = 0;
  std::size_t total = 0;

  double probability() const { return static_cast<double>(votes_nc) / static_cast<double>(total); }
  /// Majority label with ties going to NC.
  Label majority() const { return votes_nc * 2 >= total ? Label::NC : Label::C; }
};

struct BootstrapSample {
  std::vector<std::uint32_t> in_bag;  // drawn rows, with repeats
  std::vector<std::uint32_t> oob;     // rows never drawn, in input order
};

/// Draws |rows| positions with replacement. Out-of-bag is positional, so a
/// row listed twice in `rows` can be both in and out of bag.
inline BootstrapSample bootstrap(std::span<const std::uint32_t> rows, Rng& rng) {
  BootstrapSample sample;
  sample.in_bag.reserve(rows.size());
  std::vector<char> drawn(rows.size(), 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, rows.size()));
    drawn[j] = 1;
    sample.in_bag.push_back(rows[j]);
  }
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (!drawn[j]) sample.oob.push_back(rows[j]);
  }
  return sample;
}

/// Each tree's generator is seeded with forest seed + tree index, so serial
/// and parallel training agree.
inline std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t tree) { return forest_seed + tree; }

class ForestModel {
 public:
  ForestModel() = default;
  ForestModel(FeatureSchema schema, ForestParams params, std::uint64_t seed, std::vector<std::uint32_t> training_rows,
              std::vector<DecisionTree> trees, std::vector<std::vector<std::uint32_t>> oob)
      : schema_(std::move(schema)),
        params_(params),
        seed_(seed),
        training_rows_(std::move(training_rows)),
        trees_(std::move(trees)),
        oob_(std::move(oob)) {
    if (trees_.empty()) throw Error(ErrorCode::InvariantViolation, "forest without trees");
    if (oob_.size() != trees_.size()) throw Error(ErrorCode::InvariantViolation, "one OOB set per tree required");
  }

  const FeatureSchema& schema() const { return schema_; }
  const ForestParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::uint32_t>& training_rows() const { return training_rows_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }
  const std::vector<std::vector<std::uint32_t>>& oob() const { return oob_; }

  template <class ValueAt>
  VoteTally vote_with(ValueAt&& value_at) const {
    VoteTally tally{0, trees_.size()};
    for (const auto& tree : trees_) tally.votes_nc += tree.predict_with(value_at) == Label::NC;
    return tally;
  }

  VoteTally vote(std::span<const double> row) const {
    check_width(row.size());
    return vote_with([row](std::size_t f) { return row[f]; });
  }

  /// Fraction of trees voting NC.
  double predict_proba(std::span<const double> row) const { return vote(row).probability(); }
  Label predict(std::span<const double> row) const { return vote(row).majority(); }

  Label predict_row(const Dataset& data, std::size_t r) const {
    return vote_with([&data, r](std::size_t f) { return data.value(r, f); }).majority();
  }

  void check_width(std::size_t width) const {
    if (width != schema_.size()) {
      throw Error(ErrorCode::SchemaMismatch,
                  "row has " + std::to_string(width) + " values, model expects " + std::to_string(schema_.size()));
    }
  }

  friend bool operator==(const ForestModel&, const ForestModel&) = default;

 private:
  FeatureSchema schema_;
  ForestParams params_;
  std::uint64_t seed_ = 0;
  std::vector<std::uint32_t> training_rows_;
  std::vector<DecisionTree> trees_;
  std::vector<std::vector<std::uint32_t>> oob_;
};

struct TrainedTree {
  DecisionTree tree;
  std::vector<std::uint32_t> oob;
};

inline TrainedTree train_tree(const Dataset& data, std::span<const std::uint32_t> rows, const ForestParams& params,
                              std::uint64_t seed) {
  Rng rng(seed);
  auto sample = bootstrap(rows, rng);
  const TreeParams tree_params{params.resolved_features_per_split(data.features()), params.min_node_size,
                               params.categorical_search};
  return {grow_tree(data, std::move(sample.in_bag), tree_params, rng), std::move(sample.oob)};
}

/// Regenerates tree OOB sets from the seeds, for models read back from disk.
inline std::vector<std::vector<std::uint32_t>> replay_oob(std::span<const std::uint32_t> rows, std::uint64_t seed,
                                                          std::size_t trees) {
  std::vector<std::vector<std::uint32_t>> oob(trees);
  for (std::size_t t = 0; t < trees; ++t) {
    Rng rng(tree_seed(seed, t));
    oob[t] = bootstrap(rows, rng).oob;
  }
  return oob;
}

inline void check_training_rows(const Dataset& data, std::span<const std::uint32_t> rows) {
  if (rows.empty()) throw Error(ErrorCode::EmptyNode, "forest needs at least one training row");
  for (const auto r : rows) {
    if (r >= data.rows()) throw Error(ErrorCode::InvariantViolation, "training row index out of range");
  }
}

inline ForestModel train_forest(const Dataset& data, std::span<const std::uint32_t> rows, const ForestParams& params,
                                std::uint64_t seed, unsigned threads = 1) {
  if (params.trees == 0) throw Error(ErrorCode::ConfigError, "tree count must be at least 1");
  check_training_rows(data, rows);
  std::vector<DecisionTree> trees(params.trees);
  std::vector<std::vector<std::uint32_t>> oob(params.trees);
  parallel_for(params.trees, threads, [&](std::size_t t) {
    auto trained = train_tree(data, rows, params, tree_seed(seed, t));
    trees[t] = std::move(trained.tree);
    oob[t] = std::move(trained.oob);
  });
  return ForestModel(data.schema(), params, seed, std::vector<std::uint32_t>(rows.begin(), rows.end()),
                     std::move(trees), std::move(oob));
}

struct ImportanceVector {
  std::vector<double> values;      // mean decrease in OOB accuracy per feature
  std::size_t skipped_trees = 0;   // trees with an empty OOB set
};

namespace detail {

/// Per-feature OOB accuracy drop of one tree; nullopt when OOB is empty.
inline std::optional<std::vector<double>> tree_importance(const DecisionTree& tree, std::span<const std::uint32_t> oob,
                                                          const Dataset& data, std::uint64_t seed) {
  if (oob.empty()) return std::nullopt;
  const std::size_t p = data.features();
  std::vector<double> drop(p, 0.0);
  std::size_t baseline = 0;
  for (const auto r : oob) baseline += tree.predict_row(data, r) == data.label(r);

  std::vector<double> shuffled(oob.size());
  for (std::size_t f = 0; f < p; ++f) {
    // A tree that never reads f predicts identically after the shuffle.
    if (!tree.uses_feature(f)) continue;
    for (std::size_t j = 0; j < oob.size(); ++j) shuffled[j] = data.value(oob[j], f);
    Rng rng(splitmix64(splitmix64(seed) + f + 1));
    shuffle(std::span<double>(shuffled), rng);
    std::size_t correct = 0;
    for (std::size_t j = 0; j < oob.size(); ++j) {
      const auto r = oob[j];
      const Label predicted = tree.predict_with([&](std::size_t g) { return g == f ? shuffled[j] : data.value(r, g); });
      correct += predicted == data.label(r);
    }
    drop[f] = (static_cast<double>(baseline) - static_cast<double>(correct)) / static_cast<double>(oob.size());
  }
  return drop;
}

}  // namespace detail

/// Breiman permutation importance: per tree, OOB accuracy before and after
/// shuffling one feature among the OOB rows, averaged over trees.
inline ImportanceVector permutation_importance(const ForestModel& model, const Dataset& data, unsigned threads = 1) {
  if (data.schema() != model.schema()) throw Error(ErrorCode::SchemaMismatch, "dataset schema differs from model");
  const auto& trees = model.trees();
  std::vector<std::optional<std::vector<double>>> per_tree(trees.size());
  parallel_for(trees.size(), threads, [&](std::size_t t) {
    per_tree[t] = detail::tree_importance(trees[t], model.oob()[t], data, tree_seed(model.seed(), t));
  });

  ImportanceVector result;
  result.values.assign(data.features(), 0.0);
  std::size_t used = 0;
  for (const auto& drop : per_tree) {
    if (!drop) {
      ++result.skipped_trees;
      continue;
    }
    ++used;
    for (std::size_t f = 0; f < drop->size(); ++f) result.values[f] += (*drop)[f];
  }
  if (used == 0) throw Error(ErrorCode::NoOobRows, "every tree has an empty out-of-bag set");
  for (auto& v : result.values) v /= static_cast<double>(used);
  return result;
}

}  // namespace hyperforest
