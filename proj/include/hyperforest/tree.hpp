#pragma once

// CART classification trees for the binary C/NC problem.
//
// Split quality is compared exactly. For a binary split with child class
// counts (c_L, nc_L) and (c_R, nc_R), minimising the weighted Gini impurity
// is the same as maximising
//
//     (c_L^2 + nc_L^2) / n_L + (c_R^2 + nc_R^2) / n_R,
//
// which is kept as an integer fraction so that ties, and therefore the
// tie-breaking rules, do not depend on floating point rounding.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hyperforest/contracts.hpp"
#include "hyperforest/dataset.hpp"
#include "hyperforest/error.hpp"
#include "hyperforest/random.hpp"

namespace hyperforest {

struct ClassCounts {
  std::uint64_t c = 0;
  std::uint64_t nc = 0;

  std::uint64_t total() const { return c + nc; }
  void add(Label label) { label == Label::NC ? ++nc : ++c; }
  Label majority() const { return nc >= c ? Label::NC : Label::C; }
  bool pure() const { return c == 0 || nc == 0; }

  ClassCounts& operator+=(const ClassCounts& o) {
    c += o.c;
    nc += o.nc;
    return *this;
  }
  friend ClassCounts operator-(ClassCounts a, const ClassCounts& b) {
    a.c -= b.c;
    a.nc -= b.nc;
    return a;
  }
};

/// 1 - sum_k (n_k / n)^2.
inline double gini_impurity(const ClassCounts& counts) {
  const auto n = counts.total();
  if (n == 0) throw Error(ErrorCode::EmptyNode, "gini impurity of an empty node");
  const double pc = static_cast<double>(counts.c) / static_cast<double>(n);
  const double pnc = static_cast<double>(counts.nc) / static_cast<double>(n);
  return 1.0 - (pc * pc + pnc * pnc);
}

/// Exact purity of a partition, num / den.
struct PurityScore {
  __int128 num = 0;
  __int128 den = 1;

  static PurityScore of_node(const ClassCounts& node) {
    const auto n = static_cast<__int128>(node.total());
    return {static_cast<__int128>(node.c) * node.c + static_cast<__int128>(node.nc) * node.nc, n};
  }

  static PurityScore of_split(const ClassCounts& left, const ClassCounts& right) {
    const auto nl = static_cast<__int128>(left.total());
    const auto nr = static_cast<__int128>(right.total());
    const __int128 sl = static_cast<__int128>(left.c) * left.c + static_cast<__int128>(left.nc) * left.nc;
    const __int128 sr = static_cast<__int128>(right.c) * right.c + static_cast<__int128>(right.nc) * right.nc;
    return {sl * nr + sr * nl, nl * nr};
  }

  friend bool operator>(const PurityScore& a, const PurityScore& b) { return a.num * b.den > b.num * a.den; }
  friend bool operator==(const PurityScore& a, const PurityScore& b) { return a.num * b.den == b.num * a.den; }

  double value() const { return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den)); }
};

/// Gini decrease of a split of `parent` into `left` and the remainder.
inline double impurity_decrease(const ClassCounts& parent, const ClassCounts& left) {
  const ClassCounts right = parent - left;
  const auto split = PurityScore::of_split(left, right);
  const auto node = PurityScore::of_node(parent);
  const long double n = static_cast<long double>(parent.total());
  const long double gain = static_cast<long double>(split.num) / static_cast<long double>(split.den) -
                           static_cast<long double>(node.num) / static_cast<long double>(node.den);
  return static_cast<double>(gain / n);
}

struct SplitRule {
  std::uint32_t feature = 0;
  bool categorical = false;
  double threshold = 0.0;          // numeric: left iff value <= threshold
  std::uint64_t left_levels = 0;   // categorical: level bits sent left
  std::uint64_t right_levels = 0;  // categorical: level bits sent right
  bool heavier_left = true;        // route for levels in neither mask

  bool goes_left(double value) const {
    if (!categorical) return value <= threshold;
    if (value >= 0.0 && value < static_cast<double>(kMaxCategoricalLevels)) {
      const std::uint64_t bit = std::uint64_t{1} << static_cast<unsigned>(value);
      if (left_levels & bit) return true;
      if (right_levels & bit) return false;
    }
    return heavier_left;
  }

  friend bool operator==(const SplitRule&, const SplitRule&) = default;
};

struct SplitCandidate {
  SplitRule rule;
  PurityScore score;
  double decrease = 0.0;
};

enum class CategoricalSearch : std::uint8_t {
  /// Sort levels by NC proportion and scan prefixes; optimal for binary Gini.
  Ordering,
  /// Enumerate every 2^(L-1) - 1 partition. Only for small L.
  Exhaustive,
};

/// Exhaustive search is capped at this many observed levels.
inline constexpr std::size_t kExhaustiveLevelLimit = 16;

namespace detail {

struct SplitWorkspace {
  std::vector<std::pair<double, Label>> pairs;
};

inline double midpoint(double lo, double hi) {
  double mid = lo + (hi - lo) / 2.0;
  if (!(mid < hi)) mid = lo;
  return mid;
}

inline void consider(std::optional<SplitCandidate>& best, const PurityScore& score, const SplitRule& rule) {
  if (!best || score > best->score) best = SplitCandidate{rule, score, 0.0};
}

inline void best_numeric_split(const Dataset& data, std::span<const std::uint32_t> rows, std::uint32_t feature,
                               SplitWorkspace& ws, std::optional<SplitCandidate>& best,
                               const ClassCounts& parent) {
  const auto column = data.column(feature);
  ws.pairs.clear();
  for (const auto r : rows) ws.pairs.emplace_back(column[r], data.label(r));
  std::sort(ws.pairs.begin(), ws.pairs.end());
  ClassCounts left;
  for (std::size_t i = 0; i + 1 < ws.pairs.size(); ++i) {
    left.add(ws.pairs[i].second);
    const double lo = ws.pairs[i].first;
    const double hi = ws.pairs[i + 1].first;
    if (!(lo < hi)) continue;
    SplitRule rule;
    rule.feature = feature;
    rule.threshold = midpoint(lo, hi);
    consider(best, PurityScore::of_split(left, parent - left), rule);
  }
}

inline void best_categorical_split(const Dataset& data, std::span<const std::uint32_t> rows,
                                   std::uint32_t feature, CategoricalSearch search,
                                   std::optional<SplitCandidate>& best, const ClassCounts& parent) {
  const auto column = data.column(feature);
  ClassCounts per_level[kMaxCategoricalLevels];
  for (const auto r : rows) {
    const double code = column[r];
    if (!(code >= 0.0 && code < static_cast<double>(kMaxCategoricalLevels))) {
      throw Error(ErrorCode::SchemaMismatch, "categorical code out of range in training data");
    }
    per_level[static_cast<std::size_t>(code)].add(data.label(r));
  }
  std::vector<std::uint32_t> observed;
  for (std::uint32_t l = 0; l < kMaxCategoricalLevels; ++l) {
    if (per_level[l].total() > 0) observed.push_back(l);
  }
  if (observed.size() < 2) return;

  std::uint64_t observed_mask = 0;
  for (const auto l : observed) observed_mask |= std::uint64_t{1} << l;

  auto make_rule = [&](std::uint64_t left_mask) {
    SplitRule rule;
    rule.feature = feature;
    rule.categorical = true;
    rule.left_levels = left_mask;
    rule.right_levels = observed_mask & ~left_mask;
    return rule;
  };

  if (search == CategoricalSearch::Exhaustive && observed.size() <= kExhaustiveLevelLimit) {
    // observed[0] stays left; the other levels enumerate all masks except "all left".
    const std::size_t free_levels = observed.size() - 1;
    const std::uint64_t combos = (std::uint64_t{1} << free_levels) - 1;
    for (std::uint64_t m = 0; m < combos; ++m) {
      std::uint64_t mask = std::uint64_t{1} << observed[0];
      ClassCounts left = per_level[observed[0]];
      for (std::size_t j = 0; j < free_levels; ++j) {
        if (m >> j & 1) {
          mask |= std::uint64_t{1} << observed[j + 1];
          left += per_level[observed[j + 1]];
        }
      }
      consider(best, PurityScore::of_split(left, parent - left), make_rule(mask));
    }
    return;
  }

  // Ascending NC proportion, ties by level code.
  std::sort(observed.begin(), observed.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto& ca = per_level[a];
    const auto& cb = per_level[b];
    const auto lhs = static_cast<__int128>(ca.nc) * cb.total();
    const auto rhs = static_cast<__int128>(cb.nc) * ca.total();
    return lhs != rhs ? lhs < rhs : a < b;
  });
  ClassCounts left;
  std::uint64_t mask = 0;
  for (std::size_t k = 0; k + 1 < observed.size(); ++k) {
    left += per_level[observed[k]];
    mask |= std::uint64_t{1} << observed[k];
    consider(best, PurityScore::of_split(left, parent - left), make_rule(mask));
  }
}

}  // namespace detail

/// Best Gini split of `rows` over `features`. Ties go to the lower feature
/// index, then the lower threshold. Returns nullopt when no split lowers the
/// impurity.
inline std::optional<SplitCandidate> find_best_split(const Dataset& data, std::span<const std::uint32_t> rows,
                                                     std::span<const std::uint32_t> features,
                                                     CategoricalSearch search = CategoricalSearch::Ordering) {
  thread_local detail::SplitWorkspace ws;
  ClassCounts parent;
  for (const auto r : rows) parent.add(data.label(r));
  if (rows.size() < 2 || parent.pure()) return std::nullopt;

  std::vector<std::uint32_t> ordered(features.begin(), features.end());
  std::sort(ordered.begin(), ordered.end());

  std::optional<SplitCandidate> overall;
  for (const auto f : ordered) {
    std::optional<SplitCandidate> local;
    if (data.schema()[f].categorical()) {
      detail::best_categorical_split(data, rows, f, search, local, parent);
    } else {
      detail::best_numeric_split(data, rows, f, ws, local, parent);
    }
    if (local && (!overall || local->score > overall->score)) overall = local;
  }
  if (!overall || !(overall->score > PurityScore::of_node(parent))) return std::nullopt;

  ClassCounts left;
  for (const auto r : rows) {
    if (overall->rule.goes_left(data.value(r, overall->rule.feature))) left.add(data.label(r));
  }
  overall->decrease = impurity_decrease(parent, left);
  if (overall->rule.categorical) overall->rule.heavier_left = left.total() * 2 >= parent.total();
  return overall;
}

struct TreeParams {
  std::size_t features_per_split = 1;
  std::size_t min_node_size = 1;
  CategoricalSearch categorical_search = CategoricalSearch::Ordering;
};

class DecisionTree {
 public:
  struct Node {
    std::int32_t left = -1;  // -1 marks a leaf
    std::int32_t right = -1;
    SplitRule rule;
    ClassCounts counts;
    Label label = Label::NC;

    bool leaf() const { return left < 0; }
    friend bool operator==(const Node& a, const Node& b) {
      return a.left == b.left && a.right == b.right && a.rule == b.rule && a.counts.c == b.counts.c &&
             a.counts.nc == b.counts.nc && a.label == b.label;
    }
  };

  DecisionTree() = default;

  /// Adopts a node array, checking that it forms a proper binary tree rooted at 0.
  static DecisionTree from_nodes(std::vector<Node> nodes) {
    if (nodes.empty()) throw Error(ErrorCode::ModelFormat, "tree without nodes");
    std::vector<int> parents(nodes.size(), 0);
    for (const auto& node : nodes) {
      if (node.leaf()) {
        if (node.right >= 0) throw Error(ErrorCode::ModelFormat, "leaf with a right child");
        continue;
      }
      for (const auto child : {node.left, node.right}) {
        if (child <= 0 || static_cast<std::size_t>(child) >= nodes.size()) {
          throw Error(ErrorCode::ModelFormat, "child index out of range");
        }
        if (++parents[static_cast<std::size_t>(child)] > 1) throw Error(ErrorCode::ModelFormat, "node with two parents");
      }
    }
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      if (parents[i] != 1) throw Error(ErrorCode::ModelFormat, "unreachable node");
    }
    DecisionTree tree;
    tree.nodes_ = std::move(nodes);
    return tree;
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  /// value_at(feature) -> double supplies the row being classified.
  template <class ValueAt>
  Label predict_with(ValueAt&& value_at) const {
    std::size_t i = 0;
    while (!nodes_[i].leaf()) {
      const auto& node = nodes_[i];
      i = static_cast<std::size_t>(node.rule.goes_left(value_at(node.rule.feature)) ? node.left : node.right);
    }
    return nodes_[i].label;
  }

  Label predict(std::span<const double> row) const {
    return predict_with([row](std::size_t f) { return row[f]; });
  }

  Label predict_row(const Dataset& data, std::size_t row) const {
    return predict_with([&data, row](std::size_t f) { return data.value(row, f); });
  }

  bool uses_feature(std::size_t feature) const {
    return std::any_of(nodes_.begin(), nodes_.end(),
                       [feature](const Node& n) { return !n.leaf() && n.rule.feature == feature; });
  }

  std::size_t depth() const {
    std::size_t deepest = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      const auto [i, d] = stack.back();
      stack.pop_back();
      deepest = std::max(deepest, d);
      if (!nodes_[i].leaf()) {
        stack.emplace_back(static_cast<std::size_t>(nodes_[i].left), d + 1);
        stack.emplace_back(static_cast<std::size_t>(nodes_[i].right), d + 1);
      }
    }
    return deepest;
  }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  friend DecisionTree grow_tree(const Dataset&, std::vector<std::uint32_t>, const TreeParams&, Rng&);
  std::vector<Node> nodes_;
};

/// Grows an unpruned tree on `rows` (duplicates allowed). Every node draws a
/// fresh sample of params.features_per_split features without replacement.
/// Leaves take the majority label, ties to NC.
inline DecisionTree grow_tree(const Dataset& data, std::vector<std::uint32_t> rows, const TreeParams& params,
                              Rng& rng) {
  if (rows.empty()) throw Error(ErrorCode::EmptyNode, "cannot grow a tree on zero rows");
  const std::size_t p = data.features();
  const std::size_t mtry = std::clamp<std::size_t>(params.features_per_split, 1, p);

  std::vector<std::uint32_t> feature_pool(p);
  std::iota(feature_pool.begin(), feature_pool.end(), 0u);
  std::vector<std::uint32_t> sampled(mtry);

  DecisionTree tree;
  auto& nodes = tree.nodes_;
  nodes.emplace_back();

  struct Pending {
    std::size_t node;
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Pending> stack{{0, 0, rows.size()}};

  while (!stack.empty()) {
    const Pending task = stack.back();
    stack.pop_back();
    const std::span<std::uint32_t> span(rows.data() + task.begin, task.end - task.begin);

    ClassCounts counts;
    for (const auto r : span) counts.add(data.label(r));
    nodes[task.node].counts = counts;
    nodes[task.node].label = counts.majority();
    if (counts.pure() || span.size() < 2 || span.size() < params.min_node_size) continue;

    for (std::size_t k = 0; k < mtry; ++k) {
      const auto j = k + static_cast<std::size_t>(uniform_index(rng, p - k));
      std::swap(feature_pool[k], feature_pool[j]);
      sampled[k] = feature_pool[k];
    }
    const auto split = find_best_split(data, span, sampled, params.categorical_search);
    if (!split) continue;

    const auto& rule = split->rule;
    const auto middle = std::partition(span.begin(), span.end(),
                                       [&](std::uint32_t r) { return rule.goes_left(data.value(r, rule.feature)); });
    const std::size_t mid = task.begin + static_cast<std::size_t>(middle - span.begin());

    const auto left = static_cast<std::int32_t>(nodes.size());
    nodes[task.node].rule = rule;
    nodes[task.node].left = left;
    nodes[task.node].right = left + 1;
    nodes.emplace_back();
    nodes.emplace_back();
    stack.push_back({static_cast<std::size_t>(left) + 1, mid, task.end});
    stack.push_back({static_cast<std::size_t>(left), task.begin, mid});
  }
  return tree;
}

}  // namespace hyperforest
