#pragma once

// Slow, independent reference implementations used by the unit tests and
// the acceptance suite. None of these call into the library's algorithms.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

/// a/b compared with c/d for non-negative integers.
inline int compare_fraction(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
  const __int128 lhs = static_cast<__int128>(a) * d;
  const __int128 rhs = static_cast<__int128>(c) * b;
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

/// n * weighted Gini of a partition, as the fraction num / den:
/// n - sum over children of (c^2 + nc^2) / size.
struct Impurity {
  std::int64_t num = 0;
  std::int64_t den = 1;
};

inline Impurity partition_impurity(const std::vector<std::pair<int, int>>& children) {
  // children: (c, nc) per child. Common denominator is the product of sizes.
  std::int64_t den = 1;
  std::int64_t n = 0;
  for (const auto& [c, nc] : children) {
    den *= c + nc;
    n += c + nc;
  }
  std::int64_t num = n * den;
  for (const auto& [c, nc] : children) {
    const std::int64_t size = c + nc;
    num -= static_cast<std::int64_t>(c * c + nc * nc) * (den / size);
  }
  return {num, den};
}

/// Greedy Gini tree over numeric features by plain enumeration: every
/// feature, every midpoint between distinct sorted values, strictly better
/// wins, so ties stay with the lower feature and the lower threshold.
/// 1 = NC, 0 = C; leaf ties go to NC.
class BruteTree {
 public:
  BruteTree(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels) {
    std::vector<std::size_t> all(rows.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    root_ = build(rows, labels, all);
  }

  int predict(const std::vector<double>& x) const {
    const Node* node = root_.get();
    while (node->left) node = x[node->feature] <= node->threshold ? node->left.get() : node->right.get();
    return node->label;
  }

 private:
  struct Node {
    int label = 1;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::unique_ptr<Node> left;
    std::unique_ptr<Node> right;
  };

  static std::unique_ptr<Node> build(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
                                     const std::vector<std::size_t>& idx) {
    auto node = std::make_unique<Node>();
    int c = 0;
    int nc = 0;
    for (const auto i : idx) (labels[i] ? nc : c) += 1;
    node->label = nc >= c ? 1 : 0;
    if (idx.size() < 2 || c == 0 || nc == 0) return node;

    const Impurity parent = partition_impurity({{c, nc}});
    bool found = false;
    Impurity best{};
    std::size_t best_feature = 0;
    double best_threshold = 0.0;
    const std::size_t p = rows[idx[0]].size();
    for (std::size_t f = 0; f < p; ++f) {
      std::set<double> values;
      for (const auto i : idx) values.insert(rows[i][f]);
      for (auto it = values.begin(); std::next(it) != values.end(); ++it) {
        const double threshold = (*it + *std::next(it)) / 2.0;
        int lc = 0, lnc = 0, rc = 0, rnc = 0;
        for (const auto i : idx) {
          if (rows[i][f] <= threshold) {
            (labels[i] ? lnc : lc) += 1;
          } else {
            (labels[i] ? rnc : rc) += 1;
          }
        }
        const Impurity candidate = partition_impurity({{lc, lnc}, {rc, rnc}});
        if (!found || compare_fraction(candidate.num, candidate.den, best.num, best.den) < 0) {
          found = true;
          best = candidate;
          best_feature = f;
          best_threshold = threshold;
        }
      }
    }
    if (!found || compare_fraction(best.num, best.den, parent.num, parent.den) >= 0) return node;

    std::vector<std::size_t> left, right;
    for (const auto i : idx) (rows[i][best_feature] <= best_threshold ? left : right).push_back(i);
    node->feature = best_feature;
    node->threshold = best_threshold;
    node->left = build(rows, labels, left);
    node->right = build(rows, labels, right);
    return node;
  }

  std::unique_ptr<Node> root_;
};

/// Lowest n * weighted Gini over every two-way partition of the observed
/// levels. levels[i] is the level of row i, labels[i] is 1 for NC.
inline Impurity best_categorical_partition(const std::vector<int>& levels, const std::vector<int>& labels) {
  std::map<int, std::pair<int, int>> counts;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    auto& cell = counts[levels[i]];
    (labels[i] ? cell.second : cell.first) += 1;
  }
  std::vector<std::pair<int, int>> per_level;
  for (const auto& [level, cell] : counts) per_level.push_back(cell);
  const std::size_t L = per_level.size();
  bool found = false;
  Impurity best{};
  // The first level stays left; every other assignment except all-left.
  for (std::uint64_t m = 0; m + 1 < (std::uint64_t{1} << (L - 1)); ++m) {
    int lc = per_level[0].first, lnc = per_level[0].second, rc = 0, rnc = 0;
    for (std::size_t j = 1; j < L; ++j) {
      if (m >> (j - 1) & 1) {
        lc += per_level[j].first;
        lnc += per_level[j].second;
      } else {
        rc += per_level[j].first;
        rnc += per_level[j].second;
      }
    }
    if (rc + rnc == 0) continue;
    const Impurity candidate = partition_impurity({{lc, lnc}, {rc, rnc}});
    if (!found || compare_fraction(candidate.num, candidate.den, best.num, best.den) < 0) {
      found = true;
      best = candidate;
    }
  }
  return best;
}

/// Probability that a random positive outscores a random negative, ties
/// counted one half, by comparing every pair.
inline double mann_whitney_auc(const std::vector<double>& scores, const std::vector<int>& positive) {
  double wins = 0.0;
  std::int64_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positive[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

/// One contract reduced to what the aggregates read.
struct MiniContract {
  std::string buyer;
  std::string supplier;
  int year = 0;
  int week = 1;
  bool direct = false;
  double spending = 0.0;
};

struct RowAggregates {
  double t_cont = 0, t_spending = 0, t_ad = 0, active_weeks = 0, t_cont_max = 0, t_spending_max = 0;
  double rad = 0, fav = 0, cpw = 0, spw = 0;
};

/// Per-row recomputation by scanning the whole list, O(n^2) and worse.
/// Spending sums run over the group's amounts in ascending order.
inline RowAggregates naive_aggregates(const std::vector<MiniContract>& all, std::size_t row) {
  const auto& me = all[row];
  auto pair_stats = [&](const std::string& supplier) {
    RowAggregates a;
    std::vector<double> amounts;
    std::set<int> weeks;
    for (const auto& c : all) {
      if (c.buyer != me.buyer || c.supplier != supplier || c.year != me.year) continue;
      a.t_cont += 1;
      a.t_ad += c.direct ? 1 : 0;
      amounts.push_back(c.spending);
      weeks.insert(c.week);
    }
    std::sort(amounts.begin(), amounts.end());
    for (const double x : amounts) a.t_spending += x;
    a.active_weeks = static_cast<double>(weeks.size());
    return a;
  };
  RowAggregates out = pair_stats(me.supplier);
  for (const auto& c : all) {
    if (c.buyer != me.buyer || c.year != me.year) continue;
    const auto other = pair_stats(c.supplier);
    out.t_cont_max = std::max(out.t_cont_max, other.t_cont);
    out.t_spending_max = std::max(out.t_spending_max, other.t_spending);
  }
  out.rad = out.t_ad / out.t_cont;
  out.fav = 0.33 * (out.t_cont / out.t_cont_max) + 0.66 * (out.t_spending / out.t_spending_max);
  out.cpw = out.t_cont / out.active_weeks;
  out.spw = out.t_spending / out.active_weeks;
  return out;
}

}  // namespace oracle
