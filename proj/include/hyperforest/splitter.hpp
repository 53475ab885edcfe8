#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "hyperforest/contracts.hpp"
#include "hyperforest/error.hpp"
#include "hyperforest/random.hpp"

namespace hyperforest {

struct SplitSpec {
  double train = 0.5;
  double calibration = 0.2;
  double test = 0.3;
  std::uint64_t seed = 0;

  void validate() const {
    for (const double f : {train, calibration, test}) {
      if (!(f > 0.0 && f < 1.0)) throw Error(ErrorCode::ConfigError, "split fractions must lie in (0, 1)");
    }
    if (std::abs(train + calibration + test - 1.0) > 1e-9) {
      throw Error(ErrorCode::ConfigError, "split fractions must sum to 1");
    }
  }

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

/// Row indices of the three partitions, each sorted ascending.
struct SplitIndices {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> calibration;
  std::vector<std::uint32_t> test;
};

/// Largest-remainder apportionment of n items over the fractions; leftover
/// items go to the largest fractional parts, earlier partitions first on ties.
inline std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& fractions) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    double raw = static_cast<double>(n) * fractions[i];
    const double nearest = std::round(raw);
    if (std::abs(raw - nearest) < 1e-9) raw = nearest;
    counts[i] = static_cast<std::size_t>(std::floor(raw));
    remainders[i] = raw - std::floor(raw);
    assigned += counts[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];
  return counts;
}

/// Per-class shuffled split into train / calibration / test.
inline SplitIndices stratified_split(std::span<const Label> labels, const SplitSpec& spec) {
  spec.validate();
  std::vector<std::uint32_t> by_class[2];
  for (std::uint32_t i = 0; i < labels.size(); ++i) by_class[static_cast<int>(labels[i])].push_back(i);
  if (by_class[0].empty() || by_class[1].empty()) {
    throw Error(ErrorCode::ClassAbsent, "both C and NC rows are required to split");
  }

  Rng rng(spec.seed);
  SplitIndices out;
  // C first, then NC: the order the generator is consumed in is part of the contract.
  for (auto& rows : by_class) {
    shuffle(std::span<std::uint32_t>(rows), rng);
    const auto counts = apportion(rows.size(), {spec.train, spec.calibration, spec.test});
    auto it = rows.begin();
    out.train.insert(out.train.end(), it, it + static_cast<std::ptrdiff_t>(counts[0]));
    it += static_cast<std::ptrdiff_t>(counts[0]);
    out.calibration.insert(out.calibration.end(), it, it + static_cast<std::ptrdiff_t>(counts[1]));
    it += static_cast<std::ptrdiff_t>(counts[1]);
    out.test.insert(out.test.end(), it, rows.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.calibration.begin(), out.calibration.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

/// All training C rows plus an equal number of NC rows.
struct BalancedSubsample {
  std::vector<std::uint32_t> c_rows;
  std::vector<std::uint32_t> nc_rows;

  std::vector<std::uint32_t> rows() const {
    std::vector<std::uint32_t> all(c_rows);
    all.insert(all.end(), nc_rows.begin(), nc_rows.end());
    return all;
  }

  friend bool operator==(const BalancedSubsample&, const BalancedSubsample&) = default;
};

/// round(|NC| / |C|), halves away from zero, computed exactly on integers.
inline std::size_t subsample_count(std::size_t c_count, std::size_t nc_count) {
  return (2 * nc_count + c_count) / (2 * c_count);
}

/// Repeated random sub-sampling. The NC pool is shuffled once and cut into
/// consecutive chunks of |C| rows; a short final chunk is topped up with
/// distinct rows drawn from the earlier chunks.
inline std::vector<BalancedSubsample> balanced_subsamples(std::span<const std::uint32_t> train,
                                                          std::span<const Label> labels, std::uint64_t seed) {
  std::vector<std::uint32_t> c_rows;
  std::vector<std::uint32_t> nc_pool;
  for (const auto r : train) (labels[r] == Label::C ? c_rows : nc_pool).push_back(r);
  if (c_rows.empty() || nc_pool.empty()) throw Error(ErrorCode::ClassAbsent, "training set lacks a class");
  if (c_rows.size() > nc_pool.size()) {
    throw Error(ErrorCode::ImbalanceInverted, "more C rows (" + std::to_string(c_rows.size()) + ") than NC rows (" +
                                                  std::to_string(nc_pool.size()) + ")");
  }

  Rng rng(seed);
  shuffle(std::span<std::uint32_t>(nc_pool), rng);
  const std::size_t chunk = c_rows.size();
  const std::size_t count = subsample_count(chunk, nc_pool.size());

  std::vector<BalancedSubsample> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    auto& sub = out[k];
    sub.c_rows = c_rows;
    const std::size_t begin = std::min(k * chunk, nc_pool.size());
    const std::size_t end = std::min(begin + chunk, nc_pool.size());
    sub.nc_rows.assign(nc_pool.begin() + static_cast<std::ptrdiff_t>(begin),
                       nc_pool.begin() + static_cast<std::ptrdiff_t>(end));
    const std::size_t missing = chunk - sub.nc_rows.size();
    if (missing > 0) {
      // Partial Fisher-Yates over the rows already used by earlier chunks.
      std::vector<std::uint32_t> used(nc_pool.begin(), nc_pool.begin() + static_cast<std::ptrdiff_t>(begin));
      for (std::size_t i = 0; i < missing; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(rng, used.size() - i));
        std::swap(used[i], used[j]);
        sub.nc_rows.push_back(used[i]);
      }
    }
  }
  return out;
}

}  // namespace hyperforest
