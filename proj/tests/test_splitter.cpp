#include <gtest/gtest.h>

#include <map>
#include <set>

#include "helpers.hpp"
#include "hyperforest/splitter.hpp"

namespace hf = hyperforest;

namespace {

std::vector<hf::Label> labels(std::size_t c, std::size_t nc) {
  std::vector<hf::Label> out(c, hf::Label::C);
  out.insert(out.end(), nc, hf::Label::NC);
  return out;
}

std::size_t count_of(const std::vector<std::uint32_t>& rows, const std::vector<hf::Label>& y, hf::Label label) {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [&](auto r) { return y[r] == label; }));
}

}  // namespace

TEST(StratifiedSplit, TenAndTen) {
  const auto y = labels(10, 10);
  const auto split = hf::stratified_split(y, {0.5, 0.2, 0.3, 1});
  for (const auto label : {hf::Label::C, hf::Label::NC}) {
    EXPECT_EQ(count_of(split.train, y, label), 5u);
    EXPECT_EQ(count_of(split.calibration, y, label), 2u);
    EXPECT_EQ(count_of(split.test, y, label), 3u);
  }
}

TEST(StratifiedSplit, DisjointAndComplete) {
  const auto y = labels(37, 401);
  const auto split = hf::stratified_split(y, {0.5, 0.2, 0.3, 9});
  std::set<std::uint32_t> seen;
  for (const auto* part : {&split.train, &split.calibration, &split.test}) {
    EXPECT_TRUE(std::is_sorted(part->begin(), part->end()));
    for (const auto r : *part) EXPECT_TRUE(seen.insert(r).second);
  }
  EXPECT_EQ(seen.size(), y.size());
  EXPECT_EQ(hf::stratified_split(y, {0.5, 0.2, 0.3, 9}).test, split.test);
  EXPECT_NE(hf::stratified_split(y, {0.5, 0.2, 0.3, 10}).test, split.test);
}

TEST(Apportion, LargeClassCounts) {
  EXPECT_EQ(hf::apportion(33494, {0.5, 0.2, 0.3}), (std::array<std::size_t, 3>{16747, 6699, 10048}));
  EXPECT_EQ(hf::apportion(1506892, {0.5, 0.2, 0.3}), (std::array<std::size_t, 3>{753446, 301378, 452068}));
  EXPECT_EQ(hf::apportion(1, {0.5, 0.2, 0.3}), (std::array<std::size_t, 3>{1, 0, 0}));
  EXPECT_EQ(hf::apportion(0, {0.5, 0.2, 0.3}), (std::array<std::size_t, 3>{0, 0, 0}));
}

TEST(StratifiedSplit, SingleCRowLandsInTrain) {
  const auto y = labels(1, 20);
  const auto split = hf::stratified_split(y, {0.5, 0.2, 0.3, 3});
  EXPECT_EQ(count_of(split.train, y, hf::Label::C), 1u);
  EXPECT_EQ(count_of(split.calibration, y, hf::Label::C), 0u);
  EXPECT_EQ(count_of(split.test, y, hf::Label::C), 0u);
}

TEST(StratifiedSplit, Errors) {
  try {
    hf::stratified_split(labels(0, 5), {});
    FAIL();
  } catch (const hf::Error& e) {
    EXPECT_EQ(e.code(), hf::ErrorCode::ClassAbsent);
  }
  try {
    hf::stratified_split(labels(5, 5), {0.5, 0.2, 0.2, 0});
    FAIL();
  } catch (const hf::Error& e) {
    EXPECT_EQ(e.code(), hf::ErrorCode::ConfigError);
  }
}

TEST(SubsampleCount, RoundsHalfAwayFromZero) {
  EXPECT_EQ(hf::subsample_count(2, 5), 3u);
  EXPECT_EQ(hf::subsample_count(16747, 753446), 45u);
  EXPECT_EQ(hf::subsample_count(4, 4), 1u);
  EXPECT_EQ(hf::subsample_count(4, 5), 1u);
  EXPECT_EQ(hf::subsample_count(4, 6), 2u);
  EXPECT_EQ(hf::subsample_count(10, 24), 2u);
  EXPECT_EQ(hf::subsample_count(10, 25), 3u);
}

TEST(BalancedSubsamples, TwoAgainstFive) {
  const auto y = labels(2, 5);
  const auto train = testing_support::all_rows(y.size());
  const auto subs = hf::balanced_subsamples(train, y, 4);
  ASSERT_EQ(subs.size(), 3u);
  std::map<std::uint32_t, int> uses;
  for (const auto& s : subs) {
    EXPECT_EQ(s.c_rows, (std::vector<std::uint32_t>{0, 1}));
    ASSERT_EQ(s.nc_rows.size(), 2u);
    EXPECT_NE(s.nc_rows[0], s.nc_rows[1]);
    for (const auto r : s.nc_rows) ++uses[r];
  }
  EXPECT_EQ(uses.size(), 5u);
  for (const auto& [row, n] : uses) EXPECT_LE(n, 2) << row;
}

TEST(BalancedSubsamples, FullScaleCounts) {
  const auto y = labels(16747, 753446);
  const auto train = testing_support::all_rows(y.size());
  const auto subs = hf::balanced_subsamples(train, y, 11);
  ASSERT_EQ(subs.size(), 45u);
  for (const auto& s : subs) {
    EXPECT_EQ(s.rows().size(), 33494u);
    EXPECT_EQ(s.nc_rows.size(), s.c_rows.size());
  }
}

TEST(BalancedSubsamples, EqualClassesGiveWholeSet) {
  const auto y = labels(6, 6);
  const auto train = testing_support::all_rows(y.size());
  const auto subs = hf::balanced_subsamples(train, y, 1);
  ASSERT_EQ(subs.size(), 1u);
  auto rows = subs[0].rows();
  std::sort(rows.begin(), rows.end());
  EXPECT_EQ(rows, train);
}

TEST(BalancedSubsamples, Determinism) {
  const auto y = labels(7, 40);
  const auto train = testing_support::all_rows(y.size());
  EXPECT_EQ(hf::balanced_subsamples(train, y, 5), hf::balanced_subsamples(train, y, 5));
  EXPECT_NE(hf::balanced_subsamples(train, y, 5), hf::balanced_subsamples(train, y, 6));
}

TEST(BalancedSubsamples, Errors) {
  const auto inverted = labels(5, 3);
  try {
    hf::balanced_subsamples(testing_support::all_rows(8), inverted, 0);
    FAIL();
  } catch (const hf::Error& e) {
    EXPECT_EQ(e.code(), hf::ErrorCode::ImbalanceInverted);
  }
  const auto one_class = labels(0, 3);
  try {
    hf::balanced_subsamples(testing_support::all_rows(3), one_class, 0);
    FAIL();
  } catch (const hf::Error& e) {
    EXPECT_EQ(e.code(), hf::ErrorCode::ClassAbsent);
  }
}
