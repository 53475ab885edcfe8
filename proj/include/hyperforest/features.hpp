#pragma once

// Buyer-supplier aggregates, buyer maxima, risk factors and the 19-column
// feature table. Every aggregate is keyed by the calendar year of the
// contract's start date.

#include <algorithm>
#include <array>
#include <bitset>
#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "hyperforest/contracts.hpp"
#include "hyperforest/dataset.hpp"
#include "hyperforest/error.hpp"

namespace hyperforest {

struct PairKey {
  std::string buyer;
  std::string supplier;
  int year = 0;

  friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

struct BuyerKey {
  std::string buyer;
  int year = 0;

  friend auto operator<=>(const BuyerKey&, const BuyerKey&) = default;
};

struct PairAggregate {
  std::uint64_t contracts = 0;      // T.Cont
  double spending = 0.0;            // T.Spending
  std::uint64_t direct_awards = 0;  // T.AD
  std::uint32_t active_weeks = 0;   // distinct beginning weeks

  friend bool operator==(const PairAggregate&, const PairAggregate&) = default;
};

struct BuyerAggregate {
  std::uint64_t max_contracts = 0;  // T.Cont.Max
  double max_spending = 0.0;        // T.Spending.Max

  friend bool operator==(const BuyerAggregate&, const BuyerAggregate&) = default;
};

struct RiskFactors {
  double rad = 0.0;
  double fav = 0.0;
  double cpw = 0.0;
  double spw = 0.0;
};

using PairMap = std::map<PairKey, PairAggregate>;
using BuyerMap = std::map<BuyerKey, BuyerAggregate>;

inline PairKey pair_key(const ContractRecord& r) { return {r.buyer_id, r.supplier_id, r.year()}; }
inline BuyerKey buyer_key(const ContractRecord& r) { return {r.buyer_id, r.year()}; }

/// Spending is summed in ascending order within each group, so the result
/// does not depend on record order.
inline PairMap compute_pair_aggregates(std::span<const ContractRecord> records) {
  struct Accumulator {
    PairAggregate agg;
    std::vector<double> amounts;
    std::bitset<54> weeks;
  };
  std::map<PairKey, Accumulator> groups;
  for (const auto& r : records) {
    auto& g = groups[pair_key(r)];
    ++g.agg.contracts;
    g.agg.direct_awards += r.code(kProcedureType) == kDirectAward;
    g.amounts.push_back(r.spending);
    g.weeks.set(static_cast<std::size_t>(r.beginning_week));
  }
  PairMap out;
  for (auto& [key, g] : groups) {
    std::sort(g.amounts.begin(), g.amounts.end());
    for (const double a : g.amounts) g.agg.spending += a;
    g.agg.active_weeks = static_cast<std::uint32_t>(g.weeks.count());
    out.emplace_hint(out.end(), key, g.agg);
  }
  return out;
}

/// The two maxima are taken independently and may come from different suppliers.
inline BuyerMap compute_buyer_maxima(const PairMap& pairs) {
  BuyerMap out;
  for (const auto& [key, pair] : pairs) {
    auto& b = out[{key.buyer, key.year}];
    b.max_contracts = std::max(b.max_contracts, pair.contracts);
    b.max_spending = std::max(b.max_spending, pair.spending);
  }
  return out;
}

inline RiskFactors compute_risk_factors(const PairAggregate& pair, const BuyerAggregate& buyer) {
  if (buyer.max_contracts == 0 || !(buyer.max_spending > 0.0)) {
    throw Error(ErrorCode::DegenerateBuyer, "buyer maximum is zero");
  }
  if (pair.contracts == 0 || pair.active_weeks == 0) {
    throw Error(ErrorCode::MissingAggregate, "pair aggregate without contracts");
  }
  const double contracts = static_cast<double>(pair.contracts);
  const double weeks = static_cast<double>(pair.active_weeks);
  RiskFactors risk;
  risk.rad = static_cast<double>(pair.direct_awards) / contracts;
  risk.fav = 0.33 * (contracts / static_cast<double>(buyer.max_contracts)) + 0.66 * (pair.spending / buyer.max_spending);
  risk.cpw = contracts / weeks;
  risk.spw = pair.spending / weeks;
  return risk;
}

/// Contract duration in weeks. An ending week before the beginning week is
/// read as running into the following year.
inline int duration_weeks(const ContractRecord& r) {
  if (r.ending_week >= r.beginning_week) return r.ending_week - r.beginning_week;
  return r.ending_week + iso_weeks_in_year(r.year()) - r.beginning_week;
}

/// Column order of the assembled feature table.
enum FeatureColumn : std::size_t {
  kGO = 0,
  kPC,
  kCT,
  kPT,
  kS,
  kBeginningWeek,
  kEndingWeek,
  kEBWeeks,
  kSpending,
  kTCont,
  kTSpending,
  kTAD,
  kActiveWeeks,
  kTContMax,
  kTSpendingMax,
  kRAD,
  kFav,
  kCPW,
  kSPW,
  kFeatureCount,
};

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "GO",     "PC",         "CT",        "PT",     "S",          "BeginningWeek", "EndingWeek",
    "EBWeeks", "Spending",  "T.Cont",    "T.Spending", "T.AD",   "ActiveWeeks",   "T.Cont.Max",
    "T.Spending.Max", "RAD", "Fav",      "CPW",    "SPW"};

/// Feature family: i) contract, ii) buyer-supplier relation, iii) buyer,
/// iv) risk factor. Unknown names yield "-".
inline std::string_view feature_family(std::string_view name) {
  static constexpr std::array<std::string_view, kFeatureCount> kFamily{
      "i", "i", "i", "i", "i", "i", "i", "i", "i", "ii", "ii", "ii", "ii", "iii", "iii", "iv", "iv", "iv", "iv"};
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (kFeatureNames[i] == name) return kFamily[i];
  }
  return "-";
}

inline FeatureSpec categorical_spec(CategoricalField field) {
  const auto& domain = kCategoricalDomains[field];
  FeatureSpec spec{std::string(domain.feature), FeatureKind::Categorical, {}};
  for (std::size_t i = 0; i < domain.count; ++i) spec.levels.emplace_back(domain.codes[i]);
  return spec;
}

inline FeatureSchema contract_feature_schema() {
  std::vector<FeatureSpec> specs;
  for (std::size_t f = 0; f < kCategoricalDomains.size(); ++f) specs.push_back(categorical_spec(static_cast<CategoricalField>(f)));
  for (std::size_t i = kBeginningWeek; i < kFeatureCount; ++i) specs.push_back({std::string(kFeatureNames[i]), FeatureKind::Numeric, {}});
  return FeatureSchema(std::move(specs));
}

/// One labeled feature row per record, in record order.
inline Dataset assemble_features(std::span<const ContractRecord> records, std::span<const Label> labels,
                                 const PairMap& pairs, const BuyerMap& buyers) {
  if (records.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "records and labels differ in length");
  std::vector<std::vector<double>> columns(kFeatureCount, std::vector<double>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto pair = pairs.find(pair_key(r));
    const auto buyer = buyers.find(buyer_key(r));
    if (pair == pairs.end() || buyer == buyers.end()) {
      throw Error(ErrorCode::MissingAggregate, "no aggregate for buyer '" + r.buyer_id + "', supplier '" +
                                                   r.supplier_id + "', year " + std::to_string(r.year()));
    }
    const auto& p = pair->second;
    const auto& b = buyer->second;
    const auto risk = compute_risk_factors(p, b);
    auto set = [&](FeatureColumn c, double v) { columns[c][i] = v; };
    for (std::size_t f = 0; f < kCategoricalDomains.size(); ++f) columns[f][i] = r.codes[f];
    set(kBeginningWeek, r.beginning_week);
    set(kEndingWeek, r.ending_week);
    set(kEBWeeks, duration_weeks(r));
    set(kSpending, r.spending);
    set(kTCont, static_cast<double>(p.contracts));
    set(kTSpending, p.spending);
    set(kTAD, static_cast<double>(p.direct_awards));
    set(kActiveWeeks, p.active_weeks);
    set(kTContMax, static_cast<double>(b.max_contracts));
    set(kTSpendingMax, b.max_spending);
    set(kRAD, risk.rad);
    set(kFav, risk.fav);
    set(kCPW, risk.cpw);
    set(kSPW, risk.spw);
  }
  return Dataset(contract_feature_schema(), std::move(columns), std::vector<Label>(labels.begin(), labels.end()));
}

inline Dataset build_features(std::span<const ContractRecord> records, std::span<const Label> labels) {
  const auto pairs = compute_pair_aggregates(records);
  return assemble_features(records, labels, pairs, compute_buyer_maxima(pairs));
}

}  // namespace hyperforest
