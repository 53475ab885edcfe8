#pragma once

// Seeded synthetic data. The feature-table generator plants the class signal
// in relationship and risk columns and leaves contract columns as noise; the
// raw generator writes contracts plus a registry for the ingestion path.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hyperforest/contracts.hpp"
#include "hyperforest/dataset.hpp"
#include "hyperforest/error.hpp"
#include "hyperforest/io.hpp"
#include "hyperforest/random.hpp"

namespace hyperforest {

struct SynthParams {
  std::size_t rows = 4600;
  double ratio = 45.0;  // NC : C
  std::size_t informative = 4;
  std::size_t noise = 6;
  std::size_t constant = 0;
  double signal = 3.0;      // shift of a C row's dominant planted column, in SDs
  double background = 0.5;  // shift of every planted column for C rows
  std::uint64_t seed = 0;

  void validate() const {
    if (rows < 2) throw Error(ErrorCode::ConfigError, "synth needs at least 2 rows");
    if (!(ratio >= 1.0) || !std::isfinite(ratio)) throw Error(ErrorCode::ConfigError, "synth ratio must be >= 1");
    if (informative + noise + constant == 0) throw Error(ErrorCode::ConfigError, "synth needs at least one feature");
  }

  /// C rows: round(rows / (1 + ratio)), at least one.
  std::size_t c_rows() const {
    const auto c = static_cast<std::size_t>(std::llround(static_cast<double>(rows) / (1.0 + ratio)));
    return std::clamp<std::size_t>(c, 1, rows - 1);
  }
};

namespace detail {

inline constexpr std::array<std::string_view, 8> kPlantedNames{"RAD", "Fav", "SPW", "T.Spending",
                                                               "CPW", "T.AD", "ActiveWeeks", "T.Cont"};
inline constexpr std::array<std::string_view, 9> kNoiseNames{"GO",       "BeginningWeek", "PC", "EndingWeek", "CT",
                                                             "Spending", "S",             "PT", "EBWeeks"};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Maps a latent score onto the range of the named column, monotonically.
inline double planted_value(std::string_view name, double z) {
  if (name == "RAD") return normal_cdf(z);
  if (name == "Fav") return 0.99 * normal_cdf(z);
  if (name == "SPW") return std::round(1000.0 * std::exp(z)) / 100.0;
  if (name == "T.Spending") return std::round(5000.0 * std::exp(z)) / 100.0;
  if (name == "CPW") return 1.0 + std::exp(z);
  if (name == "T.AD" || name == "ActiveWeeks" || name == "T.Cont") return std::floor(4.0 * std::exp(z / 2.0)) + 1.0;
  return z;
}

inline std::optional<CategoricalField> categorical_noise(std::string_view name) {
  for (std::size_t f = 0; f < kCategoricalDomains.size(); ++f) {
    if (kCategoricalDomains[f].feature == name) return static_cast<CategoricalField>(f);
  }
  return std::nullopt;
}

inline double noise_value(std::string_view name, Rng& rng) {
  if (const auto field = categorical_noise(name)) {
    return static_cast<double>(uniform_index(rng, kCategoricalDomains[*field].count));
  }
  if (name == "BeginningWeek" || name == "EndingWeek") return static_cast<double>(1 + uniform_index(rng, 52));
  if (name == "EBWeeks") return static_cast<double>(uniform_index(rng, 21));
  if (name == "Spending") return std::round(100000.0 * std::exp(standard_normal(rng))) / 100.0;
  return standard_normal(rng);
}

}  // namespace detail

/// Column names in output order: noise, planted, constant.
inline FeatureSchema synth_schema(const SynthParams& params) {
  std::vector<FeatureSpec> specs;
  for (std::size_t i = 0; i < params.noise; ++i) {
    const std::string name = i < detail::kNoiseNames.size() ? std::string(detail::kNoiseNames[i])
                                                            : "noise_" + std::to_string(i - detail::kNoiseNames.size() + 1);
    FeatureSpec spec{name, FeatureKind::Numeric, {}};
    if (const auto field = detail::categorical_noise(name)) {
      spec.kind = FeatureKind::Categorical;
      for (std::size_t l = 0; l < kCategoricalDomains[*field].count; ++l) {
        spec.levels.emplace_back(kCategoricalDomains[*field].codes[l]);
      }
    }
    specs.push_back(std::move(spec));
  }
  for (std::size_t i = 0; i < params.informative; ++i) {
    specs.push_back({i < detail::kPlantedNames.size() ? std::string(detail::kPlantedNames[i])
                                                      : "signal_" + std::to_string(i - detail::kPlantedNames.size() + 1),
                     FeatureKind::Numeric,
                     {}});
  }
  for (std::size_t i = 0; i < params.constant; ++i) {
    specs.push_back({"constant_" + std::to_string(i + 1), FeatureKind::Numeric, {}});
  }
  return FeatureSchema(std::move(specs));
}

/// Labeled feature table. NC rows draw every planted latent from N(0, 1);
/// C rows add `background` to all of them and `signal` to one planted
/// column chosen at random, so each planted column identifies its own
/// share of the C rows.
inline Dataset synth_dataset(const SynthParams& params) {
  params.validate();
  const FeatureSchema schema = synth_schema(params);
  Rng rng(params.seed);

  std::vector<Label> labels(params.rows, Label::NC);
  std::fill_n(labels.begin(), params.c_rows(), Label::C);
  shuffle(std::span<Label>(labels), rng);

  std::vector<std::vector<double>> columns(schema.size(), std::vector<double>(params.rows));
  const std::size_t planted_begin = params.noise;
  const std::size_t constant_begin = params.noise + params.informative;
  for (std::size_t r = 0; r < params.rows; ++r) {
    const bool corrupt = labels[r] == Label::C;
    const std::size_t dominant = params.informative > 0 && corrupt ? uniform_index(rng, params.informative) : 0;
    for (std::size_t i = 0; i < params.informative; ++i) {
      double z = standard_normal(rng);
      if (corrupt) z += params.background + (i == dominant ? params.signal : 0.0);
      columns[planted_begin + i][r] = detail::planted_value(schema[planted_begin + i].name, z);
    }
    for (std::size_t i = 0; i < params.noise; ++i) columns[i][r] = detail::noise_value(schema[i].name, rng);
    for (std::size_t i = constant_begin; i < schema.size(); ++i) columns[i][r] = 1.0;
  }
  return Dataset(schema, std::move(columns), std::move(labels));
}

struct RawSynth {
  std::string contracts_csv;  // canonical field names as header
  std::string registry_txt;   // one supplier name per line
  std::size_t c_contracts = 0;
};

/// Raw contracts for the ingestion path. Listed suppliers work with few
/// buyers, win mostly single-bidder awards and take larger amounts. Some
/// registry names carry accents and punctuation that normalize away.
inline RawSynth synth_contracts(const SynthParams& params) {
  params.validate();
  Rng rng(params.seed);
  const std::size_t n = params.rows;
  const std::size_t n_c = params.c_rows();
  const std::size_t buyers = std::max<std::size_t>(4, n / 150);
  const std::size_t clean_suppliers = std::max<std::size_t>(8, n / 12);
  const std::size_t corrupt_suppliers = std::max<std::size_t>(1, n_c / 15);

  auto buyer_name = [](std::size_t b) { return "Dependencia " + std::to_string(b + 1); };
  auto clean_name = [](std::size_t s) { return "Proveedor Limpio " + std::to_string(s + 1) + " SA de CV"; };
  auto corrupt_name = [](std::size_t s) { return "Empresa Fantasma " + std::to_string(s + 1) + " SA de CV"; };

  RawSynth out;
  out.c_contracts = n_c;
  for (std::size_t s = 0; s < corrupt_suppliers; ++s) {
    // Every third listing is written the way a registry might spell it.
    out.registry_txt += (s % 3 == 0 ? "  empresa  fantasmá " + std::to_string(s + 1) + ", S.A. de C.V." : corrupt_name(s));
    out.registry_txt += "\n";
  }

  std::vector<char> corrupt(n, 0);
  std::fill_n(corrupt.begin(), n_c, 1);
  shuffle(std::span<char>(corrupt), rng);

  static constexpr std::array<std::string_view, 11> kHeader{
      "buyer_id", "supplier_id", "government_order", "procedure_character", "contract_type", "procedure_type",
      "supplier_size", "start_date", "beginning_week", "ending_week", "spending"};
  for (std::size_t i = 0; i < kHeader.size(); ++i) out.contracts_csv += (i ? "," : "") + std::string(kHeader[i]);
  out.contracts_csv += "\n";

  auto pick = [&](CategoricalField f) {
    return std::string(kCategoricalDomains[f].codes[uniform_index(rng, kCategoricalDomains[f].count)]);
  };
  for (std::size_t i = 0; i < n; ++i) {
    const bool c = corrupt[i] != 0;
    std::size_t buyer = 0;
    std::string supplier;
    if (c) {
      const std::size_t s = uniform_index(rng, corrupt_suppliers);
      buyer = (s * 7 + uniform_index(rng, 2)) % buyers;
      supplier = corrupt_name(s);
    } else {
      buyer = uniform_index(rng, buyers);
      supplier = clean_name(uniform_index(rng, clean_suppliers));
    }
    const int year = 2015 + static_cast<int>(uniform_index(rng, 4));
    const int begin = 1 + static_cast<int>(uniform_index(rng, 52));
    const int end = 1 + static_cast<int>((begin - 1 + static_cast<int>(uniform_index(rng, 12))) % 52);
    const double amount = std::round(100.0 * std::exp(standard_normal(rng) + (c ? 11.5 : 10.0))) / 100.0;
    const bool direct = uniform01(rng) < (c ? 0.9 : 0.45);
    const int month = 1 + static_cast<int>(uniform_index(rng, 12));
    const int day = 1 + static_cast<int>(uniform_index(rng, 28));
    char date[16];
    std::snprintf(date, sizeof date, "%04d-%02d-%02d", year, month, day);

    std::string line = buyer_name(buyer) + "," + supplier + "," + pick(kGovernmentOrder) + "," +
                       pick(kProcedureCharacter) + "," + pick(kContractType) + "," +
                       (direct ? "AD" : (uniform01(rng) < 0.5 ? "LP" : "I3P")) + "," + pick(kSupplierSize) + "," +
                       date + "," + std::to_string(begin) + "," + std::to_string(end) + "," + format_double(amount);
    out.contracts_csv += line + "\n";
  }
  return out;
}

}  // namespace hyperforest
