#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "hyperforest/error.hpp"
#include "hyperforest/text.hpp"

namespace hyperforest {

/// Class label. NC (non-corrupt) is the positive class everywhere.
enum class Label : std::uint8_t { C = 0, NC = 1 };

inline std::string_view to_string(Label label) { return label == Label::NC ? "NC" : "C"; }

inline std::optional<Label> parse_label(std::string_view text) {
  text = trim(text);
  if (text == "NC") return Label::NC;
  if (text == "C") return Label::C;
  return std::nullopt;
}

/// Enumerated codes of the five categorical contract fields, in the order
/// used by ContractRecord and the feature schema.
struct CategoricalDomain {
  std::string_view field;
  std::string_view feature;
  std::array<std::string_view, 5> codes;
  std::size_t count;
};

inline constexpr std::array<CategoricalDomain, 5> kCategoricalDomains{{
    {"government_order", "GO", {"APF", "GE", "GM"}, 3},
    {"procedure_character", "PC", {"N", "I", "ITLC"}, 3},
    {"contract_type", "CT", {"OP", "S", "ADQ", "AR", "SLAOP"}, 5},
    {"procedure_type", "PT", {"AD", "LP", "I3P"}, 3},
    {"supplier_size", "S", {"MIC", "PEQ", "MED", "NOM", "NA"}, 5},
}};

enum CategoricalField : std::size_t {
  kGovernmentOrder = 0,
  kProcedureCharacter,
  kContractType,
  kProcedureType,
  kSupplierSize,
};

/// Index of the single-bidder ("AD") code within procedure_type.
inline constexpr std::uint8_t kDirectAward = 0;

inline std::optional<std::uint8_t> parse_code(CategoricalField field, std::string_view raw) {
  const std::string code = normalize_string(raw);
  const auto& domain = kCategoricalDomains[field];
  for (std::size_t i = 0; i < domain.count; ++i) {
    if (domain.codes[i] == code) return static_cast<std::uint8_t>(i);
  }
  return std::nullopt;
}

struct Date {
  int year = 0;
  int month = 0;
  int day = 0;

  friend bool operator==(const Date&, const Date&) = default;
};

inline bool is_leap_year(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

inline int days_in_month(int year, int month) {
  static constexpr int kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return month == 2 && is_leap_year(year) ? 29 : kDays[month - 1];
}

/// ISO weeks in a year: 53 when Jan 1 is a Thursday, or a Wednesday in a leap year.
inline int iso_weeks_in_year(int year) {
  // Sakamoto's day-of-week for Jan 1, 0 = Sunday.
  const int y = year - 1;
  const int jan1 = (y + y / 4 - y / 100 + y / 400 + 1) % 7;
  return (jan1 == 4 || (jan1 == 3 && is_leap_year(year))) ? 53 : 52;
}

/// Accepts YYYY-MM-DD, optionally followed by a time part.
inline std::optional<Date> parse_date(std::string_view text) {
  text = trim(text);
  if (text.size() > 10 && (text[10] == 'T' || text[10] == ' ')) text = text.substr(0, 10);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  const auto year = parse_int<int>(text.substr(0, 4));
  const auto month = parse_int<int>(text.substr(5, 2));
  const auto day = parse_int<int>(text.substr(8, 2));
  if (!year || !month || !day) return std::nullopt;
  if (*month < 1 || *month > 12 || *day < 1 || *day > days_in_month(*year, *month)) return std::nullopt;
  return Date{*year, *month, *day};
}

/// One curated contract row.
struct ContractRecord {
  std::string buyer_id;
  std::string supplier_id;
  std::array<std::uint8_t, 5> codes{};  // indexed by CategoricalField
  Date start_date;
  int beginning_week = 1;
  int ending_week = 1;
  double spending = 0.0;

  std::uint8_t code(CategoricalField field) const { return codes[field]; }
  int year() const { return start_date.year; }
};

/// Raw field map of one input line, keyed by canonical field name.
using RawRow = std::map<std::string, std::string, std::less<>>;

/// Canonical field names, in the order validation inspects them.
inline constexpr std::array<std::string_view, 11> kRecordFields{
    "buyer_id",     "supplier_id", "government_order", "procedure_character",
    "contract_type", "procedure_type", "supplier_size", "start_date",
    "beginning_week", "ending_week", "spending"};

struct Rejection {
  ErrorCode reason;
  std::string field;

  friend bool operator==(const Rejection&, const Rejection&) = default;
};

/// Builds a ContractRecord, or names the first field that breaks an invariant.
inline std::variant<ContractRecord, Rejection> validate_record(const RawRow& row) {
  auto field_text = [&](std::string_view name) -> std::optional<std::string_view> {
    const auto it = row.find(name);
    if (it == row.end() || trim(it->second).empty()) return std::nullopt;
    return std::string_view(it->second);
  };

  ContractRecord record;
  for (const std::string_view name : kRecordFields) {
    const auto text = field_text(name);
    if (!text) return Rejection{ErrorCode::MissingField, std::string(name)};
    const std::string field(name);

    if (name == "buyer_id" || name == "supplier_id") {
      std::string id = normalize_string(*text);
      if (id.empty()) return Rejection{ErrorCode::MissingField, field};
      (name == "buyer_id" ? record.buyer_id : record.supplier_id) = std::move(id);
    } else if (name == "start_date") {
      const auto date = parse_date(*text);
      if (!date) return Rejection{ErrorCode::BadDate, field};
      record.start_date = *date;
    } else if (name == "beginning_week" || name == "ending_week") {
      const auto week = parse_int<int>(*text);
      if (!week || *week < 1 || *week > 53) return Rejection{ErrorCode::BadWeek, field};
      (name == "beginning_week" ? record.beginning_week : record.ending_week) = *week;
    } else if (name == "spending") {
      const auto value = parse_double(*text);
      if (!value || !std::isfinite(*value)) return Rejection{ErrorCode::MissingField, field};
      if (*value < 0.0) return Rejection{ErrorCode::NegativeSpending, field};
      record.spending = *value;
    } else {
      for (std::size_t f = 0; f < kCategoricalDomains.size(); ++f) {
        if (kCategoricalDomains[f].field != name) continue;
        const auto code = parse_code(static_cast<CategoricalField>(f), *text);
        if (!code) return Rejection{ErrorCode::BadCategoricalCode, field};
        record.codes[f] = *code;
      }
    }
  }
  return record;
}

}  // namespace hyperforest
