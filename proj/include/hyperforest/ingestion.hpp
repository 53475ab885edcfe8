#pragma once

// Contract files, corrupt-company registries, curation and labeling.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hyperforest/contracts.hpp"
#include "hyperforest/error.hpp"
#include "hyperforest/io.hpp"
#include "hyperforest/text.hpp"

namespace hyperforest {

/// Canonical field name -> input column header. Fields absent from the map
/// are looked up under their canonical name.
using ColumnMap = std::map<std::string, std::string, std::less<>>;

/// Year -> currency multiplier. Empty means no conversion.
using PppTable = std::map<int, double>;

inline constexpr double kDefaultMaxRejectRate = 0.25;

struct CurationReport {
  std::size_t total = 0;
  std::size_t accepted = 0;
  std::map<std::string, std::size_t> rejected;  // "Reason:field" -> rows

  std::size_t rejected_total() const {
    std::size_t n = 0;
    for (const auto& [key, count] : rejected) n += count;
    return n;
  }

  void reject(ErrorCode reason, std::string_view field) {
    ++rejected[std::string(to_string(reason)) + ":" + std::string(field)];
  }

  double reject_rate() const { return total == 0 ? 0.0 : static_cast<double>(rejected_total()) / static_cast<double>(total); }

  /// item / count table.
  std::string to_tsv() const {
    TsvWriter out({"item", "count"});
    out.row("total", total);
    out.row("accepted", accepted);
    out.row("rejected", rejected_total());
    for (const auto& [key, count] : rejected) out.row("rejected:" + key, count);
    return out.text();
  }
};

struct ParsedContracts {
  std::vector<RawRow> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row
  CurationReport report;           // total and ParseError counts only
};

/// Tab when the header holds one, comma otherwise.
inline char detect_delimiter(std::string_view header) { return header.find('\t') != std::string_view::npos ? '\t' : ','; }

/// Reads a delimited contract table. Lines whose field count differs from
/// the header are counted as ParseError and skipped.
inline ParsedContracts parse_contracts(const fs::path& path, const ColumnMap& columns = {}) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::UnreadableHeader, path.string() + " is empty");
  strip_bom(line);
  strip_cr(line);
  if (trim(line).empty()) throw Error(ErrorCode::UnreadableHeader, path.string() + " has a blank header");
  const char delimiter = detect_delimiter(line);
  const auto header = split_delimited(line, delimiter);
  if (!header) throw Error(ErrorCode::UnreadableHeader, path.string() + ": unterminated quote in header");

  std::vector<std::pair<std::string, std::size_t>> wanted;  // canonical name, column
  for (const std::string_view field : kRecordFields) {
    const auto mapped = columns.find(field);
    const std::string name = mapped == columns.end() ? std::string(field) : mapped->second;
    const auto it = std::find_if(header->begin(), header->end(), [&](const std::string& h) { return trim(h) == name; });
    if (it == header->end()) {
      throw Error(ErrorCode::UnreadableHeader, path.string() + ": no column '" + name + "' for field " + std::string(field));
    }
    wanted.emplace_back(std::string(field), static_cast<std::size_t>(it - header->begin()));
  }

  ParsedContracts out;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    strip_cr(line);
    if (trim(line).empty()) continue;
    ++out.report.total;
    const auto cells = split_delimited(line, delimiter);
    if (!cells || cells->size() != header->size()) {
      out.report.reject(ErrorCode::ParseError, "line " + std::to_string(line_number));
      continue;
    }
    RawRow row;
    for (const auto& [field, column] : wanted) row.emplace(field, (*cells)[column]);
    out.rows.push_back(std::move(row));
    out.lines.push_back(line_number);
  }
  return out;
}

inline ContractRecord convert_spending(ContractRecord record, const PppTable& ppp) {
  if (ppp.empty()) return record;
  const auto it = ppp.find(record.year());
  if (it == ppp.end()) {
    throw Error(ErrorCode::MissingYearFactor, "no currency factor for year " + std::to_string(record.year()));
  }
  record.spending *= it->second;
  return record;
}

enum class RegistrySource : std::uint8_t { TaxAgency = 1, OpenData = 2, Both = 3 };

inline std::string_view to_string(RegistrySource s) {
  switch (s) {
    case RegistrySource::TaxAgency: return "tax-agency";
    case RegistrySource::OpenData: return "open-data";
    case RegistrySource::Both: return "both";
  }
  return "?";
}

inline std::optional<RegistrySource> parse_registry_source(std::string_view text) {
  for (const auto s : {RegistrySource::TaxAgency, RegistrySource::OpenData, RegistrySource::Both}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

struct RegistryFile {
  fs::path path;
  RegistrySource source = RegistrySource::TaxAgency;
  std::optional<std::string> column;  // header of the name column; none for one name per line
};

class CorruptRegistry {
 public:
  void add(std::string_view raw_name, RegistrySource source) {
    std::string name = normalize_string(raw_name);
    if (name.empty()) return;
    auto [it, inserted] = entries_.emplace(std::move(name), source);
    if (!inserted) it->second = static_cast<RegistrySource>(static_cast<std::uint8_t>(it->second) | static_cast<std::uint8_t>(source));
  }

  /// `supplier_id` must already be normalized.
  bool contains(std::string_view supplier_id) const { return entries_.find(supplier_id) != entries_.end(); }
  std::optional<RegistrySource> source(std::string_view name) const {
    const auto it = entries_.find(name);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::map<std::string, RegistrySource, std::less<>>& entries() const { return entries_; }

 private:
  std::map<std::string, RegistrySource, std::less<>> entries_;
};

/// Union of the registry files after name normalization. Problems that do
/// not stop loading are appended to `warnings`.
inline CorruptRegistry load_corrupt_registry(std::span<const RegistryFile> files,
                                             std::vector<std::string>* warnings = nullptr) {
  auto warn = [&](std::string message) {
    if (warnings) warnings->push_back(std::move(message));
  };
  CorruptRegistry registry;
  if (files.empty()) warn("EmptyRegistry: no registry files given, every contract will be labeled NC");
  for (const auto& file : files) {
    std::istringstream in(read_file(file.path));
    std::string line;
    std::optional<std::size_t> column;
    char delimiter = ',';
    if (file.column) {
      if (!std::getline(in, line)) throw Error(ErrorCode::UnreadableHeader, file.path.string() + " is empty");
      strip_bom(line);
      strip_cr(line);
      delimiter = detect_delimiter(line);
      const auto header = split_delimited(line, delimiter);
      if (header) {
        const auto it = std::find_if(header->begin(), header->end(),
                                     [&](const std::string& h) { return trim(h) == *file.column; });
        if (it != header->end()) column = static_cast<std::size_t>(it - header->begin());
      }
      if (!column) throw Error(ErrorCode::UnreadableHeader, file.path.string() + ": no column '" + *file.column + "'");
    }
    std::size_t line_number = file.column ? 1 : 0;
    const std::size_t before = registry.size();
    bool first = true;
    while (std::getline(in, line)) {
      ++line_number;
      if (first && !file.column) strip_bom(line);
      first = false;
      strip_cr(line);
      if (trim(line).empty()) continue;
      if (!column) {
        registry.add(line, file.source);
        continue;
      }
      const auto cells = split_delimited(line, delimiter);
      if (!cells || *column >= cells->size()) {
        warn(file.path.string() + ":" + std::to_string(line_number) + ": skipped malformed line");
        continue;
      }
      registry.add((*cells)[*column], file.source);
    }
    if (registry.size() == before) warn("EmptyRegistry: " + file.path.string() + " added no names");
  }
  return registry;
}

/// C iff the supplier is listed, whatever the contract date.
inline std::vector<Label> label_dataset(std::span<const ContractRecord> records, const CorruptRegistry& registry) {
  std::vector<Label> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(registry.contains(r.supplier_id) ? Label::C : Label::NC);
  return labels;
}

struct CuratedContracts {
  std::vector<ContractRecord> records;
  CurationReport report;
};

/// Validates and converts parsed rows. Buyer-years with zero total spending
/// are rejected as DegenerateBuyer, since their favoritism ratio is undefined.
/// Throws RejectRateExceeded past `max_reject_rate`; the report is still
/// available through `report_out`.
inline CuratedContracts curate(const ParsedContracts& parsed, const PppTable& ppp,
                               double max_reject_rate = kDefaultMaxRejectRate, CurationReport* report_out = nullptr) {
  CuratedContracts out;
  out.report = parsed.report;
  std::vector<ContractRecord> valid;
  for (const auto& row : parsed.rows) {
    auto result = validate_record(row);
    if (const auto* rejection = std::get_if<Rejection>(&result)) {
      out.report.reject(rejection->reason, rejection->field);
      continue;
    }
    auto record = std::get<ContractRecord>(std::move(result));
    try {
      valid.push_back(convert_spending(std::move(record), ppp));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingYearFactor) throw;
      out.report.reject(ErrorCode::MissingYearFactor, "start_date");
    }
  }

  std::map<std::pair<std::string, int>, double> buyer_spending;
  for (const auto& r : valid) buyer_spending[{r.buyer_id, r.year()}] += r.spending;
  for (auto& r : valid) {
    if (buyer_spending.at({r.buyer_id, r.year()}) > 0.0) {
      out.records.push_back(std::move(r));
    } else {
      out.report.reject(ErrorCode::DegenerateBuyer, "spending");
    }
  }
  out.report.accepted = out.records.size();
  if (report_out) *report_out = out.report;
  if (out.report.reject_rate() > max_reject_rate) {
    throw Error(ErrorCode::RejectRateExceeded,
                std::to_string(out.report.rejected_total()) + " of " + std::to_string(out.report.total) +
                    " rows rejected, above the limit of " + format_double(max_reject_rate));
  }
  return out;
}

}  // namespace hyperforest
