#pragma once

// Files on disk: tab-separated tables, the labeled dataset with its schema
// sidecar, and split index lists.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperforest/checksum.hpp"
#include "hyperforest/contracts.hpp"
#include "hyperforest/dataset.hpp"
#include "hyperforest/error.hpp"
#include "hyperforest/text.hpp"

namespace hyperforest {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// Writes through a temporary file and renames, so readers never see half a file.
inline void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::FileNotFound, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::FileNotFound, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

/// Tab-separated table builder.
class TsvWriter {
 public:
  explicit TsvWriter(std::vector<std::string> header) : width_(header.size()) { append(header); }

  template <class... Cells>
  void row(const Cells&... cells) {
    std::vector<std::string> out{cell(cells)...};
    append(out);
  }

  void append(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw Error(ErrorCode::InvariantViolation, "TSV row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_.push_back('\t');
      text_ += cells[i];
    }
    text_.push_back('\n');
  }

  const std::string& text() const { return text_; }
  void save(const fs::path& path) const { write_file(path, text_); }

  static std::string cell(const std::string& s) { return s; }
  static std::string cell(std::string_view s) { return std::string(s); }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }
  template <class Int>
    requires std::is_integral_v<Int>
  static std::string cell(Int v) {
    return std::to_string(v);
  }

 private:
  std::size_t width_;
  std::string text_;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  }
};

/// Reads a strict tab-separated table: header row required, every row the
/// header's width.
inline Table read_tsv(const fs::path& path) {
  std::istringstream in(read_file(path));
  Table table;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::UnreadableHeader, path.string() + " is empty");
  strip_bom(line);
  strip_cr(line);
  for (const auto cell : split_view(line, '\t')) table.header.emplace_back(cell);
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    strip_cr(line);
    if (line.empty()) continue;
    auto cells = split_view(line, '\t');
    if (cells.size() != table.header.size()) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_number) + ": expected " +
                                             std::to_string(table.header.size()) + " fields, found " +
                                             std::to_string(cells.size()));
    }
    table.rows.emplace_back(cells.begin(), cells.end());
  }
  return table;
}

inline constexpr std::string_view kLabelColumn = "label";

inline fs::path schema_sidecar(const fs::path& dataset) { return dataset.string() + ".schema.json"; }

inline nlohmann::json schema_to_json(const FeatureSchema& schema) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : schema.features()) {
    nlohmann::json entry{{"name", f.name}, {"kind", f.categorical() ? "categorical" : "numeric"}};
    if (f.categorical()) entry["levels"] = f.levels;
    features.push_back(std::move(entry));
  }
  return {{"format", "hyperforest-schema"}, {"version", 1}, {"features", std::move(features)}};
}

inline FeatureSchema schema_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != "hyperforest-schema" || doc.at("version") != 1) {
      throw Error(ErrorCode::VersionMismatch, "unsupported schema document");
    }
    std::vector<FeatureSpec> specs;
    for (const auto& entry : doc.at("features")) {
      FeatureSpec spec;
      spec.name = entry.at("name").get<std::string>();
      const auto kind = entry.at("kind").get<std::string>();
      if (kind == "categorical") {
        spec.kind = FeatureKind::Categorical;
        spec.levels = entry.at("levels").get<std::vector<std::string>>();
      } else if (kind != "numeric") {
        throw Error(ErrorCode::SchemaMismatch, "unknown feature kind '" + kind + "'");
      }
      specs.push_back(std::move(spec));
    }
    return FeatureSchema(std::move(specs));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("malformed schema: ") + e.what());
  }
}

/// Canonical text of a dataset: header of feature names plus "label".
inline std::string dataset_text(const Dataset& data) {
  std::vector<std::string> header;
  for (const auto& f : data.schema().features()) header.push_back(f.name);
  header.emplace_back(kLabelColumn);
  TsvWriter out(header);
  std::vector<std::string> cells(header.size());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t f = 0; f < data.features(); ++f) {
      const auto& spec = data.schema()[f];
      const double v = data.value(r, f);
      cells[f] = spec.categorical() ? spec.levels.at(static_cast<std::size_t>(v)) : format_double(v);
    }
    cells.back() = std::string(to_string(data.label(r)));
    out.append(cells);
  }
  return out.text();
}

inline std::string dataset_fingerprint(const Dataset& data) { return sha256_hex(dataset_text(data)); }

inline void write_dataset(const fs::path& path, const Dataset& data) {
  write_file(schema_sidecar(path), schema_to_json(data.schema()).dump(2) + "\n");
  write_file(path, dataset_text(data));
}

namespace detail {

/// Columns whose values all parse as numbers are numeric; the rest are
/// categorical with lexicographically sorted levels.
inline FeatureSchema infer_schema(const Table& table, std::span<const std::size_t> columns) {
  std::vector<FeatureSpec> specs;
  for (const auto c : columns) {
    FeatureSpec spec;
    spec.name = table.header[c];
    std::set<std::string> levels;
    bool numeric = true;
    for (const auto& row : table.rows) {
      if (numeric && !parse_double(row[c])) numeric = false;
      levels.insert(row[c]);
    }
    if (!numeric) {
      spec.kind = FeatureKind::Categorical;
      spec.levels.assign(levels.begin(), levels.end());
    }
    specs.push_back(std::move(spec));
  }
  return FeatureSchema(std::move(specs));
}

inline double encode_cell(const FeatureSpec& spec, const std::string& text, bool allow_unseen, const fs::path& path,
                          std::size_t row) {
  if (spec.categorical()) {
    const double code = spec.encode(text);
    if (code == kUnseenLevel && !allow_unseen) {
      throw Error(ErrorCode::SchemaMismatch, path.string() + ": row " + std::to_string(row + 1) + ": level '" + text +
                                                 "' is not declared for feature '" + spec.name + "'");
    }
    return code;
  }
  const auto value = parse_double(text);
  if (!value) {
    throw Error(ErrorCode::ParseError, path.string() + ": row " + std::to_string(row + 1) + ": '" + text +
                                           "' is not a number for feature '" + spec.name + "'");
  }
  return *value;
}

}  // namespace detail

/// Loads a labeled dataset. The schema comes from the sidecar when present,
/// otherwise it is inferred from the values.
inline Dataset read_dataset(const fs::path& path) {
  const Table table = read_tsv(path);
  const auto label_column = table.column(kLabelColumn);
  if (!label_column) throw Error(ErrorCode::UnreadableHeader, path.string() + " has no 'label' column");

  std::vector<std::size_t> feature_columns;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c != *label_column) feature_columns.push_back(c);
  }

  FeatureSchema schema;
  const auto sidecar = schema_sidecar(path);
  if (fs::exists(sidecar)) {
    schema = schema_from_json(nlohmann::json::parse(read_file(sidecar), nullptr, true));
    if (schema.size() != feature_columns.size()) {
      throw Error(ErrorCode::SchemaMismatch, "schema sidecar and header disagree on the feature count");
    }
    for (std::size_t i = 0; i < feature_columns.size(); ++i) {
      if (table.header[feature_columns[i]] != schema[i].name) {
        throw Error(ErrorCode::SchemaMismatch, "header column '" + table.header[feature_columns[i]] +
                                                   "' does not match schema feature '" + schema[i].name + "'");
      }
    }
  } else {
    schema = detail::infer_schema(table, feature_columns);
  }

  std::vector<std::vector<double>> columns(schema.size(), std::vector<double>(table.rows.size()));
  std::vector<Label> labels(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto label = parse_label(row[*label_column]);
    if (!label) throw Error(ErrorCode::ParseError, path.string() + ": row " + std::to_string(r + 1) + ": bad label");
    labels[r] = *label;
    for (std::size_t i = 0; i < feature_columns.size(); ++i) {
      columns[i][r] = detail::encode_cell(schema[i], row[feature_columns[i]], false, path, r);
    }
  }
  return Dataset(std::move(schema), std::move(columns), std::move(labels));
}

/// Feature rows located by column name against a model schema. Unknown
/// categorical levels encode as kUnseenLevel; extra columns are ignored.
struct ScoringInput {
  std::vector<std::vector<double>> rows;
  std::vector<std::optional<Label>> labels;
};

inline ScoringInput read_scoring_rows(const Table& table, const FeatureSchema& schema, const fs::path& path) {
  std::vector<std::size_t> columns;
  for (const auto& f : schema.features()) {
    const auto c = table.column(f.name);
    if (!c) throw Error(ErrorCode::SchemaMismatch, path.string() + " lacks feature column '" + f.name + "'");
    columns.push_back(*c);
  }
  const auto label_column = table.column(kLabelColumn);
  ScoringInput input;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::vector<double> row(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
      row[i] = detail::encode_cell(schema[i], table.rows[r][columns[i]], true, path, r);
    }
    input.rows.push_back(std::move(row));
    input.labels.push_back(label_column ? parse_label(table.rows[r][*label_column]) : std::nullopt);
  }
  return input;
}

inline void write_indices(const fs::path& path, std::span<const std::uint32_t> indices) {
  std::string text;
  for (const auto i : indices) {
    text += std::to_string(i);
    text.push_back('\n');
  }
  write_file(path, text);
}

inline std::vector<std::uint32_t> read_indices(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::uint32_t> out;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (trim(line).empty()) continue;
    const auto value = parse_int<std::uint32_t>(line);
    if (!value) throw Error(ErrorCode::ParseError, path.string() + ": bad index '" + line + "'");
    out.push_back(*value);
  }
  return out;
}

}  // namespace hyperforest
