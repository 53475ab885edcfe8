#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hyperforest/contracts.hpp"
#include "hyperforest/error.hpp"

namespace hyperforest {

enum class FeatureKind : std::uint8_t { Numeric, Categorical };

/// Upper bound on categorical cardinality; split masks are 64-bit.
inline constexpr std::size_t kMaxCategoricalLevels = 64;

/// Code stored for a categorical value that is not among the known levels.
inline constexpr double kUnseenLevel = -1.0;

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::Numeric;
  std::vector<std::string> levels;  // categorical only; code = position

  bool categorical() const { return kind == FeatureKind::Categorical; }

  /// Level code for a categorical value, kUnseenLevel when unknown.
  double encode(std::string_view level) const {
    for (std::size_t i = 0; i < levels.size(); ++i) {
      if (levels[i] == level) return static_cast<double>(i);
    }
    return kUnseenLevel;
  }

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Ordered feature list; the order is the column order of every matrix and
/// model file.
class FeatureSchema {
 public:
  FeatureSchema() = default;

  explicit FeatureSchema(std::vector<FeatureSpec> features) : features_(std::move(features)) {
    std::unordered_set<std::string_view> seen;
    for (const auto& f : features_) {
      if (f.name.empty()) throw Error(ErrorCode::SchemaMismatch, "empty feature name");
      if (!seen.insert(f.name).second) {
        throw Error(ErrorCode::SchemaMismatch, "duplicate feature name '" + f.name + "'");
      }
      if (f.categorical() && (f.levels.empty() || f.levels.size() > kMaxCategoricalLevels)) {
        throw Error(ErrorCode::SchemaMismatch,
                    "categorical feature '" + f.name + "' needs 1.." +
                        std::to_string(kMaxCategoricalLevels) + " levels");
      }
    }
  }

  std::size_t size() const { return features_.size(); }
  const FeatureSpec& operator[](std::size_t i) const { return features_[i]; }
  const std::vector<FeatureSpec>& features() const { return features_; }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < features_.size(); ++i) {
      if (features_[i].name == name) return i;
    }
    return std::nullopt;
  }

  FeatureSchema select(std::span<const std::size_t> indices) const {
    std::vector<FeatureSpec> picked;
    picked.reserve(indices.size());
    for (const auto i : indices) picked.push_back(features_.at(i));
    return FeatureSchema(std::move(picked));
  }

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  std::vector<FeatureSpec> features_;
};

/// Column-major labeled feature matrix. Categorical cells hold level codes.
class Dataset {
 public:
  Dataset() = default;

  Dataset(FeatureSchema schema, std::vector<std::vector<double>> columns, std::vector<Label> labels)
      : schema_(std::move(schema)), columns_(std::move(columns)), labels_(std::move(labels)) {
    if (columns_.size() != schema_.size()) {
      throw Error(ErrorCode::SchemaMismatch, "column count does not match schema");
    }
    for (const auto& column : columns_) {
      if (column.size() != labels_.size()) {
        throw Error(ErrorCode::LengthMismatch, "column length does not match label count");
      }
    }
  }

  const FeatureSchema& schema() const { return schema_; }
  std::size_t rows() const { return labels_.size(); }
  std::size_t features() const { return columns_.size(); }

  std::span<const double> column(std::size_t feature) const { return columns_[feature]; }
  double value(std::size_t row, std::size_t feature) const { return columns_[feature][row]; }
  Label label(std::size_t row) const { return labels_[row]; }
  std::span<const Label> labels() const { return labels_; }

  std::vector<double> row(std::size_t r) const {
    std::vector<double> out(columns_.size());
    for (std::size_t f = 0; f < columns_.size(); ++f) out[f] = columns_[f][r];
    return out;
  }

  std::size_t count(Label label) const {
    std::size_t n = 0;
    for (const auto l : labels_) n += l == label;
    return n;
  }

  /// Projection onto a subset of features, in the given order.
  Dataset select_features(std::span<const std::size_t> indices) const {
    std::vector<std::vector<double>> picked;
    picked.reserve(indices.size());
    for (const auto i : indices) picked.push_back(columns_.at(i));
    return Dataset(schema_.select(indices), std::move(picked), labels_);
  }

  Dataset select_rows(std::span<const std::uint32_t> rows) const {
    std::vector<std::vector<double>> picked(columns_.size());
    std::vector<Label> labels;
    labels.reserve(rows.size());
    for (std::size_t f = 0; f < columns_.size(); ++f) {
      picked[f].reserve(rows.size());
      for (const auto r : rows) picked[f].push_back(columns_[f][r]);
    }
    for (const auto r : rows) labels.push_back(labels_[r]);
    return Dataset(schema_, std::move(picked), std::move(labels));
  }

 private:
  FeatureSchema schema_;
  std::vector<std::vector<double>> columns_;
  std::vector<Label> labels_;
};

}  // namespace hyperforest
