#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hyperforest/dataset.hpp"
#include "hyperforest/io.hpp"

namespace testing_support {

namespace hf = hyperforest;

/// Numeric dataset from row-major values; names f0, f1, ...
inline hf::Dataset numeric_dataset(const std::vector<std::vector<double>>& rows, const std::vector<hf::Label>& labels) {
  const std::size_t p = rows.empty() ? 0 : rows[0].size();
  std::vector<hf::FeatureSpec> specs;
  for (std::size_t f = 0; f < p; ++f) specs.push_back({"f" + std::to_string(f), hf::FeatureKind::Numeric, {}});
  std::vector<std::vector<double>> columns(p, std::vector<double>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t f = 0; f < p; ++f) columns[f][r] = rows[r][f];
  }
  return hf::Dataset(hf::FeatureSchema(std::move(specs)), std::move(columns), labels);
}

inline std::vector<std::uint32_t> all_rows(std::size_t n) {
  std::vector<std::uint32_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::uint32_t>(i);
  return rows;
}

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("hyperforest_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// 1-D planted set: NC iff x > 0, plus label-independent noise columns.
inline hf::Dataset planted_1d(std::size_t n, std::size_t noise, std::uint64_t seed, double nc_share = 0.5) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  std::vector<hf::Label> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const bool nc = unit(gen) < nc_share;
    std::vector<double> row{(nc ? 1.0 : -1.0) + 0.3 * normal(gen)};
    for (std::size_t k = 0; k < noise; ++k) row.push_back(normal(gen));
    rows.push_back(std::move(row));
    labels.push_back(nc ? hf::Label::NC : hf::Label::C);
  }
  return numeric_dataset(rows, labels);
}

}  // namespace testing_support
