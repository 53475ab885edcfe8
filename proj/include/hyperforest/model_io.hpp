#pragma once

// Hyper-forest model file: versioned line-oriented text, one record per
// line, closed by a SHA-256 line covering every preceding byte.
//
//   hyperforest-model 1
//   seed <u64>
//   split <train> <calibration> <test> <seed>
//   params <trees> <features_per_split> <min_node_size> <ordering|exhaustive>
//   dataset <sha256 | ->
//   threshold <theta | unset>
//   features <p>
//   numeric <name> | categorical <name> <L> <level>...
//   forests <T>
//   forest <seed> <rows> <trees>
//   rows <row>...
//   tree <nodes>
//   L <C|NC> <c> <nc>
//   N <feature> <threshold> <left> <right> <c> <nc>
//   K <feature> <left_mask> <right_mask> <L|R> <left> <right> <c> <nc>
//   sha256 <hex>
//
// Names and levels are percent-escaped so tokens never contain whitespace.
// Out-of-bag sets are not stored; they are replayed from the tree seeds.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hyperforest/checksum.hpp"
#include "hyperforest/error.hpp"
#include "hyperforest/hyper_forest.hpp"
#include "hyperforest/io.hpp"
#include "hyperforest/text.hpp"

namespace hyperforest {

inline constexpr std::string_view kModelMagic = "hyperforest-model";
inline constexpr int kModelVersion = 1;

namespace detail {

inline std::string escape_token(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (const char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (c <= 0x20 || c == '%' || c == 0x7F) {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    } else {
      out.push_back(ch);
    }
  }
  if (out.empty()) out = "%00";
  return out;
}

inline std::string unescape_token(std::string_view s) {
  if (s == "%00") return {};
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%') {
      if (i + 2 >= s.size()) throw Error(ErrorCode::ModelFormat, "truncated escape");
      unsigned value = 0;
      const auto r = std::from_chars(s.data() + i + 1, s.data() + i + 3, value, 16);
      if (r.ec != std::errc{} || r.ptr != s.data() + i + 3) throw Error(ErrorCode::ModelFormat, "bad escape");
      out.push_back(static_cast<char>(value));
      i += 2;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, 16);
  return std::string(buf, r.ptr);
}

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  /// Next line split on single spaces; `keyword` must match the first token.
  std::vector<std::string_view> expect(std::string_view keyword) {
    auto tokens = next();
    if (tokens.empty() || tokens[0] != keyword) {
      throw Error(ErrorCode::ModelFormat,
                  "line " + std::to_string(line_) + ": expected '" + std::string(keyword) + "'");
    }
    return tokens;
  }

  std::vector<std::string_view> next() {
    if (pos_ >= text_.size()) throw Error(ErrorCode::ModelFormat, "unexpected end of model file");
    auto end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    const auto line = text_.substr(pos_, end - pos_);
    pos_ = end + 1;
    ++line_;
    return split_view(line, ' ');
  }

  bool done() const { return pos_ >= text_.size(); }
  std::size_t line() const { return line_; }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

template <class Int>
Int to_int(std::string_view token, int base = 10) {
  Int value{};
  const auto r = std::from_chars(token.data(), token.data() + token.size(), value, base);
  if (token.empty() || r.ec != std::errc{} || r.ptr != token.data() + token.size()) {
    throw Error(ErrorCode::ModelFormat, "bad integer '" + std::string(token) + "'");
  }
  return value;
}

inline double to_double(std::string_view token) {
  const auto v = parse_double(token);
  if (!v) throw Error(ErrorCode::ModelFormat, "bad number '" + std::string(token) + "'");
  return *v;
}

inline void expect_width(const std::vector<std::string_view>& tokens, std::size_t width) {
  if (tokens.size() != width) throw Error(ErrorCode::ModelFormat, "wrong field count on '" + std::string(tokens[0]) + "'");
}

}  // namespace detail

inline std::string serialize_model(const HyperForestModel& model) {
  const auto& meta = model.metadata();
  std::string out;
  auto line = [&out](const std::string& s) {
    out += s;
    out.push_back('\n');
  };
  line(std::string(kModelMagic) + " " + std::to_string(kModelVersion));
  line("seed " + std::to_string(meta.seed));
  line("split " + format_double(meta.split.train) + " " + format_double(meta.split.calibration) + " " +
       format_double(meta.split.test) + " " + std::to_string(meta.split.seed));
  line("params " + std::to_string(meta.params.trees) + " " + std::to_string(meta.params.features_per_split) + " " +
       std::to_string(meta.params.min_node_size) + " " +
       (meta.params.categorical_search == CategoricalSearch::Ordering ? "ordering" : "exhaustive"));
  line("dataset " + (meta.dataset_fingerprint.empty() ? std::string("-") : meta.dataset_fingerprint));
  line("threshold " + (model.threshold() ? format_double(*model.threshold()) : std::string("unset")));
  line("features " + std::to_string(model.schema().size()));
  for (const auto& f : model.schema().features()) {
    if (!f.categorical()) {
      line("numeric " + detail::escape_token(f.name));
      continue;
    }
    std::string s = "categorical " + detail::escape_token(f.name) + " " + std::to_string(f.levels.size());
    for (const auto& level : f.levels) s += " " + detail::escape_token(level);
    line(s);
  }
  line("forests " + std::to_string(model.size()));
  for (const auto& forest : model.forests()) {
    line("forest " + std::to_string(forest.seed()) + " " + std::to_string(forest.training_rows().size()) + " " +
         std::to_string(forest.trees().size()));
    std::string rows = "rows";
    for (const auto r : forest.training_rows()) rows += " " + std::to_string(r);
    line(rows);
    for (const auto& tree : forest.trees()) {
      line("tree " + std::to_string(tree.size()));
      for (const auto& node : tree.nodes()) {
        const std::string counts = std::to_string(node.counts.c) + " " + std::to_string(node.counts.nc);
        if (node.leaf()) {
          line("L " + std::string(to_string(node.label)) + " " + counts);
        } else if (!node.rule.categorical) {
          line("N " + std::to_string(node.rule.feature) + " " + format_double(node.rule.threshold) + " " +
               std::to_string(node.left) + " " + std::to_string(node.right) + " " + counts);
        } else {
          line("K " + std::to_string(node.rule.feature) + " " + detail::hex64(node.rule.left_levels) + " " +
               detail::hex64(node.rule.right_levels) + " " + (node.rule.heavier_left ? "L" : "R") + " " +
               std::to_string(node.left) + " " + std::to_string(node.right) + " " + counts);
        }
      }
    }
  }
  line("sha256 " + sha256_hex(out));
  return out;
}

/// Checksum recorded in a serialized model.
inline std::string model_checksum(std::string_view text) {
  const auto pos = text.rfind("\nsha256 ");
  if (pos == std::string_view::npos) throw Error(ErrorCode::ModelFormat, "no checksum line");
  return std::string(trim(text.substr(pos + 8)));
}

inline HyperForestModel parse_model(std::string_view text) {
  using namespace detail;
  const auto sum_pos = text.rfind("\nsha256 ");
  if (sum_pos == std::string_view::npos) throw Error(ErrorCode::ChecksumFailure, "no checksum line");
  const auto body = text.substr(0, sum_pos + 1);
  if (trim(text.substr(sum_pos + 8)) != sha256_hex(body)) {
    throw Error(ErrorCode::ChecksumFailure, "model contents do not match the recorded SHA-256");
  }

  LineReader in(body);
  {
    const auto t = in.next();
    if (t.size() != 2 || t[0] != kModelMagic) throw Error(ErrorCode::ModelFormat, "not a hyper-forest model");
    if (to_int<int>(t[1]) != kModelVersion) {
      throw Error(ErrorCode::VersionMismatch, "model format version " + std::string(t[1]) + " is not supported");
    }
  }
  TrainingMetadata meta;
  {
    auto t = in.expect("seed");
    expect_width(t, 2);
    meta.seed = to_int<std::uint64_t>(t[1]);
    t = in.expect("split");
    expect_width(t, 5);
    meta.split = {to_double(t[1]), to_double(t[2]), to_double(t[3]), to_int<std::uint64_t>(t[4])};
    t = in.expect("params");
    expect_width(t, 5);
    meta.params.trees = to_int<std::size_t>(t[1]);
    meta.params.features_per_split = to_int<std::size_t>(t[2]);
    meta.params.min_node_size = to_int<std::size_t>(t[3]);
    if (t[4] == "ordering") {
      meta.params.categorical_search = CategoricalSearch::Ordering;
    } else if (t[4] == "exhaustive") {
      meta.params.categorical_search = CategoricalSearch::Exhaustive;
    } else {
      throw Error(ErrorCode::ModelFormat, "unknown categorical search");
    }
    t = in.expect("dataset");
    expect_width(t, 2);
    if (t[1] != "-") meta.dataset_fingerprint = std::string(t[1]);
  }
  std::optional<double> threshold;
  {
    const auto t = in.expect("threshold");
    expect_width(t, 2);
    if (t[1] != "unset") threshold = to_double(t[1]);
  }

  std::vector<FeatureSpec> specs;
  {
    const auto t = in.expect("features");
    expect_width(t, 2);
    const auto p = to_int<std::size_t>(t[1]);
    for (std::size_t i = 0; i < p; ++i) {
      const auto f = in.next();
      FeatureSpec spec;
      if (f.size() == 2 && f[0] == "numeric") {
        spec.name = unescape_token(f[1]);
      } else if (f.size() >= 3 && f[0] == "categorical") {
        spec.name = unescape_token(f[1]);
        spec.kind = FeatureKind::Categorical;
        const auto levels = to_int<std::size_t>(f[2]);
        if (f.size() != 3 + levels) throw Error(ErrorCode::ModelFormat, "level count mismatch");
        for (std::size_t l = 0; l < levels; ++l) spec.levels.push_back(unescape_token(f[3 + l]));
      } else {
        throw Error(ErrorCode::ModelFormat, "line " + std::to_string(in.line()) + ": bad feature record");
      }
      specs.push_back(std::move(spec));
    }
  }
  FeatureSchema schema(std::move(specs));

  const auto t_forests = in.expect("forests");
  expect_width(t_forests, 2);
  const auto forest_count = to_int<std::size_t>(t_forests[1]);
  std::vector<ForestModel> forests;
  forests.reserve(forest_count);
  for (std::size_t k = 0; k < forest_count; ++k) {
    const auto header = in.expect("forest");
    expect_width(header, 4);
    const auto seed = to_int<std::uint64_t>(header[1]);
    const auto row_count = to_int<std::size_t>(header[2]);
    const auto tree_count = to_int<std::size_t>(header[3]);
    const auto row_tokens = in.expect("rows");
    expect_width(row_tokens, row_count + 1);
    std::vector<std::uint32_t> rows(row_count);
    for (std::size_t i = 0; i < row_count; ++i) rows[i] = to_int<std::uint32_t>(row_tokens[i + 1]);

    std::vector<DecisionTree> trees;
    trees.reserve(tree_count);
    for (std::size_t t = 0; t < tree_count; ++t) {
      const auto tree_header = in.expect("tree");
      expect_width(tree_header, 2);
      const auto node_count = to_int<std::size_t>(tree_header[1]);
      std::vector<DecisionTree::Node> nodes(node_count);
      for (auto& node : nodes) {
        const auto n = in.next();
        if (n.empty()) throw Error(ErrorCode::ModelFormat, "empty node record");
        auto counts_from = [&](std::size_t at) {
          node.counts.c = to_int<std::uint64_t>(n[at]);
          node.counts.nc = to_int<std::uint64_t>(n[at + 1]);
          node.label = node.counts.majority();
        };
        if (n[0] == "L") {
          expect_width(n, 4);
          counts_from(2);
          if (to_string(node.label) != n[1]) throw Error(ErrorCode::ModelFormat, "leaf label disagrees with counts");
        } else if (n[0] == "N") {
          expect_width(n, 7);
          node.rule.feature = to_int<std::uint32_t>(n[1]);
          node.rule.threshold = to_double(n[2]);
          node.left = to_int<std::int32_t>(n[3]);
          node.right = to_int<std::int32_t>(n[4]);
          counts_from(5);
        } else if (n[0] == "K") {
          expect_width(n, 9);
          node.rule.feature = to_int<std::uint32_t>(n[1]);
          node.rule.categorical = true;
          node.rule.left_levels = to_int<std::uint64_t>(n[2], 16);
          node.rule.right_levels = to_int<std::uint64_t>(n[3], 16);
          node.rule.heavier_left = n[4] == "L";
          node.left = to_int<std::int32_t>(n[5]);
          node.right = to_int<std::int32_t>(n[6]);
          counts_from(7);
        } else {
          throw Error(ErrorCode::ModelFormat, "line " + std::to_string(in.line()) + ": unknown node kind");
        }
        if (!node.leaf()) {
          if (node.rule.feature >= schema.size()) throw Error(ErrorCode::ModelFormat, "split feature out of range");
          if (node.rule.categorical != schema[node.rule.feature].categorical()) {
            throw Error(ErrorCode::ModelFormat, "split kind disagrees with feature kind");
          }
        }
      }
      trees.push_back(DecisionTree::from_nodes(std::move(nodes)));
    }
    auto oob = replay_oob(rows, seed, tree_count);
    forests.emplace_back(schema, meta.params, seed, std::move(rows), std::move(trees), std::move(oob));
  }
  if (!in.done()) throw Error(ErrorCode::ModelFormat, "trailing records after the last forest");

  HyperForestModel model(std::move(schema), std::move(forests), std::move(meta));
  if (threshold) model.set_threshold(*threshold);
  return model;
}

inline void save_model(const fs::path& path, const HyperForestModel& model) { write_file(path, serialize_model(model)); }

inline HyperForestModel load_model(const fs::path& path) { return parse_model(read_file(path)); }

}  // namespace hyperforest
