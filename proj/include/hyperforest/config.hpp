#pragma once

// Pipeline configuration: a JSON document. Unknown keys are errors.
// Relative paths resolve against the directory holding the config file.

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperforest/error.hpp"
#include "hyperforest/forest.hpp"
#include "hyperforest/ingestion.hpp"
#include "hyperforest/io.hpp"
#include "hyperforest/splitter.hpp"
#include "hyperforest/synth.hpp"

namespace hyperforest {

struct IngestConfig {
  fs::path contracts;
  std::vector<RegistryFile> registries;
  ColumnMap columns;
  PppTable ppp;
  double max_reject_rate = kDefaultMaxRejectRate;
};

struct PipelineConfig {
  std::optional<std::uint64_t> seed;
  fs::path output_dir = "out";
  std::optional<fs::path> dataset;
  std::optional<fs::path> model;
  std::optional<IngestConfig> ingest;
  double train = 0.5;
  double calibration = 0.2;
  double test = 0.3;
  ForestParams forest;
  SynthParams synth;
  unsigned threads = 0;

  std::uint64_t required_seed() const {
    if (!seed) throw Error(ErrorCode::ConfigError, "a seed is required (config key 'seed' or --seed)");
    return *seed;
  }
};

namespace detail {

using Json = nlohmann::json;

inline void check_keys(const Json& object, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!object.is_object()) throw Error(ErrorCode::ConfigError, std::string(where) + " must be an object");
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (const auto a : allowed) known = known || key == a;
    if (!known) throw Error(ErrorCode::ConfigError, "unknown config key '" + std::string(where) + "." + key + "'");
  }
}

template <class T>
T get_as(const Json& object, std::string_view key, std::string_view where) {
  try {
    return object.at(std::string(key)).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::ConfigError, "config key '" + std::string(where) + "." + std::string(key) + "' has the wrong type");
  }
}

template <class T>
void read_if(const Json& object, std::string_view key, std::string_view where, T& target) {
  if (object.contains(std::string(key))) target = get_as<T>(object, key, where);
}

inline fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() || base.empty() ? p : base / p; }

}  // namespace detail

inline PipelineConfig parse_config(const nlohmann::json& doc, const fs::path& base_dir = {}) {
  using detail::check_keys;
  using detail::get_as;
  using detail::read_if;
  using detail::resolve;
  check_keys(doc, "config",
             {"seed", "output_dir", "dataset", "model", "threads", "ingest", "split", "forest", "synth"});
  PipelineConfig c;
  if (doc.contains("seed")) c.seed = get_as<std::uint64_t>(doc, "seed", "config");
  if (doc.contains("output_dir")) c.output_dir = resolve(base_dir, get_as<std::string>(doc, "output_dir", "config"));
  if (doc.contains("dataset")) c.dataset = resolve(base_dir, get_as<std::string>(doc, "dataset", "config"));
  if (doc.contains("model")) c.model = resolve(base_dir, get_as<std::string>(doc, "model", "config"));
  read_if(doc, "threads", "config", c.threads);

  if (doc.contains("ingest")) {
    const auto& j = doc["ingest"];
    check_keys(j, "ingest", {"contracts", "registries", "columns", "ppp", "max_reject_rate"});
    IngestConfig in;
    in.contracts = resolve(base_dir, get_as<std::string>(j, "contracts", "ingest"));
    if (j.contains("registries")) {
      if (!j["registries"].is_array()) throw Error(ErrorCode::ConfigError, "ingest.registries must be an array");
      for (const auto& r : j["registries"]) {
        RegistryFile file;
        if (r.is_string()) {
          file.path = resolve(base_dir, r.get<std::string>());
        } else {
          check_keys(r, "ingest.registries[]", {"path", "source", "column"});
          file.path = resolve(base_dir, get_as<std::string>(r, "path", "ingest.registries[]"));
          if (r.contains("source")) {
            const auto source = parse_registry_source(get_as<std::string>(r, "source", "ingest.registries[]"));
            if (!source) throw Error(ErrorCode::ConfigError, "registry source must be tax-agency, open-data or both");
            file.source = *source;
          }
          if (r.contains("column")) file.column = get_as<std::string>(r, "column", "ingest.registries[]");
        }
        in.registries.push_back(std::move(file));
      }
    }
    if (j.contains("columns")) {
      const auto& cols = j["columns"];
      if (!cols.is_object()) throw Error(ErrorCode::ConfigError, "ingest.columns must be an object");
      for (const auto& [field, header] : cols.items()) {
        if (std::find(kRecordFields.begin(), kRecordFields.end(), field) == kRecordFields.end()) {
          throw Error(ErrorCode::ConfigError, "unknown contract field '" + field + "' in ingest.columns");
        }
        if (!header.is_string()) throw Error(ErrorCode::ConfigError, "ingest.columns values must be strings");
        in.columns[field] = header.get<std::string>();
      }
    }
    if (j.contains("ppp")) {
      const auto& ppp = j["ppp"];
      if (!ppp.is_object()) throw Error(ErrorCode::ConfigError, "ingest.ppp must be an object");
      for (const auto& [year, factor] : ppp.items()) {
        const auto y = parse_int<int>(year);
        if (!y || !factor.is_number() || !(factor.get<double>() > 0.0)) {
          throw Error(ErrorCode::ConfigError, "ingest.ppp maps years to positive factors");
        }
        in.ppp[*y] = factor.get<double>();
      }
    }
    read_if(j, "max_reject_rate", "ingest", in.max_reject_rate);
    if (!(in.max_reject_rate >= 0.0 && in.max_reject_rate <= 1.0)) {
      throw Error(ErrorCode::ConfigError, "ingest.max_reject_rate must lie in [0, 1]");
    }
    c.ingest = std::move(in);
  }

  if (doc.contains("split")) {
    const auto& j = doc["split"];
    check_keys(j, "split", {"train", "calibration", "test"});
    read_if(j, "train", "split", c.train);
    read_if(j, "calibration", "split", c.calibration);
    read_if(j, "test", "split", c.test);
  }
  SplitSpec{c.train, c.calibration, c.test, 0}.validate();

  if (doc.contains("forest")) {
    const auto& j = doc["forest"];
    check_keys(j, "forest", {"trees", "features_per_split", "min_node_size", "categorical_search"});
    read_if(j, "trees", "forest", c.forest.trees);
    read_if(j, "features_per_split", "forest", c.forest.features_per_split);
    read_if(j, "min_node_size", "forest", c.forest.min_node_size);
    if (j.contains("categorical_search")) {
      const auto s = get_as<std::string>(j, "categorical_search", "forest");
      if (s == "ordering") {
        c.forest.categorical_search = CategoricalSearch::Ordering;
      } else if (s == "exhaustive") {
        c.forest.categorical_search = CategoricalSearch::Exhaustive;
      } else {
        throw Error(ErrorCode::ConfigError, "forest.categorical_search must be 'ordering' or 'exhaustive'");
      }
    }
    if (c.forest.trees == 0) throw Error(ErrorCode::ConfigError, "forest.trees must be at least 1");
    if (c.forest.min_node_size == 0) throw Error(ErrorCode::ConfigError, "forest.min_node_size must be at least 1");
  }

  if (doc.contains("synth")) {
    const auto& j = doc["synth"];
    check_keys(j, "synth", {"rows", "ratio", "informative", "noise", "constant", "signal", "background"});
    read_if(j, "rows", "synth", c.synth.rows);
    read_if(j, "ratio", "synth", c.synth.ratio);
    read_if(j, "informative", "synth", c.synth.informative);
    read_if(j, "noise", "synth", c.synth.noise);
    read_if(j, "constant", "synth", c.synth.constant);
    read_if(j, "signal", "synth", c.synth.signal);
    read_if(j, "background", "synth", c.synth.background);
    c.synth.validate();
  }
  return c;
}

inline PipelineConfig load_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::ConfigError, "config file " + path.string() + " not found");
  const std::string text = read_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

}  // namespace hyperforest
