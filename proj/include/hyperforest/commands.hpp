#pragma once

// The six pipeline commands behind the command-line tool. Each returns
// normally on success and throws hyperforest::Error otherwise.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hyperforest/config.hpp"
#include "hyperforest/evaluation.hpp"
#include "hyperforest/features.hpp"
#include "hyperforest/hyper_forest.hpp"
#include "hyperforest/ingestion.hpp"
#include "hyperforest/io.hpp"
#include "hyperforest/model_io.hpp"
#include "hyperforest/pipeline.hpp"
#include "hyperforest/rfe.hpp"
#include "hyperforest/synth.hpp"

namespace hyperforest {

inline constexpr std::string_view kModelFileName = "model.hfm";
inline constexpr std::string_view kRfeModelFileName = "rfe_model.hfm";

enum class EvalSplit { Train, Calibration, Test, All };

struct CommandOptions {
  std::optional<fs::path> config;
  std::optional<fs::path> model;
  std::optional<fs::path> input;
  std::optional<fs::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<double> theta;
  std::optional<unsigned> threads;
  EvalSplit split = EvalSplit::Test;
  bool raw = false;
};

struct CommandContext {
  PipelineConfig config;
  CommandOptions options;
  std::ostream* log = &std::cerr;

  static CommandContext from(const CommandOptions& options, std::ostream& log = std::cerr) {
    CommandContext ctx;
    if (options.config) ctx.config = load_config(*options.config);
    if (options.seed) ctx.config.seed = options.seed;
    ctx.options = options;
    ctx.log = &log;
    return ctx;
  }

  std::ostream& out() const { return *log; }
  unsigned threads() const { return options.threads.value_or(config.threads); }
  fs::path output_dir() const { return options.out.value_or(config.output_dir); }

  fs::path dataset_path() const {
    if (options.input) return *options.input;
    if (config.dataset) return *config.dataset;
    throw Error(ErrorCode::ConfigError, "no dataset: pass --input or set 'dataset' in the config");
  }

  fs::path model_path(std::string_view default_name = kModelFileName) const {
    if (options.model) return *options.model;
    if (config.model) return *config.model;
    return output_dir() / default_name;
  }

  SplitSpec split_spec() const {
    return hyperforest::split_spec(config.train, config.calibration, config.test, config.required_seed());
  }
};

namespace detail {

inline void write_roc(const fs::path& path, const RocCurve& curve) {
  TsvWriter out({"theta", "fpr", "tpr"});
  for (const auto& p : curve.points) out.row(p.theta, p.fpr, p.tpr);
  out.save(path);
}

inline void write_importance(const fs::path& path, const FeatureSchema& schema, const ImportanceVector* importance) {
  TsvWriter out({"rank", "feature", "type", "importance"});
  if (importance) {
    std::vector<std::size_t> order(schema.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return importance->values[a] > importance->values[b]; });
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& name = schema[order[k]].name;
      out.row(k + 1, name, feature_family(name), importance->values[order[k]]);
    }
  }
  out.save(path);
}

inline void write_correlations(const fs::path& path, const CorrelationMatrix& m) {
  std::vector<std::string> header{"feature"};
  header.insert(header.end(), m.names.begin(), m.names.end());
  TsvWriter out(header);
  for (std::size_t i = 0; i < m.names.size(); ++i) {
    std::vector<std::string> cells{m.names[i]};
    for (std::size_t j = 0; j < m.names.size(); ++j) cells.push_back(TsvWriter::cell(m.at(i, j)));
    out.append(cells);
  }
  out.save(path);
}

/// Restricts `data` to the model's features, matched by name.
inline Dataset project_to_model(const Dataset& data, const FeatureSchema& schema) {
  if (data.schema() == schema) return data;
  std::vector<std::size_t> picked;
  for (const auto& f : schema.features()) {
    const auto i = data.schema().index_of(f.name);
    if (!i || data.schema()[*i] != f) {
      throw Error(ErrorCode::SchemaMismatch, "dataset lacks model feature '" + f.name + "' or declares it differently");
    }
    picked.push_back(*i);
  }
  return data.select_features(picked);
}

inline void log_line(const CommandContext& ctx, const std::string& message) { ctx.out() << message << '\n'; }

}  // namespace detail

/// contracts + registries -> labeled feature table and curation report.
inline void cmd_ingest(const CommandContext& ctx) {
  if (!ctx.config.ingest) throw Error(ErrorCode::ConfigError, "config has no 'ingest' section");
  const auto& in = *ctx.config.ingest;
  const fs::path dir = ctx.output_dir();
  const fs::path contracts = ctx.options.input.value_or(in.contracts);

  std::vector<std::string> warnings;
  const auto registry = load_corrupt_registry(in.registries, &warnings);
  for (const auto& w : warnings) detail::log_line(ctx, "warning: " + w);

  const auto parsed = parse_contracts(contracts, in.columns);
  CurationReport report;
  CuratedContracts curated;
  try {
    curated = curate(parsed, in.ppp, in.max_reject_rate, &report);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::RejectRateExceeded) write_file(dir / "curation.tsv", report.to_tsv());
    throw;
  }
  const auto labels = label_dataset(curated.records, registry);
  const Dataset data = build_features(curated.records, labels);
  write_dataset(dir / "features.tsv", data);
  write_file(dir / "curation.tsv", curated.report.to_tsv());
  detail::log_line(ctx, "ingest: " + std::to_string(curated.report.accepted) + " of " +
                            std::to_string(curated.report.total) + " rows accepted, " +
                            std::to_string(data.count(Label::C)) + " C / " + std::to_string(data.count(Label::NC)) +
                            " NC, registry of " + std::to_string(registry.size()) + " names");
}

/// Split, train, calibrate theta, save the model.
inline void cmd_train(const CommandContext& ctx) {
  const std::uint64_t seed = ctx.config.required_seed();
  const Dataset data = read_dataset(ctx.dataset_path());
  const SplitSpec spec = ctx.split_spec();
  const auto split = stratified_split(data.labels(), spec);
  TrainingMetadata meta{seed, spec, ctx.config.forest, dataset_fingerprint(data)};
  const auto run = train_and_calibrate(data, split, ctx.config.forest, seed, ctx.threads(), meta);

  const fs::path dir = ctx.output_dir();
  const fs::path model_path = ctx.model_path();
  save_model(model_path, run.model);
  detail::write_roc(dir / "roc.tsv", run.roc);
  write_indices(dir / "train.idx", split.train);
  write_indices(dir / "calibration.idx", split.calibration);
  write_indices(dir / "test.idx", split.test);
  const auto importance = aggregate_importance(run.model, data, ctx.threads());
  detail::write_importance(dir / "importance.tsv", data.schema(), &importance);
  detail::log_line(ctx, "train: " + std::to_string(run.model.size()) + " forests x " +
                            std::to_string(ctx.config.forest.trees) + " trees, theta " +
                            format_double(run.calibration.theta) + " (TPR " + format_double(run.calibration.tpr) +
                            ", FPR " + format_double(run.calibration.fpr) + ", AUC " +
                            format_double(run.calibration.auc) + "), model " + model_path.string() + " sha256 " +
                            model_checksum(read_file(model_path)));
}

/// Metrics, confusion, ROC, sweep, importance and per-class correlations.
inline void cmd_evaluate(const CommandContext& ctx) {
  const auto model = load_model(ctx.model_path());
  const Dataset data = detail::project_to_model(read_dataset(ctx.dataset_path()), model.schema());
  const bool same_data = !model.metadata().dataset_fingerprint.empty() &&
                         dataset_fingerprint(data) == model.metadata().dataset_fingerprint;

  std::vector<std::uint32_t> rows;
  if (same_data && ctx.options.split != EvalSplit::All) {
    const auto split = stratified_split(data.labels(), model.metadata().split);
    rows = ctx.options.split == EvalSplit::Train         ? split.train
           : ctx.options.split == EvalSplit::Calibration ? split.calibration
                                                         : split.test;
  } else {
    if (ctx.options.split != EvalSplit::All) {
      detail::log_line(ctx, "warning: dataset differs from the training data, evaluating every row");
    }
    rows.resize(data.rows());
    std::iota(rows.begin(), rows.end(), 0u);
  }
  if (rows.empty()) throw Error(ErrorCode::ClassAbsent, "no rows to evaluate");

  const auto eval = evaluate_rows(model, data, rows, ctx.options.theta, ctx.threads());
  const fs::path dir = ctx.output_dir();

  TsvWriter metrics({"metric", "value"});
  metrics.row("rows", rows.size());
  metrics.row("theta", eval.theta);
  metrics.row("forests", model.size());
  metrics.row("accuracy", eval.metrics.accuracy);
  metrics.row("balanced_accuracy", eval.metrics.balanced_accuracy);
  metrics.row("nc_accuracy", eval.metrics.nc_accuracy);
  metrics.row("c_accuracy", eval.metrics.c_accuracy);
  metrics.row("auc", eval.metrics.auc);
  metrics.row("precision", eval.metrics.precision);
  metrics.row("recall", eval.metrics.recall);
  metrics.row("f1", eval.metrics.f1);
  metrics.save(dir / "metrics.tsv");

  const auto& cm = eval.confusion;
  TsvWriter confusion({"actual", "predicted_C", "predicted_NC", "rate_C", "rate_NC"});
  const auto c_row = cm.c_row();
  const auto nc_row = cm.nc_row();
  confusion.row("C", cm.tn, cm.fp, c_row ? std::optional(c_row->first) : std::nullopt,
                c_row ? std::optional(c_row->second) : std::nullopt);
  confusion.row("NC", cm.fn, cm.tp, nc_row ? std::optional(nc_row->second) : std::nullopt,
                nc_row ? std::optional(nc_row->first) : std::nullopt);
  confusion.save(dir / "confusion.tsv");

  TsvWriter roc({"theta", "fpr", "tpr"});
  if (eval.roc) {
    for (const auto& p : eval.roc->points) roc.row(p.theta, p.fpr, p.tpr);
  }
  roc.save(dir / "roc.tsv");

  TsvWriter sweep({"theta", "precision", "recall", "nc_accuracy", "c_accuracy", "balanced_accuracy"});
  if (eval.roc) {
    auto grid = vote_grid(model.size());
    std::reverse(grid.begin(), grid.end());
    for (const auto& s : threshold_sweep(eval.scores, eval.labels, grid)) {
      sweep.row(s.theta, s.precision, s.recall, s.nc_accuracy, s.c_accuracy, s.balanced_accuracy);
    }
  }
  sweep.save(dir / "sweep.tsv");

  if (same_data) {
    const auto importance = aggregate_importance(model, data, ctx.threads());
    detail::write_importance(dir / "importance.tsv", data.schema(), &importance);
  } else {
    detail::log_line(ctx, "warning: importance needs the training data; importance.tsv left empty");
    detail::write_importance(dir / "importance.tsv", data.schema(), nullptr);
  }

  const Dataset evaluated = data.select_rows(rows);
  try {
    const auto corr = class_correlation_matrices(evaluated);
    detail::write_correlations(dir / "corr_C.tsv", corr.c);
    detail::write_correlations(dir / "corr_NC.tsv", corr.nc);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ClassAbsent) throw;
    detail::log_line(ctx, std::string("warning: ") + e.what());
  }
  auto show = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("NA"); };
  detail::log_line(ctx, "evaluate: " + std::to_string(rows.size()) + " rows at theta " + format_double(eval.theta) +
                            ", balanced accuracy " + show(eval.metrics.balanced_accuracy) + ", NC accuracy " +
                            show(eval.metrics.nc_accuracy) + ", C accuracy " + show(eval.metrics.c_accuracy) +
                            ", AUC " + show(eval.metrics.auc));
}

/// Recursive feature elimination; writes rfe.tsv and the best-subset model.
inline void cmd_rfe(const CommandContext& ctx) {
  const std::uint64_t seed = ctx.config.required_seed();
  const Dataset data = read_dataset(ctx.dataset_path());
  const SplitSpec spec = ctx.split_spec();
  const auto split = stratified_split(data.labels(), spec);
  const fs::path dir = ctx.output_dir();
  fs::create_directories(dir);

  const fs::path partial = dir / "rfe.partial.tsv";
  std::ofstream trace(partial, std::ios::binary | std::ios::trunc);
  if (!trace) throw Error(ErrorCode::FileNotFound, "cannot write " + partial.string());
  trace << TsvWriter(rfe_tsv_header()).text() << std::flush;
  const auto result = run_rfe(data, split, ctx.config.forest, seed, ctx.threads(), [&](const RfeStage& stage) {
    TsvWriter line(rfe_tsv_header());
    line.append(rfe_stage_cells(stage, false));
    const auto& text = line.text();
    trace << text.substr(text.find('\n') + 1) << std::flush;
    detail::log_line(ctx, "rfe: " + std::to_string(stage.features.size()) + " features, balanced accuracy " +
                              (stage.balanced_accuracy ? format_double(*stage.balanced_accuracy) : "NA") +
                              (stage.eliminated ? ", dropping " + *stage.eliminated : std::string()));
  });
  trace.close();
  write_file(dir / "rfe.tsv", rfe_table(result, data));

  std::vector<std::size_t> best;
  for (const auto& name : result.best_features()) best.push_back(*data.schema().index_of(name));
  const Dataset projected = data.select_features(best);
  TrainingMetadata meta{seed, spec, ctx.config.forest, dataset_fingerprint(projected)};
  const auto run = train_and_calibrate(projected, split, ctx.config.forest, seed, ctx.threads(), meta);
  save_model(ctx.model_path(kRfeModelFileName), run.model);
  std::string names;
  for (const auto& n : result.best_features()) names += (names.empty() ? "" : ", ") + n;
  detail::log_line(ctx, "rfe: best subset of " + std::to_string(best.size()) + " features: " + names);
}

/// Scores a feature table (or, with raw input, a contracts file) at theta.
inline void cmd_predict(const CommandContext& ctx) {
  // --out names the predictions file here, so the default model lives under output_dir.
  const fs::path model_path = ctx.options.model.value_or(ctx.config.model.value_or(ctx.config.output_dir / kModelFileName));
  const auto model = load_model(model_path);
  if (!ctx.options.input) throw Error(ErrorCode::ConfigError, "predict needs --input");
  const fs::path input = *ctx.options.input;
  const fs::path out_path = ctx.options.out.value_or(ctx.config.output_dir / "predictions.tsv");
  const double theta = model.resolve(ctx.options.theta);

  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::vector<std::optional<Label>> actual;
  if (ctx.options.raw) {
    const ColumnMap columns = ctx.config.ingest ? ctx.config.ingest->columns : ColumnMap{};
    const PppTable ppp = ctx.config.ingest ? ctx.config.ingest->ppp : PppTable{};
    const auto parsed = parse_contracts(input, columns);
    std::vector<ContractRecord> records;
    for (std::size_t i = 0; i < parsed.rows.size(); ++i) {
      auto result = validate_record(parsed.rows[i]);
      if (const auto* rejection = std::get_if<Rejection>(&result)) {
        detail::log_line(ctx, "warning: line " + std::to_string(parsed.lines[i]) + " rejected: " +
                                  std::string(to_string(rejection->reason)) + " " + rejection->field);
        continue;
      }
      records.push_back(convert_spending(std::get<ContractRecord>(std::move(result)), ppp));
      ids.push_back(std::to_string(parsed.lines[i]));
    }
    const std::vector<Label> unknown(records.size(), Label::NC);
    const Dataset features = detail::project_to_model(build_features(records, unknown), model.schema());
    for (std::size_t r = 0; r < features.rows(); ++r) rows.push_back(features.row(r));
    actual.assign(rows.size(), std::nullopt);
  } else if (fs::exists(input) && fs::file_size(input) == 0) {
    // empty input, empty output
  } else {
    const Table table = read_tsv(input);
    auto scoring = read_scoring_rows(table, model.schema(), input);
    rows = std::move(scoring.rows);
    actual = std::move(scoring.labels);
    for (std::size_t r = 0; r < rows.size(); ++r) ids.push_back(std::to_string(r + 1));
  }

  TsvWriter out({"row", "p_nc", "votes_nc", "forests", "predicted", "actual"});
  std::size_t flagged = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto tally = model.vote_probability(rows[r]);
    const Label predicted = HyperForestModel::classify_probability(tally.probability(), theta);
    flagged += predicted == Label::C;
    out.row(ids[r], tally.probability(), tally.votes_nc, tally.total, to_string(predicted),
            actual[r] ? std::string(to_string(*actual[r])) : std::string("NA"));
  }
  out.save(out_path);
  detail::log_line(ctx, "predict: " + std::to_string(rows.size()) + " rows scored at theta " + format_double(theta) +
                            ", " + std::to_string(flagged) + " flagged C");
}

/// Synthetic feature table, or raw contracts plus registry with --raw.
inline void cmd_synth(const CommandContext& ctx) {
  SynthParams params = ctx.config.synth;
  params.seed = ctx.config.required_seed();
  if (ctx.options.raw) {
    const fs::path dir = ctx.output_dir();
    const auto raw = synth_contracts(params);
    write_file(dir / "contracts.csv", raw.contracts_csv);
    write_file(dir / "registry.txt", raw.registry_txt);
    detail::log_line(ctx, "synth: " + std::to_string(params.rows) + " contracts (" + std::to_string(raw.c_contracts) +
                              " with listed suppliers) in " + dir.string());
    return;
  }
  const fs::path path = ctx.options.out.value_or(ctx.config.output_dir / "synth.tsv");
  const Dataset data = synth_dataset(params);
  write_dataset(path, data);
  detail::log_line(ctx, "synth: " + std::to_string(data.count(Label::C)) + " C / " +
                            std::to_string(data.count(Label::NC)) + " NC rows, " + std::to_string(data.features()) +
                            " features -> " + path.string());
}

}  // namespace hyperforest
