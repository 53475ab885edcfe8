// hyperforest: ingest, train, evaluate, rfe, predict and synth commands.
//
// Exit status: 0 success, 1 usage or configuration error, 2 data error,
// 3 internal invariant violation.

#include <CLI11.hpp>

#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "hyperforest/commands.hpp"

namespace {

using hyperforest::CommandContext;
using hyperforest::CommandOptions;

struct Flags {
  std::string config;
  std::string model;
  std::string input;
  std::string out;
  std::uint64_t seed = 0;
  double theta = 0.0;
  unsigned threads = 0;
  std::string split = "test";
  bool raw = false;
};

CommandOptions to_options(const CLI::App& sub, const Flags& f) {
  CommandOptions o;
  auto given = [&](const char* name) { return sub.get_option_no_throw(name) && sub.count(name) > 0; };
  if (given("--config")) o.config = f.config;
  if (given("--model")) o.model = f.model;
  if (given("--input")) o.input = f.input;
  if (given("--out")) o.out = f.out;
  if (given("--seed")) o.seed = f.seed;
  if (given("--theta")) o.theta = f.theta;
  if (given("--threads")) o.threads = f.threads;
  if (given("--split")) {
    static const std::map<std::string, hyperforest::EvalSplit> kSplits{
        {"train", hyperforest::EvalSplit::Train},
        {"calibration", hyperforest::EvalSplit::Calibration},
        {"test", hyperforest::EvalSplit::Test},
        {"all", hyperforest::EvalSplit::All}};
    o.split = kSplits.at(f.split);
  }
  o.raw = f.raw;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyper-forest classifier for imbalanced procurement data"};
  app.require_subcommand(1);
  Flags flags;

  using Command = void (*)(const CommandContext&);
  struct Spec {
    const char* name;
    const char* help;
    Command run;
  };
  const Spec specs[] = {
      {"ingest", "Curate contracts, label them against the registries, build the feature table",
       hyperforest::cmd_ingest},
      {"train", "Split, train the hyper-forest, calibrate theta and save the model", hyperforest::cmd_train},
      {"evaluate", "Score a split and write metrics, ROC, sweep, importance and correlation tables",
       hyperforest::cmd_evaluate},
      {"rfe", "Recursive feature elimination and the best-subset model", hyperforest::cmd_rfe},
      {"predict", "Score new rows at the stored threshold", hyperforest::cmd_predict},
      {"synth", "Generate a seeded synthetic dataset", hyperforest::cmd_synth},
  };

  std::map<CLI::App*, Command> commands;
  for (const auto& spec : specs) {
    auto* sub = app.add_subcommand(spec.name, spec.help);
    sub->add_option("--config", flags.config, "Pipeline config (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--model", flags.model, "Model file");
    sub->add_option("--input", flags.input, "Input table");
    sub->add_option("--out", flags.out, "Output directory (predict, synth: output file)");
    sub->add_option("--seed", flags.seed, "Seed, overrides the config");
    sub->add_option("--threads", flags.threads, "Worker threads, 0 for all cores");
    const std::string name = spec.name;
    if (name == "evaluate" || name == "predict") sub->add_option("--theta", flags.theta, "Threshold override")->check(CLI::Range(0.0, 1.0));
    if (name == "evaluate") {
      sub->add_option("--split", flags.split, "Rows to evaluate")->check(CLI::IsMember({"train", "calibration", "test", "all"}));
    }
    if (name == "predict" || name == "synth") sub->add_flag("--raw", flags.raw, "Raw contracts instead of a feature table");
    commands[sub] = spec.run;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (const auto& [sub, run] : commands) {
      if (!sub->parsed()) continue;
      const auto ctx = CommandContext::from(to_options(*sub, flags));
      run(ctx);
    }
    return 0;
  } catch (const hyperforest::Error& e) {
    std::cerr << "error [" << hyperforest::to_string(e.code()) << "]: " << e.what() << '\n';
    return hyperforest::exit_status(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error [FileSystem]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error [Internal]: " << e.what() << '\n';
    return 3;
  }
}
