// Command-line front end: config-driven evaluation runs, importance and
// chemspace reports, the publication-lag audit, and the synthetic benchmark
// generator.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "timesplit/commands.hpp"
#include "timesplit/error.hpp"

namespace {

struct GlobalArgs {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  bool explain = false;
};

void add_common_flags(CLI::App* cmd, GlobalArgs& args) {
  cmd->add_option("--config", args.config_path, "Config JSON path")->required();
  cmd->add_option("--out", args.out_dir, "Output directory (overrides config out_dir)");
  cmd->add_option("--seed", args.seed, "Base seed (overrides config seed)");
  cmd->add_option("--jobs", args.jobs, "Worker threads (default 1)");
  cmd->add_flag("--explain", args.explain, "Print the resolved effective config and exit");
}

timesplit::RunConfig load_config(const GlobalArgs& args, const std::string& command) {
  timesplit::RunConfig config = timesplit::RunConfig::from_file(args.config_path);
  if (args.out_dir) config.out_dir = *args.out_dir;
  if (args.seed) {
    config.seed = *args.seed;
    config.seed_set = true;
    if (config.synthetic && command == "synth") config.synthetic->seed = *args.seed;
  }
  config.validate_for(command);
  return config;
}

void print_error(const std::string& type, const timesplit::ConfigError* config_error,
                 const std::string& message) {
  nlohmann::json j;
  j["error"]["type"] = type;
  j["error"]["message"] = message;
  if (config_error) j["error"]["problems"] = config_error->problems();
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-split vs random-split evaluation toolkit for binary tabular predictors"};
  app.require_subcommand(1);

  GlobalArgs args;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Run the dataset x learner x split grid");
  CLI::App* importance = app.add_subcommand("importance", "Permutation feature importance");
  CLI::App* chemspace = app.add_subcommand("chemspace", "Applicability-domain diagnostics");
  CLI::App* leakage = app.add_subcommand("leakage", "Publication-lag permutation test");
  CLI::App* synth = app.add_subcommand("synth", "Generate the synthetic benchmark inputs");
  for (CLI::App* cmd : {evaluate, importance, chemspace, leakage, synth}) {
    add_common_flags(cmd, args);
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    timesplit::RunConfig config = load_config(args, command);
    if (args.explain) {
      std::cout << config.to_json_string() << "\n";
      return 0;
    }
    timesplit::CommandOptions options;
    options.jobs = args.jobs == 0 ? 1 : args.jobs;
    if (command == "evaluate") {
      timesplit::cmd_evaluate(config, options);
    } else if (command == "importance") {
      timesplit::cmd_importance(config, options);
    } else if (command == "chemspace") {
      timesplit::cmd_chemspace(config, options);
    } else if (command == "leakage") {
      timesplit::cmd_leakage(config, options);
    } else if (command == "synth") {
      timesplit::cmd_synth(config);
    }
    return 0;
  } catch (const timesplit::ConfigError& e) {
    print_error("config", &e, e.what());
    return 2;
  } catch (const timesplit::ValidationError& e) {
    print_error("validation", nullptr, e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error("runtime", nullptr, e.what());
    return 1;
  }
}
