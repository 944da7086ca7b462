// ssmc_lab: generate graphs, run experiments, verify the acceptance suite.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ssmc/acceptance.hpp"
#include "ssmc/graph.hpp"
#include "ssmc/graph_io.hpp"
#include "ssmc/harness.hpp"

namespace {

ssmc::WeightedGraph make_family(const std::string& family, int depth, int dimension, int arity,
                                std::uint64_t seed) {
  if (family == "comb") return ssmc::make_comb(depth);
  if (family == "waterfall") return ssmc::make_waterfall(depth);
  if (family == "hypercube") return ssmc::make_hypercube(dimension);
  if (family == "full-tree") return ssmc::make_full_tree(depth, arity);
  if (family == "path") return ssmc::make_path(depth);
  if (family == "random-tree") return ssmc::make_random_tree(depth, 1, 3, 0.5, 2.0, seed);
  throw ssmc::InvalidArgument("unknown graph family '" + family + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Substochastic Monte Carlo simulation lab"};
  app.require_subcommand(1);

  std::string family = "comb";
  int depth = 4;
  int dimension = 4;
  int arity = 2;
  std::uint64_t graph_seed = 1;
  std::string graph_out;
  auto* gen = app.add_subcommand("gen-graph", "Write a generated graph as JSON");
  gen->add_option("family", family, "comb | waterfall | hypercube | full-tree | path | random-tree")
      ->required();
  gen->add_option("--depth,-D", depth, "Tree depth");
  gen->add_option("--dimension,-n", dimension, "Hypercube dimension");
  gen->add_option("--arity", arity, "Children per vertex for full-tree");
  gen->add_option("--seed", graph_seed, "Seed for random-tree");
  gen->add_option("--out,-o", graph_out, "Output path (stdout when omitted)");

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::string> out_path;
  std::optional<std::string> format;
  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Master seed (overrides the config)");
  run->add_option("--trials", trials, "Number of trials (overrides the config)");
  run->add_option("--out,-o", out_path, "Records path; the summary goes to <out>.summary.json");
  run->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

  std::string experiment_name;
  auto* defaults = app.add_subcommand("config", "Print the default config of an experiment");
  defaults->add_option("experiment", experiment_name, "Experiment name")->required();

  std::vector<int> only;
  auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
  verify->add_option("--only", only, "Run just these criterion ids")
      ->check(CLI::Range(1, 12));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const ssmc::WeightedGraph g = make_family(family, depth, dimension, arity, graph_seed);
      if (graph_out.empty()) {
        std::cout << ssmc::graph_to_json(g) << '\n';
      } else {
        ssmc::save_graph(g, graph_out);
      }
      return 0;
    }
    if (*defaults) {
      std::cout << ssmc::config_to_json(ssmc::default_config(ssmc::parse_experiment(experiment_name)))
                << '\n';
      return 0;
    }
    if (*run) {
      ssmc::ExperimentConfig cfg = ssmc::load_config(config_path);
      if (seed) cfg.seed = *seed;
      if (trials) cfg.trials = *trials;
      if (out_path) cfg.output = *out_path;
      if (format) cfg.format = ssmc::parse_format(*format);
      ssmc::validate_config(cfg);
      const ssmc::ExperimentOutcome outcome = ssmc::run_experiment(cfg);
      if (!cfg.output.empty()) ssmc::emit(outcome.records, outcome.summary, cfg.format, cfg.output);
      std::cout << ssmc::summary_to_json(outcome.summary);
      return outcome.summary.passed ? 0 : 1;
    }
    if (*verify) {
      bool all = true;
      auto report = [&](const ssmc::CriterionResult& r) {
        all = all && r.passed;
        std::cout << ssmc::format_criterion(r) << std::endl;
      };
      if (only.empty()) {
        ssmc::run_acceptance(report);
      } else {
        for (int id : only) report(ssmc::run_criterion(id));
      }
      return all ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
