#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ssmc/graph.hpp"
#include "ssmc/stats.hpp"

namespace ssmc {

enum class Experiment {
  comb_gww,
  waterfall_gww,
  waterfall_ssmc,
  comb_ssmc,
  qa_amplitude,
  lemma2_scaling,
  thm3_scaling,
  uniform_corollary,
  descent,
  drift_meanfield,
};

enum class OutputFormat { csv, json };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& name);
std::vector<Experiment> all_experiments();
std::string to_string(OutputFormat f);
OutputFormat parse_format(const std::string& name);

struct ExperimentConfig {
  Experiment experiment = Experiment::waterfall_gww;
  int depth = 12;
  int dimension = 8;
  std::size_t walkers = 64;
  double energy = 0.0;  // 0 selects the experiment default
  double horizon = 0.5;
  int substeps = 500;
  double stage_time = 1.0;
  double schedule_value = 0.99;
  double dt_cap = 10.0;
  std::vector<double> weights{0.5, 1.0, 2.0};
  int reference_depth = 8;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  std::string output;
  OutputFormat format = OutputFormat::csv;
  bool record_timing = true;
  bool check_invariants = false;
};

/// Defaults of each experiment (the desk-scale settings).
ExperimentConfig default_config(Experiment e);

/// Parses and validates a config document; fields not given keep the
/// experiment's defaults. Unknown keys, wrong types and out-of-range values
/// raise InvalidArgument.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& cfg);
/// Range checks shared by the loader and the CLI overrides.
void validate_config(const ExperimentConfig& cfg);

struct TrialRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  bool success = false;
  double statistic = 0.0;
  double duration_ms = 0.0;

  bool operator==(const TrialRecord&) const = default;
};

struct Summary {
  std::string experiment;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double frequency = 0.0;
  Interval wilson;
  double mean_statistic = 0.0;
  std::string predicate;
  double threshold = 0.0;
  bool passed = false;
  std::vector<std::pair<std::string, double>> extras;
};

struct ExperimentOutcome {
  std::vector<TrialRecord> records;
  Summary summary;
};

/// Runs every trial (in parallel, see worker_count) and evaluates the
/// experiment's acceptance predicate. Records come back sorted by trial.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

/// Worker threads: SSMC_WORKERS when set to a positive integer, otherwise
/// the hardware concurrency.
std::size_t worker_count();

/// Calls body(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double x);

std::string records_to_csv(const std::vector<TrialRecord>& records);
std::string records_to_json(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> records_from_csv(const std::string& text);
std::vector<TrialRecord> records_from_json(const std::string& text);
std::string summary_to_json(const Summary& s);

/// Writes the records to `path` and the summary to `<path>.summary.json`.
void emit(const std::vector<TrialRecord>& records, const Summary& summary, OutputFormat format,
          const std::filesystem::path& path);

// ---- experiment building blocks (shared with the acceptance suite) ------

/// |p_exact(child) - (w/E) e^{-w}| for each child of a star after one unit
/// stage from the root.
std::vector<double> star_child_errors(const std::vector<double>& weights, double energy);

/// Random three-layer tree used by the limit-process experiments.
WeightedGraph random_three_layer_tree(std::uint64_t seed);

/// TV distance at the final depth between the staged process and the
/// iterated limit process, both started at the root.
double limit_process_error(const WeightedGraph& g, double energy);

/// Two-site instance: u (objective 1) -- v (objective 0), unit weight.
WeightedGraph descent_instance();

/// Lower bound (1 - e^{-Np})(1 - N(1-s)/(s dE)) for the descent instance.
double descent_bound(std::size_t walkers, double s, double dt_cap);

/// Three-vertex path used by the mean-field experiment and its generator.
WeightedGraph meanfield_graph();
Eigen::MatrixXd meanfield_generator();

}  // namespace ssmc
