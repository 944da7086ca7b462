#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ssmc/graph.hpp"
#include "ssmc/rng.hpp"

namespace ssmc {

/// N walkers on live vertices plus the simulation clock.
struct WalkerPopulation {
  std::vector<VertexId> positions;
  double clock = 0.0;
  Rng rng;

  WalkerPopulation() = default;
  WalkerPopulation(std::size_t walkers, VertexId start, std::uint64_t seed)
      : positions(walkers, start), rng(seed) {}

  std::size_t size() const { return positions.size(); }
  /// Walker count per vertex (eta).
  std::vector<std::uint32_t> counts(std::size_t vertex_count) const;
  /// Fraction of walkers per vertex (m_t).
  std::vector<double> empirical(std::size_t vertex_count) const;
  /// Distinct occupied vertices in increasing order.
  std::vector<VertexId> occupied() const;
};

/// Rates out of one site: jumps to neighbours and absorption.
struct RateColumn {
  std::vector<Neighbor> jumps;  // Neighbor::w is the jump rate
  double death_rate = 0.0;

  double out_rate() const;
};

/// T = I - dt H restricted to a set of columns. Probabilities are derived
/// from the stored rates, so the step can be rescaled to another dt.
class SubstochasticStep {
 public:
  SubstochasticStep(std::size_t vertex_count, double dt);

  void set_column(VertexId x, RateColumn column);
  bool has_column(VertexId x) const { return x < index_.size() && index_[x] >= 0; }
  const RateColumn& column(VertexId x) const;

  double dt() const { return dt_; }
  SubstochasticStep with_dt(double dt) const;

  double stay(VertexId x) const { return 1.0 - dt_ * column(x).out_rate(); }
  double death(VertexId x) const { return dt_ * column(x).death_rate; }
  /// Probability that a walker at x does anything (moves or dies).
  double activity(VertexId x) const { return dt_ * column(x).out_rate(); }

  /// Throws InvalidArgument unless every column is nonnegative and
  /// T column sum + death = 1 within tol.
  void validate(double tol = 1e-12) const;
  std::vector<VertexId> sites() const { return sites_; }

 private:
  std::size_t vertex_count_ = 0;
  double dt_ = 0.0;
  std::vector<std::int32_t> index_;
  std::vector<VertexId> sites_;
  std::vector<RateColumn> columns_;
};

/// W - min over occupied sites of W.
std::vector<double> shifted_objective(std::span<const double> objective,
                                      const WalkerPopulation& pop);

enum class ScheduleMode { staged, interpolated };

/// Rates of the staged generator L_j + diag(shifted objective) at x.
RateColumn staged_rates(const WeightedGraph& g, int j, std::span<const double> shifted, VertexId x);

/// Rates of (1-s)/d L + s diag(shifted objective) at x, d = max degree.
RateColumn interpolated_rates(const WeightedGraph& g, double s, std::span<const double> shifted,
                              VertexId x);

/// Rates of a dense generator H at column x (off-diagonals -H_yx, death rate
/// = column sum).
RateColumn matrix_rates(const Eigen::MatrixXd& h, VertexId x);

/// Staged: 1 / max (L_xx + shifted_x) over the occupied sites and their
/// stage neighbours, with the objective clamped at 0 off the occupied set.
/// Interpolated: min(1 / ((1-s) Lmax/d + s dE), cap). A zero denominator
/// returns `cap`.
double select_dt(const WeightedGraph& g, std::span<const double> shifted,
                 const std::vector<VertexId>& occupied, ScheduleMode mode, int stage, double s,
                 double cap);

/// Naive sub-step: every walker samples its column, then each dead walker
/// copies the new position of a uniform survivor. Throws ExtinctionError
/// (leaving positions untouched) when no walker survives.
void euler_step(WalkerPopulation& pop, const SubstochasticStep& step);

enum class StepMode { skip_ahead, naive };

struct AdvanceOptions {
  StepMode mode = StepMode::skip_ahead;
  int max_halvings = 20;
  bool check_invariants = false;
};

struct AdvanceStats {
  std::uint64_t substeps = 0;   // sub-steps simulated, including skipped idle ones
  std::uint64_t events = 0;     // sub-steps in which some walker moved or died
  std::uint64_t halvings = 0;   // extinction retries
  std::uint64_t deaths = 0;
};

/// Builds the step for the current population; dt may exceed the time left.
using StepPlanner = std::function<SubstochasticStep(const WalkerPopulation&)>;

/// Advances pop.clock to t_end. The planner is re-run after every sub-step
/// that changes a position. In skip-ahead mode runs of idle sub-steps are
/// drawn in one geometric jump, which has the same law as stepping. Throws
/// ExtinctionError after max_halvings failed retries of one sub-step.
void advance(WalkerPopulation& pop, double t_end, const StepPlanner& planner,
             const AdvanceOptions& options = {}, AdvanceStats* stats = nullptr);

struct StagedSsmcOptions {
  std::size_t walkers = 64;
  double energy = 0.0;  // <= 0 selects (N D)^2
  double dt_cap = 1.0;
  AdvanceOptions advance;
};

struct StagedSsmcResult {
  WalkerPopulation final;
  std::vector<std::vector<VertexId>> snapshots;  // positions at t = 0, 1, ..., D
  bool extinct = false;
  int stages_completed = 0;
  double energy = 0.0;
  AdvanceStats stats;

  /// Fraction of walkers at v at the end of the run.
  double final_fraction(VertexId v) const;
};

/// Euler-step SSMC under the staged schedule, all walkers starting at the
/// root.
StagedSsmcResult run_staged_ssmc(const WeightedGraph& g, const StagedSsmcOptions& options,
                                 std::uint64_t seed);

/// One lazy-walk stage: each walker at a vertex with children moves to each
/// child with probability 1/d_max, then walkers outside V_{j+1} copy a
/// uniform walker inside it. An all-lazy move phase is redrawn up to
/// max_retries times before ExtinctionError.
void lazy_step(WalkerPopulation& pop, const WeightedGraph& g, int j, int max_retries = 1000);

struct LazySsmcResult {
  WalkerPopulation final;
  std::vector<std::vector<VertexId>> snapshots;
  bool stalled = false;  // no occupied vertex had a child before depth D
};

LazySsmcResult run_lazy_ssmc(const WeightedGraph& g, std::size_t walkers, std::uint64_t seed);

struct InterpolatedOptions {
  double dt_cap = 1.0;
  bool check_invariants = false;
};

/// One Euler sub-step of the interpolated dynamics at schedule value s with
/// the objective shifted by its occupied minimum; dt is further limited to
/// max_dt. Returns the dt used.
double interpolated_step(WalkerPopulation& pop, const WeightedGraph& g, double s,
                         const InterpolatedOptions& options = {},
                         double max_dt = std::numeric_limits<double>::infinity());

/// Interpolated SSMC from pop.clock to t_end (the schedule value is the
/// clock at the start of each sub-step). Returns one snapshot per sub-step.
std::vector<WalkerPopulation> run_interpolated_ssmc(const WeightedGraph& g, WalkerPopulation pop,
                                                    double t_end,
                                                    const InterpolatedOptions& options = {});

/// Fleming-Viot population drift d eta / dt for generator H (mean-field
/// closure). Conserves sum(eta) = N: a walker dying at x re-lands at x with
/// probability (eta(x) - 1) / (N - 1).
Eigen::VectorXd population_drift(const Eigen::VectorXd& eta, const Eigen::MatrixXd& h,
                                 double walkers);

/// Classical RK4 integration of population_drift.
Eigen::VectorXd integrate_drift(Eigen::VectorXd eta, const Eigen::MatrixXd& h, double walkers,
                                double t_end, int steps);

}  // namespace ssmc
