#include "ssmc/walkers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ssmc {

std::vector<std::uint32_t> WalkerPopulation::counts(std::size_t vertex_count) const {
  std::vector<std::uint32_t> out(vertex_count, 0);
  for (VertexId v : positions) {
    if (v >= vertex_count) throw InvalidArgument("walker position out of range");
    ++out[v];
  }
  return out;
}

std::vector<double> WalkerPopulation::empirical(std::size_t vertex_count) const {
  const auto c = counts(vertex_count);
  std::vector<double> out(vertex_count, 0.0);
  if (positions.empty()) return out;
  for (std::size_t v = 0; v < vertex_count; ++v) {
    out[v] = static_cast<double>(c[v]) / static_cast<double>(positions.size());
  }
  return out;
}

std::vector<VertexId> WalkerPopulation::occupied() const {
  std::vector<VertexId> out(positions);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double RateColumn::out_rate() const {
  double total = death_rate;
  for (const Neighbor& j : jumps) total += j.w;
  return total;
}

SubstochasticStep::SubstochasticStep(std::size_t vertex_count, double dt)
    : vertex_count_(vertex_count), dt_(dt), index_(vertex_count, -1) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InvalidArgument("substochastic step: dt must be positive and finite");
  }
}

void SubstochasticStep::set_column(VertexId x, RateColumn column) {
  if (x >= vertex_count_) throw InvalidArgument("substochastic step: column out of range");
  for (const Neighbor& j : column.jumps) {
    if (j.to >= vertex_count_) throw InvalidArgument("substochastic step: jump out of range");
  }
  if (index_[x] >= 0) {
    columns_[static_cast<std::size_t>(index_[x])] = std::move(column);
    return;
  }
  index_[x] = static_cast<std::int32_t>(columns_.size());
  sites_.push_back(x);
  columns_.push_back(std::move(column));
}

const RateColumn& SubstochasticStep::column(VertexId x) const {
  if (!has_column(x)) {
    throw InvalidArgument("substochastic step: no column for vertex " + std::to_string(x));
  }
  return columns_[static_cast<std::size_t>(index_[x])];
}

SubstochasticStep SubstochasticStep::with_dt(double dt) const {
  SubstochasticStep out(*this);
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InvalidArgument("substochastic step: dt must be positive and finite");
  }
  out.dt_ = dt;
  return out;
}

void SubstochasticStep::validate(double tol) const {
  for (std::size_t k = 0; k < sites_.size(); ++k) {
    const RateColumn& c = columns_[k];
    double total = 0.0;
    const double death = dt_ * c.death_rate;
    if (death < -tol) throw InvalidArgument("substochastic step: negative death probability");
    total += death;
    for (const Neighbor& j : c.jumps) {
      const double p = dt_ * j.w;
      if (p < -tol) throw InvalidArgument("substochastic step: negative transition entry");
      total += p;
    }
    const double stay = 1.0 - dt_ * c.out_rate();
    if (stay < -tol) {
      throw InvalidArgument("substochastic step: negative diagonal at vertex " +
                            std::to_string(sites_[k]) + " (dt too large)");
    }
    total += stay;
    if (std::abs(total - 1.0) > tol) {
      throw InvalidArgument("substochastic step: column " + std::to_string(sites_[k]) +
                            " does not complete to 1");
    }
  }
}

std::vector<double> shifted_objective(std::span<const double> objective,
                                      const WalkerPopulation& pop) {
  if (pop.positions.empty()) throw InvalidArgument("shifted_objective: empty population");
  double low = std::numeric_limits<double>::infinity();
  for (VertexId v : pop.positions) {
    if (v >= objective.size()) throw InvalidArgument("shifted_objective: position out of range");
    low = std::min(low, objective[v]);
  }
  std::vector<double> out(objective.begin(), objective.end());
  for (double& w : out) w -= low;
  return out;
}

namespace {

bool in_stage(const WeightedGraph& g, int j, VertexId a, VertexId b) {
  const int da = g.depth(a);
  const int db = g.depth(b);
  return std::min(da, db) == j - 1 && std::max(da, db) == j;
}

}  // namespace

RateColumn staged_rates(const WeightedGraph& g, int j, std::span<const double> shifted,
                        VertexId x) {
  RateColumn c;
  for (const Neighbor& n : g.neighbors(x)) {
    if (in_stage(g, j, x, n.to)) c.jumps.push_back(n);
  }
  c.death_rate = std::max(0.0, shifted[x]);
  return c;
}

RateColumn interpolated_rates(const WeightedGraph& g, double s, std::span<const double> shifted,
                              VertexId x) {
  RateColumn c;
  const double d = static_cast<double>(std::max<std::size_t>(1, g.max_degree()));
  const double a = (1.0 - s) / d;
  if (a > 0.0) {
    for (const Neighbor& n : g.neighbors(x)) c.jumps.push_back(Neighbor{n.to, a * n.w});
  }
  c.death_rate = s * std::max(0.0, shifted[x]);
  return c;
}

RateColumn matrix_rates(const Eigen::MatrixXd& h, VertexId x) {
  if (x >= h.cols()) throw InvalidArgument("matrix_rates: column out of range");
  RateColumn c;
  double theta = 0.0;
  for (Eigen::Index y = 0; y < h.rows(); ++y) {
    const double v = h(y, x);
    theta += v;
    if (y == x || v == 0.0) continue;
    if (v > 0.0) throw InvalidArgument("matrix_rates: positive off-diagonal generator entry");
    c.jumps.push_back(Neighbor{static_cast<VertexId>(y), -v});
  }
  if (theta < -1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff())) {
    throw InvalidArgument("matrix_rates: negative death rate");
  }
  c.death_rate = std::max(0.0, theta);
  return c;
}

double select_dt(const WeightedGraph& g, std::span<const double> shifted,
                 const std::vector<VertexId>& occupied, ScheduleMode mode, int stage, double s,
                 double cap) {
  if (!(cap > 0.0)) throw InvalidArgument("select_dt: cap must be positive");
  if (occupied.empty()) throw InvalidArgument("select_dt: empty occupied set");
  double denominator = 0.0;
  if (mode == ScheduleMode::staged) {
    auto stage_diagonal = [&](VertexId x) {
      double diag = 0.0;
      for (const Neighbor& n : g.neighbors(x)) {
        if (in_stage(g, stage, x, n.to)) diag += n.w;
      }
      return diag + std::max(0.0, shifted[x]);
    };
    for (VertexId x : occupied) {
      denominator = std::max(denominator, stage_diagonal(x));
      for (const Neighbor& n : g.neighbors(x)) {
        if (in_stage(g, stage, x, n.to)) denominator = std::max(denominator, stage_diagonal(n.to));
      }
    }
    return denominator > 0.0 ? 1.0 / denominator : cap;
  }
  if (s < 0.0 || s > 1.0) throw InvalidArgument("select_dt: schedule value outside [0, 1]");
  const double d = static_cast<double>(std::max<std::size_t>(1, g.max_degree()));
  double l_max = 0.0;
  double low = std::numeric_limits<double>::infinity();
  double high = -std::numeric_limits<double>::infinity();
  for (VertexId x : occupied) {
    double diag = 0.0;
    for (const Neighbor& n : g.neighbors(x)) diag += n.w;
    l_max = std::max(l_max, diag);
    low = std::min(low, shifted[x]);
    high = std::max(high, shifted[x]);
  }
  denominator = (1.0 - s) * l_max / d + s * (high - low);
  return denominator > 0.0 ? std::min(1.0 / denominator, cap) : cap;
}

namespace {

enum class Fate { stay, move, die };

// Samples the fate of a walker at x given that it acts (moves or dies).
Fate sample_action(const RateColumn& c, Rng& rng, VertexId& to) {
  double u = rng.uniform() * c.out_rate();
  if (u < c.death_rate) return Fate::die;
  u -= c.death_rate;
  for (const Neighbor& j : c.jumps) {
    if (u < j.w) {
      to = j.to;
      return Fate::move;
    }
    u -= j.w;
  }
  // Round-off at the top of the range: take the last positive option.
  for (auto it = c.jumps.rbegin(); it != c.jumps.rend(); ++it) {
    if (it->w > 0.0) {
      to = it->to;
      return Fate::move;
    }
  }
  return Fate::die;
}

// Replaces dead walkers by copies of uniform survivors. Returns false (and
// leaves `next` unusable) when nobody survived.
bool repopulate(std::vector<VertexId>& next, const std::vector<char>& dead, Rng& rng,
                std::uint64_t* deaths) {
  std::vector<std::size_t> survivors;
  survivors.reserve(next.size());
  std::size_t dead_count = 0;
  for (std::size_t i = 0; i < next.size(); ++i) {
    if (dead[i]) {
      ++dead_count;
    } else {
      survivors.push_back(i);
    }
  }
  if (survivors.empty()) return false;
  if (deaths) *deaths += dead_count;
  if (dead_count == 0) return true;
  for (std::size_t i = 0; i < next.size(); ++i) {
    if (dead[i]) next[i] = next[survivors[rng.index(survivors.size())]];
  }
  return true;
}

bool try_euler_step(WalkerPopulation& pop, const SubstochasticStep& step, bool* changed,
                    std::uint64_t* deaths) {
  std::vector<VertexId> next(pop.positions);
  std::vector<char> dead(next.size(), 0);
  bool any = false;
  for (std::size_t i = 0; i < next.size(); ++i) {
    const RateColumn& c = step.column(pop.positions[i]);
    const double act = step.dt() * c.out_rate();
    if (act <= 0.0 || pop.rng.uniform() >= act) continue;
    VertexId to = 0;
    switch (sample_action(c, pop.rng, to)) {
      case Fate::die:
        dead[i] = 1;
        any = true;
        break;
      case Fate::move:
        next[i] = to;
        any = true;
        break;
      case Fate::stay:
        break;
    }
  }
  if (!repopulate(next, dead, pop.rng, deaths)) return false;
  pop.positions = std::move(next);
  pop.clock += step.dt();
  if (changed) *changed = any;
  return true;
}

// One sub-step conditioned on at least one walker acting. q[i] is walker i's
// activity and log_idle = sum log(1 - q[i]).
bool try_active_step(WalkerPopulation& pop, const SubstochasticStep& step,
                     const std::vector<double>& q, double log_idle, std::uint64_t* deaths) {
  const std::size_t n = pop.positions.size();
  const double p_any = -std::expm1(log_idle);
  double r = pop.rng.uniform() * p_any;
  std::size_t first = n;
  double prefix = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double weight = q[i] * prefix;
    if (r < weight) {
      first = i;
      break;
    }
    r -= weight;
    prefix *= 1.0 - q[i];
  }
  if (first == n) {
    for (std::size_t i = n; i-- > 0;) {
      if (q[i] > 0.0) {
        first = i;
        break;
      }
    }
  }

  std::vector<VertexId> next(pop.positions);
  std::vector<char> dead(n, 0);
  for (std::size_t i = first; i < n; ++i) {
    if (i != first && (q[i] <= 0.0 || pop.rng.uniform() >= q[i])) continue;
    VertexId to = 0;
    if (sample_action(step.column(pop.positions[i]), pop.rng, to) == Fate::die) {
      dead[i] = 1;
    } else {
      next[i] = to;
    }
  }
  if (!repopulate(next, dead, pop.rng, deaths)) return false;
  pop.positions = std::move(next);
  pop.clock += step.dt();
  return true;
}

void check_population(const WalkerPopulation& pop, std::size_t expected) {
  if (pop.positions.size() != expected) {
    throw Error("invariant violated: walker count changed from " + std::to_string(expected) +
                " to " + std::to_string(pop.positions.size()));
  }
}

}  // namespace

void euler_step(WalkerPopulation& pop, const SubstochasticStep& step) {
  if (!try_euler_step(pop, step, nullptr, nullptr)) {
    throw ExtinctionError("every walker died in one sub-step");
  }
}

void advance(WalkerPopulation& pop, double t_end, const StepPlanner& planner,
             const AdvanceOptions& options, AdvanceStats* stats) {
  if (pop.positions.empty()) throw InvalidArgument("advance: empty population");
  AdvanceStats local;
  AdvanceStats& st = stats ? *stats : local;
  const std::size_t walkers = pop.positions.size();
  const double eps = 1e-12 * std::max(1.0, std::abs(t_end));

  // Retries a failed sub-step with dt halved; throws when out of retries.
  auto retry = [&](const SubstochasticStep& step) {
    double dt = step.dt();
    for (int h = 1; h <= options.max_halvings; ++h) {
      dt *= 0.5;
      ++st.halvings;
      ++st.substeps;
      bool changed = false;
      if (try_euler_step(pop, step.with_dt(dt), &changed, &st.deaths)) {
        if (changed) ++st.events;
        return;
      }
    }
    throw ExtinctionError("population went extinct after " +
                          std::to_string(options.max_halvings) + " dt halvings");
  };

  while (t_end - pop.clock > eps) {
    const double remaining = t_end - pop.clock;
    SubstochasticStep step = planner(pop);
    std::uint64_t full = 1;
    if (step.dt() >= remaining) {
      step = step.with_dt(remaining);
    } else {
      full = std::max<std::uint64_t>(
          1, static_cast<std::uint64_t>(std::floor(remaining / step.dt())));
    }
    if (options.check_invariants) step.validate();

    if (options.mode == StepMode::naive) {
      ++st.substeps;
      bool changed = false;
      if (!try_euler_step(pop, step, &changed, &st.deaths)) {
        retry(step);
      } else if (changed) {
        ++st.events;
      }
    } else {
      std::vector<double> q(walkers);
      double log_idle = 0.0;
      bool anyone = false;
      for (std::size_t i = 0; i < walkers; ++i) {
        q[i] = std::clamp(step.activity(pop.positions[i]), 0.0, 1.0);
        if (q[i] > 0.0) anyone = true;
        log_idle += std::log1p(-q[i]);
      }
      if (!anyone) {
        // Nothing can change until t_end.
        st.substeps += static_cast<std::uint64_t>(std::ceil(remaining / step.dt()));
        pop.clock = t_end;
        break;
      }
      std::uint64_t idle = 0;
      if (std::isfinite(log_idle) && log_idle < 0.0) {
        const double k = std::floor(std::log(pop.rng.uniform_open_low()) / log_idle);
        idle = k >= static_cast<double>(full) ? full : static_cast<std::uint64_t>(k);
      }
      if (idle >= full) {
        pop.clock += static_cast<double>(full) * step.dt();
        st.substeps += full;
        continue;
      }
      pop.clock += static_cast<double>(idle) * step.dt();
      st.substeps += idle + 1;
      if (try_active_step(pop, step, q, log_idle, &st.deaths)) {
        ++st.events;
      } else {
        retry(step);
      }
    }
    if (options.check_invariants) check_population(pop, walkers);
    if (std::abs(t_end - pop.clock) <= eps) break;
  }
  pop.clock = t_end;
}

double StagedSsmcResult::final_fraction(VertexId v) const {
  if (final.positions.empty()) return 0.0;
  const auto n = std::count(final.positions.begin(), final.positions.end(), v);
  return static_cast<double>(n) / static_cast<double>(final.positions.size());
}

StagedSsmcResult run_staged_ssmc(const WeightedGraph& g, const StagedSsmcOptions& options,
                                 std::uint64_t seed) {
  if (!g.layered()) throw InvalidArgument("run_staged_ssmc: graph has no depth labels");
  if (options.walkers < 1) throw InvalidArgument("run_staged_ssmc: need at least one walker");
  const int depth = g.max_depth();
  StagedSsmcResult result;
  result.energy = options.energy > 0.0
                      ? options.energy
                      : std::pow(static_cast<double>(options.walkers) * depth, 2.0);
  const std::vector<double> objective = g.objective_vector(result.energy);

  result.final = WalkerPopulation(options.walkers, *g.root(), seed);
  WalkerPopulation& pop = result.final;
  result.snapshots.push_back(pop.positions);
  for (int j = 1; j <= depth; ++j) {
    const StepPlanner planner = [&](const WalkerPopulation& p) {
      const std::vector<VertexId> occupied = p.occupied();
      const std::vector<double> shifted = shifted_objective(objective, p);
      const double dt =
          select_dt(g, shifted, occupied, ScheduleMode::staged, j, 0.0, options.dt_cap);
      SubstochasticStep step(g.size(), dt);
      for (VertexId x : occupied) step.set_column(x, staged_rates(g, j, shifted, x));
      return step;
    };
    try {
      advance(pop, static_cast<double>(j), planner, options.advance, &result.stats);
    } catch (const ExtinctionError&) {
      result.extinct = true;
      break;
    }
    result.snapshots.push_back(pop.positions);
    result.stages_completed = j;
  }
  return result;
}

void lazy_step(WalkerPopulation& pop, const WeightedGraph& g, int j, int max_retries) {
  if (pop.positions.empty()) throw InvalidArgument("lazy_step: empty population");
  const std::vector<VertexId> occupied = pop.occupied();
  std::size_t d_max = 0;
  for (VertexId x : occupied) {
    if (g.depth(x) > j) throw InvalidArgument("lazy_step: walker below depth j");
    d_max = std::max(d_max, g.child_count(x));
  }
  if (d_max == 0) throw InvalidArgument("lazy_step: no occupied vertex has a child");

  std::vector<std::vector<Neighbor>> kids(g.size());
  for (VertexId x : occupied) kids[x] = g.children(x);

  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    std::vector<VertexId> next(pop.positions);
    for (VertexId& v : next) {
      const auto& c = kids[v];
      if (c.empty()) continue;
      const std::size_t u = pop.rng.index(d_max);
      if (u < c.size()) v = c[u].to;
    }
    std::vector<std::size_t> arrived;
    for (std::size_t i = 0; i < next.size(); ++i) {
      if (g.depth(next[i]) == j + 1) arrived.push_back(i);
    }
    if (arrived.empty()) continue;
    for (std::size_t i = 0; i < next.size(); ++i) {
      if (g.depth(next[i]) != j + 1) next[i] = next[arrived[pop.rng.index(arrived.size())]];
    }
    pop.positions = std::move(next);
    pop.clock = static_cast<double>(j + 1);
    return;
  }
  throw ExtinctionError("lazy_step: no walker advanced after " + std::to_string(max_retries) +
                        " redraws");
}

LazySsmcResult run_lazy_ssmc(const WeightedGraph& g, std::size_t walkers, std::uint64_t seed) {
  if (!g.layered()) throw InvalidArgument("run_lazy_ssmc: graph has no depth labels");
  if (walkers < 1) throw InvalidArgument("run_lazy_ssmc: need at least one walker");
  LazySsmcResult result;
  result.final = WalkerPopulation(walkers, *g.root(), seed);
  result.snapshots.push_back(result.final.positions);
  for (int j = 0; j < g.max_depth(); ++j) {
    bool any_child = false;
    for (VertexId x : result.final.occupied()) any_child = any_child || !g.is_leaf(x);
    if (!any_child) {
      result.stalled = true;
      break;
    }
    lazy_step(result.final, g, j);
    result.snapshots.push_back(result.final.positions);
  }
  return result;
}

double interpolated_step(WalkerPopulation& pop, const WeightedGraph& g, double s,
                         const InterpolatedOptions& options, double max_dt) {
  const std::vector<double> objective = g.objective_vector(1.0);
  const std::vector<VertexId> occupied = pop.occupied();
  const std::vector<double> shifted = shifted_objective(objective, pop);
  const double dt = std::min(
      select_dt(g, shifted, occupied, ScheduleMode::interpolated, 0, s, options.dt_cap), max_dt);
  SubstochasticStep step(g.size(), dt);
  for (VertexId x : occupied) step.set_column(x, interpolated_rates(g, s, shifted, x));
  if (options.check_invariants) step.validate();
  const std::size_t walkers = pop.size();
  double used = dt;
  bool ok = try_euler_step(pop, step, nullptr, nullptr);
  for (int h = 1; !ok && h <= 20; ++h) {
    used *= 0.5;
    ok = try_euler_step(pop, step.with_dt(used), nullptr, nullptr);
  }
  if (!ok) throw ExtinctionError("interpolated step: population went extinct");
  if (options.check_invariants && pop.size() != walkers) {
    throw Error("invariant violated: walker count changed");
  }
  return used;
}

std::vector<WalkerPopulation> run_interpolated_ssmc(const WeightedGraph& g, WalkerPopulation pop,
                                                    double t_end,
                                                    const InterpolatedOptions& options) {
  if (t_end > 1.0 || t_end < pop.clock) {
    throw InvalidArgument("run_interpolated_ssmc: need clock <= t_end <= 1");
  }
  for (double w : g.objective_vector(1.0)) {
    if (w < 0.0 || w > 1.0) {
      throw InvalidArgument("run_interpolated_ssmc: objective must lie in [0, 1]");
    }
  }
  std::vector<WalkerPopulation> trajectory{pop};
  const double eps = 1e-12;
  while (t_end - pop.clock > eps) {
    interpolated_step(pop, g, std::clamp(pop.clock, 0.0, 1.0), options, t_end - pop.clock);
    trajectory.push_back(pop);
  }
  return trajectory;
}

Eigen::VectorXd population_drift(const Eigen::VectorXd& eta, const Eigen::MatrixXd& h,
                                 double walkers) {
  if (walkers < 2.0) throw InvalidArgument("population_drift: need N >= 2");
  if (h.rows() != h.cols() || h.rows() != eta.size()) {
    throw InvalidArgument("population_drift: size mismatch");
  }
  const Eigen::Index n = eta.size();
  const Eigen::VectorXd theta = h.colwise().sum().transpose();
  Eigen::VectorXd out(n);
  for (Eigen::Index x = 0; x < n; ++x) {
    double acc = 0.0;
    for (Eigen::Index y = 0; y < n; ++y) {
      if (y == x) continue;
      acc += h(y, x) * eta(x) - h(x, y) * eta(y) + eta(x) * eta(y) * theta(y) / (walkers - 1.0);
    }
    // A walker dying at x that copies another walker at x leaves eta(x)
    // unchanged, hence the factor (N - eta(x)) / (N - 1) on the death term.
    out(x) = acc - eta(x) * theta(x) * (walkers - eta(x)) / (walkers - 1.0);
  }
  return out;
}

Eigen::VectorXd integrate_drift(Eigen::VectorXd eta, const Eigen::MatrixXd& h, double walkers,
                                double t_end, int steps) {
  if (steps < 1) throw InvalidArgument("integrate_drift: steps must be >= 1");
  const double dt = t_end / steps;
  for (int k = 0; k < steps; ++k) {
    const Eigen::VectorXd k1 = population_drift(eta, h, walkers);
    const Eigen::VectorXd k2 = population_drift(eta + 0.5 * dt * k1, h, walkers);
    const Eigen::VectorXd k3 = population_drift(eta + 0.5 * dt * k2, h, walkers);
    const Eigen::VectorXd k4 = population_drift(eta + dt * k3, h, walkers);
    eta += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return eta;
}

}  // namespace ssmc
