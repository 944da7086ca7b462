#include "ssmc/qa.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ssmc/linalg.hpp"

namespace ssmc {

QuantumState QuantumState::delta(std::size_t vertex_count, VertexId v) {
  if (v >= vertex_count) throw InvalidArgument("quantum state: vertex out of range");
  QuantumState s;
  s.amplitudes = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(vertex_count));
  s.amplitudes(v) = 1.0;
  return s;
}

QuantumState schrodinger_evolve(const QuantumState& psi, const Hamiltonian& h, double t0,
                                double t1, int steps) {
  if (steps < 1) throw InvalidArgument("schrodinger_evolve: steps must be >= 1");
  if (!(t1 >= t0)) throw InvalidArgument("schrodinger_evolve: t1 < t0");
  QuantumState out = psi;
  const double dt = (t1 - t0) / steps;
  for (int k = 0; k < steps; ++k) {
    const Eigen::MatrixXd hk = h(t0 + (k + 0.5) * dt);
    if (hk.rows() != out.amplitudes.size() || hk.cols() != out.amplitudes.size()) {
      throw InvalidArgument("schrodinger_evolve: generator size mismatch");
    }
    out.amplitudes = unitary_propagator(hk, dt) * out.amplitudes;
  }
  out.time = t1;
  return out;
}

AdaptiveEvolution schrodinger_evolve_adaptive(const QuantumState& psi, const Hamiltonian& h,
                                              double t0, double t1, double tolerance,
                                              int max_steps) {
  // The midpoint product is second order, so (4 psi_2n - psi_n) / 3 removes
  // the leading error term. Refine until two extrapolants agree.
  AdaptiveEvolution result;
  int n = 1;
  QuantumState coarse = schrodinger_evolve(psi, h, t0, t1, n);
  QuantumState fine = schrodinger_evolve(psi, h, t0, t1, 2 * n);
  Eigen::VectorXcd previous = (4.0 * fine.amplitudes - coarse.amplitudes) / 3.0;
  while (2 * n < max_steps) {
    n *= 2;
    coarse = std::move(fine);
    fine = schrodinger_evolve(psi, h, t0, t1, 2 * n);
    Eigen::VectorXcd extrapolated = (4.0 * fine.amplitudes - coarse.amplitudes) / 3.0;
    result.difference = (extrapolated - previous).norm();
    previous = std::move(extrapolated);
    if (result.difference < tolerance) {
      result.converged = true;
      break;
    }
  }
  result.steps = 2 * n;
  result.state.amplitudes = std::move(previous);
  result.state.time = t1;
  return result;
}

std::vector<double> component_norms(const QuantumState& psi,
                                    const std::vector<std::vector<VertexId>>& parts) {
  const auto n = static_cast<std::size_t>(psi.amplitudes.size());
  std::vector<char> covered(n, 0);
  std::vector<double> out;
  out.reserve(parts.size());
  for (const auto& part : parts) {
    double sq = 0.0;
    for (VertexId v : part) {
      if (v >= n) throw InvalidArgument("component_norms: vertex out of range");
      covered[v] = 1;
      sq += std::norm(psi.amplitudes(v));
    }
    out.push_back(std::sqrt(sq));
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (!covered[v] && std::abs(psi.amplitudes(static_cast<Eigen::Index>(v))) > 0.0) {
      throw InvalidArgument("component_norms: partition misses occupied vertex " +
                            std::to_string(v));
    }
  }
  return out;
}

std::vector<std::vector<VertexId>> stage_components(const WeightedGraph& g, int j) {
  const std::vector<Edge> edges = stage_edges(g, j);
  std::vector<VertexId> parent(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) parent[v] = static_cast<VertexId>(v);
  auto find = [&](VertexId v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (const Edge& e : edges) parent[find(e.u)] = find(e.v);
  std::vector<std::vector<VertexId>> groups(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) groups[find(static_cast<VertexId>(v))].push_back(static_cast<VertexId>(v));
  std::vector<std::vector<VertexId>> out;
  for (auto& group : groups) {
    if (!group.empty()) out.push_back(std::move(group));
  }
  return out;
}

StageSchedule linear_schedule() {
  return {"linear", [](double u) { return 1.0 - u; }, [](double u) { return u; }, false};
}

std::vector<StageSchedule> standard_schedules() {
  using std::numbers::pi;
  return {
      linear_schedule(),
      {"quadratic", [](double u) { return (1.0 - u) * (1.0 - u); },
       [](double u) { return u * u; }, false},
      {"sine", [](double u) { return std::cos(pi * u / 2) * std::cos(pi * u / 2); },
       [](double u) { return std::sin(pi * u / 2) * std::sin(pi * u / 2); }, false},
      {"constant", [](double) { return 1.0; }, [](double) { return 1.0; }, true},
      {"driver_only", [](double) { return 1.0; }, [](double) { return 0.0; }, true},
      {"late_driver", [](double u) { return u; }, [](double u) { return 1.0 - u; }, false},
  };
}

QaResult qa_staged_run(const WeightedGraph& g, const QaOptions& options) {
  if (!g.layered()) throw InvalidArgument("qa_staged_run: graph has no depth labels");
  if (!(options.stage_time > 0.0)) throw InvalidArgument("qa_staged_run: stage time must be > 0");
  const int stages = options.stages < 0 ? g.max_depth() : options.stages;
  if (stages > g.max_depth()) throw InvalidArgument("qa_staged_run: too many stages");

  const std::size_t n = g.size();
  const std::vector<double> objective = g.objective_vector(options.energy);
  QaResult result;
  result.state = QuantumState::delta(n, *g.root());

  for (int j = 1; j <= stages; ++j) {
    const Eigen::MatrixXd lap = stage_subgraph(g, j).embedded(n);
    const Eigen::MatrixXd w = Eigen::Map<const Eigen::VectorXd>(
                                  objective.data(), static_cast<Eigen::Index>(n))
                                  .asDiagonal();
    const double t0 = (j - 1) * options.stage_time;
    const double tf = options.stage_time;
    const StageSchedule& sched = options.schedule;
    const Hamiltonian h = [&](double t) -> Eigen::MatrixXd {
      const double u = std::clamp((t - t0) / tf, 0.0, 1.0);
      return sched.a(u) * lap + sched.b(u) * w;
    };

    const auto parts = stage_components(g, j);
    const std::vector<double> before = component_norms(result.state, parts);
    QuantumState next;
    if (sched.constant) {
      next = schrodinger_evolve(result.state, h, t0, t0 + tf, 1);
      result.max_steps = std::max(result.max_steps, 1);
    } else {
      AdaptiveEvolution ev = schrodinger_evolve_adaptive(result.state, h, t0, t0 + tf,
                                                         options.tolerance, options.max_steps);
      result.converged = result.converged && ev.converged;
      result.max_steps = std::max(result.max_steps, ev.steps);
      next = std::move(ev.state);
    }
    const std::vector<double> after = component_norms(next, parts);
    for (std::size_t k = 0; k < parts.size(); ++k) {
      result.component_drift = std::max(result.component_drift, std::abs(after[k] - before[k]));
    }
    result.state = std::move(next);
  }
  result.norm_drift = std::abs(result.state.norm() - 1.0);
  if (const auto target = g.target()) result.target_probability = result.state.probability(*target);
  return result;
}

}  // namespace ssmc
