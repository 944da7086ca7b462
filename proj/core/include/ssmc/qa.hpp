#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssmc/graph.hpp"

namespace ssmc {

struct QuantumState {
  Eigen::VectorXcd amplitudes;
  double time = 0.0;

  static QuantumState delta(std::size_t vertex_count, VertexId v);
  double norm() const { return amplitudes.norm(); }
  double probability(VertexId v) const { return std::norm(amplitudes(v)); }
};

/// Real symmetric generator as a function of time.
using Hamiltonian = std::function<Eigen::MatrixXd(double)>;

/// Time-ordered product of exact step unitaries exp(-i H(t_mid) h) over
/// `steps` equal sub-steps of [t0, t1].
QuantumState schrodinger_evolve(const QuantumState& psi, const Hamiltonian& h, double t0,
                                double t1, int steps);

struct AdaptiveEvolution {
  QuantumState state;
  int steps = 0;
  double difference = 0.0;  // distance between the last two refinements
  bool converged = false;
};

/// Doubles the number of midpoint sub-steps, Richardson-extrapolating each
/// pair of refinements, until two successive extrapolants differ by less
/// than `tolerance` (2-norm); returns the last extrapolant.
AdaptiveEvolution schrodinger_evolve_adaptive(const QuantumState& psi, const Hamiltonian& h,
                                              double t0, double t1, double tolerance = 1e-9,
                                              int max_steps = 1 << 12);

/// 2-norm of psi restricted to each part. Throws InvalidArgument when a
/// vertex with nonzero amplitude is not covered.
std::vector<double> component_norms(const QuantumState& psi,
                                    const std::vector<std::vector<VertexId>>& parts);

/// Connected components of the stage-j subgraph, plus a singleton for every
/// vertex outside it, so the result partitions all vertices.
std::vector<std::vector<VertexId>> stage_components(const WeightedGraph& g, int j);

/// Within-stage interpolation a(u) L_j + b(u) W for u in [0, 1].
struct StageSchedule {
  std::string name;
  std::function<double(double)> a;
  std::function<double(double)> b;
  bool constant = false;  // a and b do not depend on u
};

StageSchedule linear_schedule();
/// Linear, quadratic, sine-squared, constant (a = b = 1) and driver-only.
std::vector<StageSchedule> standard_schedules();

struct QaOptions {
  double stage_time = 1.0;
  double energy = 1.0;
  StageSchedule schedule = linear_schedule();
  double tolerance = 1e-9;
  int max_steps = 1 << 12;
  int stages = -1;  // -1 runs every stage of the tree
};

struct QaResult {
  QuantumState state;
  double target_probability = 0.0;
  double norm_drift = 0.0;       // | ||psi|| - 1 | at the end
  double component_drift = 0.0;  // largest per-stage change of a component norm
  int max_steps = 0;             // finest sub-step count used in any stage
  bool converged = true;
};

/// Quantum annealing under the staged schedule from the root.
QaResult qa_staged_run(const WeightedGraph& g, const QaOptions& options);

}  // namespace ssmc
