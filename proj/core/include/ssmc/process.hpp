#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "ssmc/graph.hpp"

namespace ssmc {

/// Law of the substochastic process: mass on live vertices plus the mass
/// absorbed in the cemetery.
struct Distribution {
  Eigen::VectorXd mass;
  double cemetery = 0.0;

  static Distribution delta(std::size_t vertex_count, VertexId v);
  static Distribution from_mass(Eigen::VectorXd mass);

  std::size_t size() const { return static_cast<std::size_t>(mass.size()); }
  double live_mass() const { return mass.sum(); }
  /// Throws InvalidArgument unless entries are >= -tol and live + cemetery = 1.
  void validate(double tol = 1e-9) const;
  /// Law conditioned on survival (cemetery 0). Throws ExtinctionError when no
  /// live mass is left.
  Distribution renormalized() const;
};

/// exp(-H t) psi on the live vertices; the lost mass moves to the cemetery.
Distribution evolve_exact(const Distribution& psi, const Eigen::MatrixXd& h, double t);

struct PairProbabilities {
  double stay = 0.0;
  double child = 0.0;
};

/// Parent/child pair with generator [[E + w, -w], [-w, w]] started at the
/// parent: probability of still being at the parent and of being at the child
/// after time t.
PairProbabilities closed_form_pair(double energy, double w, double t);

/// 2x2 generator used by closed_form_pair (index 0 = parent).
Eigen::Matrix2d pair_generator(double energy, double w);

/// Generator of stage j over the vertices of depth <= j (returned in
/// `support`, increasing id order): the stage Laplacian L_j plus the diagonal
/// E * (j - depth) + shift.
Eigen::MatrixXd stage_generator(const WeightedGraph& g, double energy, int j,
                                std::vector<VertexId>& support, double shift = 0.0);

/// Runs the staged process from psi0 for stages 1..D and returns the
/// renormalized law at every integer time 0..D.
std::vector<Distribution> run_staged_exact(const WeightedGraph& g, double energy,
                                           const Distribution& psi0, double shift = 0.0);

/// One step of the limiting process: x -> child y with weight w e^{-w},
/// normalized over the layer.
Eigen::VectorXd limit_step(const Eigen::VectorXd& dist, const WeightedGraph& g);

/// Half the l1 distance.
double tv_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// Uniform law on the vertices of depth j.
Eigen::VectorXd uniform_on_layer(const WeightedGraph& g, int j);

}  // namespace ssmc
