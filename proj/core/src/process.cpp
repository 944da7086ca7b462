#include "ssmc/process.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ssmc/linalg.hpp"

namespace ssmc {

Distribution Distribution::delta(std::size_t vertex_count, VertexId v) {
  if (v >= vertex_count) throw InvalidArgument("delta: vertex out of range");
  Distribution d;
  d.mass = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vertex_count));
  d.mass(v) = 1.0;
  return d;
}

Distribution Distribution::from_mass(Eigen::VectorXd mass) {
  Distribution d;
  d.cemetery = 1.0 - mass.sum();
  d.mass = std::move(mass);
  return d;
}

void Distribution::validate(double tol) const {
  if (!mass.allFinite() || !std::isfinite(cemetery)) {
    throw InvalidArgument("distribution: non-finite entries");
  }
  if (mass.size() > 0 && mass.minCoeff() < -tol) {
    throw InvalidArgument("distribution: negative mass");
  }
  if (cemetery < -tol) throw InvalidArgument("distribution: negative cemetery mass");
  if (std::abs(mass.sum() + cemetery - 1.0) > tol) {
    throw InvalidArgument("distribution: live mass plus cemetery is not 1");
  }
}

Distribution Distribution::renormalized() const {
  const double live = live_mass();
  if (!(live > 0.0) || !std::isfinite(live)) {
    throw ExtinctionError("all probability mass reached the cemetery");
  }
  Distribution out;
  out.mass = mass / live;
  return out;
}

Distribution evolve_exact(const Distribution& psi, const Eigen::MatrixXd& h, double t) {
  if (!(t >= 0.0)) throw InvalidArgument("evolve_exact: negative duration");
  if (h.rows() != psi.mass.size() || h.cols() != psi.mass.size()) {
    throw InvalidArgument("evolve_exact: generator and distribution sizes differ");
  }
  if (!h.allFinite()) throw InvalidArgument("evolve_exact: generator has non-finite entries");
  Distribution out;
  out.mass = expm(-t * h) * psi.mass;
  out.cemetery = psi.cemetery + (psi.mass.sum() - out.mass.sum());
  return out;
}

Eigen::Matrix2d pair_generator(double energy, double w) {
  Eigen::Matrix2d h;
  h << energy + w, -w, -w, w;
  return h;
}

PairProbabilities closed_form_pair(double energy, double w, double t) {
  if (!(energy > 0.0) || !(w > 0.0) || !(t > 0.0) || !(t <= 1.0)) {
    throw InvalidArgument("closed_form_pair: need E > 0, w > 0, 0 < t <= 1");
  }
  // Eigenvalues of the generator are (E + 2w)/2 -+ delta. Written in terms of
  // the two decays so that large E neither overflows cosh nor cancels.
  const double delta = std::sqrt(energy * energy / 4.0 + w * w);
  const double mid = (energy + 2.0 * w) / 2.0;
  const double slow = std::exp(-energy * w / (mid + delta) * t);
  const double fast = std::exp(-(mid + delta) * t);
  const double split = -slow * std::expm1(-2.0 * delta * t);  // slow - fast
  // 1 -+ E/(2 delta), the first without cancellation.
  const double minus = 2.0 * w * w / (delta * (2.0 * delta + energy));
  const double plus = 2.0 - minus;
  return {(minus * slow + plus * fast) / 2.0, (w / delta) * split / 2.0};
}

Eigen::MatrixXd stage_generator(const WeightedGraph& g, double energy, int j,
                                std::vector<VertexId>& support, double shift) {
  if (!g.layered()) throw InvalidArgument("stage_generator: graph has no depth labels");
  support.clear();
  for (int d = 0; d <= std::min(j, g.max_depth()); ++d) {
    const auto layer = g.layer(d);
    support.insert(support.end(), layer.begin(), layer.end());
  }
  std::sort(support.begin(), support.end());
  const Laplacian lap = stage_subgraph(g, j);
  const auto n = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  std::vector<Eigen::Index> position(g.size(), -1);
  for (Eigen::Index i = 0; i < n; ++i) position[support[static_cast<std::size_t>(i)]] = i;
  for (std::size_t a = 0; a < lap.size(); ++a) {
    for (std::size_t b = 0; b < lap.size(); ++b) {
      const double v = lap.matrix(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      if (v != 0.0) h(position[lap.support[a]], position[lap.support[b]]) += v;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    h(i, i) += energy * (j - g.depth(support[static_cast<std::size_t>(i)])) + shift;
  }
  return h;
}

std::vector<Distribution> run_staged_exact(const WeightedGraph& g, double energy,
                                           const Distribution& psi0, double shift) {
  if (!g.layered()) throw InvalidArgument("run_staged_exact: graph has no depth labels");
  if (psi0.size() != g.size()) throw InvalidArgument("run_staged_exact: size mismatch");
  if (!(energy >= 0.0)) throw InvalidArgument("run_staged_exact: energy must be >= 0");
  if (!(shift >= 0.0)) {
    throw InvalidArgument("run_staged_exact: negative shift would make the process creative");
  }
  psi0.validate();
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (psi0.mass(static_cast<Eigen::Index>(v)) != 0.0 && g.depth(static_cast<VertexId>(v)) > 1) {
      throw InvalidArgument("run_staged_exact: initial law must be supported on G_1");
    }
  }

  std::vector<Distribution> laws;
  laws.push_back(psi0.renormalized());
  std::vector<VertexId> support;
  for (int j = 1; j <= g.max_depth(); ++j) {
    const Eigen::MatrixXd h = stage_generator(g, energy, j, support, shift);
    const Distribution& prev = laws.back();
    Eigen::VectorXd local(static_cast<Eigen::Index>(support.size()));
    for (std::size_t i = 0; i < support.size(); ++i) {
      local(static_cast<Eigen::Index>(i)) = prev.mass(support[i]);
    }
    const Eigen::VectorXd evolved = expm(-h) * local;
    Distribution next;
    next.mass = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.size()));
    for (std::size_t i = 0; i < support.size(); ++i) {
      // Round-off can leave tiny negative entries in the exponential.
      next.mass(support[i]) = std::max(0.0, evolved(static_cast<Eigen::Index>(i)));
    }
    next.cemetery = 1.0 - next.mass.sum();
    laws.push_back(next.renormalized());
  }
  return laws;
}

Eigen::VectorXd limit_step(const Eigen::VectorXd& dist, const WeightedGraph& g) {
  if (static_cast<std::size_t>(dist.size()) != g.size()) {
    throw InvalidArgument("limit_step: size mismatch");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dist.size());
  int layer = -1;
  for (std::size_t x = 0; x < g.size(); ++x) {
    const double p = dist(static_cast<Eigen::Index>(x));
    if (p == 0.0) continue;
    if (p < 0.0) throw InvalidArgument("limit_step: negative probability");
    const int d = g.depth(static_cast<VertexId>(x));
    if (layer >= 0 && d != layer) {
      throw InvalidArgument("limit_step: distribution is not confined to one layer");
    }
    layer = d;
    for (const Neighbor& c : g.children(static_cast<VertexId>(x))) {
      out(c.to) += p * c.w * std::exp(-c.w);
    }
  }
  const double total = out.sum();
  if (!(total > 0.0)) throw ExtinctionError("limit_step: no occupied vertex has a child");
  return out / total;
}

double tv_distance(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw InvalidArgument("tv_distance: size mismatch");
  return 0.5 * (p - q).cwiseAbs().sum();
}

Eigen::VectorXd uniform_on_layer(const WeightedGraph& g, int j) {
  const auto layer = g.layer(j);
  if (layer.empty()) throw InvalidArgument("uniform_on_layer: empty layer " + std::to_string(j));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.size()));
  for (VertexId v : layer) out(v) = 1.0 / static_cast<double>(layer.size());
  return out;
}

}  // namespace ssmc
