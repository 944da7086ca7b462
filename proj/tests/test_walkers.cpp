#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ssmc/graph.hpp"
#include "ssmc/walkers.hpp"

using namespace ssmc;

namespace {

WalkerPopulation population(std::vector<VertexId> positions, std::uint64_t seed = 1) {
  WalkerPopulation pop;
  pop.positions = std::move(positions);
  pop.rng = Rng(seed);
  return pop;
}

// Expected d eta / dt read straight off the particle generator: each walker
// jumps along -H(y, x) and dies at rate theta_x, re-landing on a uniform other
// walker.
Eigen::VectorXd particle_drift(const std::vector<int>& pos, const Eigen::MatrixXd& h) {
  const auto n = h.rows();
  const auto walkers = pos.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < walkers; ++i) {
    const int x = pos[i];
    double theta = h.col(x).sum();
    for (Eigen::Index y = 0; y < n; ++y) {
      if (y == x) continue;
      double rate = -h(y, x);
      out(y) += rate;
      out(x) -= rate;
    }
    for (std::size_t k = 0; k < walkers; ++k) {
      if (k == i) continue;
      double rate = theta / static_cast<double>(walkers - 1);
      out(pos[k]) += rate;
      out(x) -= rate;
    }
  }
  return out;
}

Eigen::MatrixXd random_generator(int n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (y == x || u(gen) < 0.4) continue;
      double w = u(gen);
      h(y, x) = -w;
      h(x, x) += w;
    }
    h(x, x) += 2.0 * u(gen);
  }
  return h;
}

}  // namespace

TEST_CASE("shifted objective") {
  std::vector<double> w{3.0, 5.0, 9.0, 1.0};
  auto pop = population({0, 1, 2});
  auto s = shifted_objective(w, pop);
  CHECK(s[0] == 0.0);
  CHECK(s[1] == 2.0);
  CHECK(s[2] == 6.0);
  auto single = population({2, 2});
  CHECK(shifted_objective(w, single)[2] == 0.0);
  std::vector<double> z{0.0, 4.0};
  auto at_zero = population({0, 1});
  CHECK(shifted_objective(z, at_zero) == z);
}

TEST_CASE("select_dt examples") {
  auto g = make_path(1);
  std::vector<double> shifted{9.0, 0.0};
  CHECK(select_dt(g, shifted, {1}, ScheduleMode::staged, 1, 0.0, 1.0) == doctest::Approx(0.1));

  std::vector<double> flat{0.0, 0.0};
  CHECK(select_dt(g, flat, {0, 1}, ScheduleMode::interpolated, 0, 1.0, 7.0) == 7.0);
  // (1 - s) L / d = 0.01 while no deaths: the cap binds.
  CHECK(select_dt(g, flat, {0}, ScheduleMode::interpolated, 0, 0.99, 10.0) == doctest::Approx(10.0));
  CHECK(select_dt(g, flat, {0}, ScheduleMode::interpolated, 0, 0.5, 10.0) == doctest::Approx(2.0));

  CHECK_THROWS_AS(select_dt(g, flat, {}, ScheduleMode::staged, 1, 0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(select_dt(g, flat, {0}, ScheduleMode::staged, 1, 0.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(select_dt(g, flat, {0}, ScheduleMode::interpolated, 0, 1.5, 1.0),
                  InvalidArgument);
}

TEST_CASE("selected steps are substochastic") {
  std::mt19937_64 gen(5);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto g = make_random_tree(4, 1, 3, 0.5, 2.0, seed);
    auto objective = g.objective_vector(40.0);
    std::uniform_int_distribution<VertexId> pick(0, static_cast<VertexId>(g.size() - 1));
    for (int j = 1; j <= g.max_depth(); ++j) {
      std::vector<VertexId> pos;
      for (int k = 0; k < 6; ++k) {
        VertexId v = pick(gen);
        if (g.depth(v) <= j) pos.push_back(v);
      }
      if (pos.empty()) continue;
      auto pop = population(pos);
      auto shifted = shifted_objective(objective, pop);
      auto occupied = pop.occupied();
      double dt = select_dt(g, shifted, occupied, ScheduleMode::staged, j, 0.0, 1.0);
      SubstochasticStep step(g.size(), dt);
      for (VertexId x : occupied) step.set_column(x, staged_rates(g, j, shifted, x));
      CHECK_NOTHROW(step.validate());
    }
  }
  auto cube = make_hypercube(6);
  auto objective = cube.objective_vector();
  for (double s : {0.0, 0.3, 0.9, 1.0}) {
    auto pop = population({0, 7, 63, 21});
    auto shifted = shifted_objective(objective, pop);
    double dt = select_dt(cube, shifted, pop.occupied(), ScheduleMode::interpolated, 0, s, 5.0);
    SubstochasticStep step(cube.size(), dt);
    for (VertexId x : pop.occupied()) step.set_column(x, interpolated_rates(cube, s, shifted, x));
    CHECK_NOTHROW(step.validate());
  }
}

TEST_CASE("step validation rejects oversized steps") {
  SubstochasticStep step(2, 1.0);
  step.set_column(0, RateColumn{{{1, 0.5}}, 0.6});
  CHECK_THROWS_AS(step.validate(), InvalidArgument);
  CHECK_NOTHROW(step.with_dt(0.5).validate());
}

TEST_CASE("euler_step examples") {
  SUBCASE("no deaths at a flat site") {
    auto g = make_hypercube(3);
    auto pop = population(std::vector<VertexId>(16, 0), 3);
    auto shifted = shifted_objective(g.objective_vector(), pop);
    SubstochasticStep step(g.size(), 0.01);
    step.set_column(0, interpolated_rates(g, 0.9, shifted, 0));
    CHECK(step.death(0) == 0.0);
    euler_step(pop, step);
    CHECK(pop.size() == 16);
  }
  SUBCASE("the last walker dying is extinction") {
    auto pop = population({0});
    SubstochasticStep step(1, 0.5);
    step.set_column(0, RateColumn{{}, 2.0});
    CHECK_THROWS_AS(euler_step(pop, step), ExtinctionError);
    CHECK(pop.positions == std::vector<VertexId>{0});
  }
  SUBCASE("identity step") {
    auto pop = population({0, 1, 1});
    SubstochasticStep step(2, 0.25);
    step.set_column(0, RateColumn{});
    step.set_column(1, RateColumn{});
    euler_step(pop, step);
    CHECK(pop.positions == std::vector<VertexId>{0, 1, 1});
    CHECK(pop.clock == doctest::Approx(0.25));
  }
}

TEST_CASE("staged SSMC on a single edge ends at the child") {
  auto g = make_path(1);
  StagedSsmcOptions opts;
  opts.walkers = 16;
  opts.energy = 1e4;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto r = run_staged_ssmc(g, opts, seed);
    REQUIRE_FALSE(r.extinct);
    CHECK(r.final_fraction(1) == 1.0);
  }
}

TEST_CASE("staged SSMC is deterministic in its seed") {
  auto g = make_waterfall(6);
  StagedSsmcOptions opts;
  opts.walkers = 12;
  opts.advance.check_invariants = true;
  auto a = run_staged_ssmc(g, opts, 77);
  auto b = run_staged_ssmc(g, opts, 77);
  CHECK(a.snapshots == b.snapshots);
  CHECK(a.stats.substeps == b.stats.substeps);
  CHECK(a.snapshots.size() == 7);
  for (const auto& snap : a.snapshots) CHECK(snap.size() == 12);
  auto c = run_staged_ssmc(g, opts, 78);
  CHECK(a.snapshots != c.snapshots);
}

TEST_CASE("skip-ahead and naive sub-stepping agree in law") {
  auto g = make_random_tree(3, 1, 3, 0.5, 2.0, 9);
  StagedSsmcOptions skip;
  skip.walkers = 6;
  skip.energy = 15.0;
  StagedSsmcOptions naive = skip;
  naive.advance.mode = StepMode::naive;
  const int runs = 3000;
  const std::size_t n = g.size();
  Eigen::MatrixXd fa = Eigen::MatrixXd::Zero(runs, n);
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(runs, n);
  for (int r = 0; r < runs; ++r) {
    auto a = run_staged_ssmc(g, skip, derive_seed(1, r));
    auto b = run_staged_ssmc(g, naive, derive_seed(2, r));
    REQUIRE_FALSE(a.extinct);
    REQUIRE_FALSE(b.extinct);
    auto ea = a.final.empirical(n);
    auto eb = b.final.empirical(n);
    for (std::size_t v = 0; v < n; ++v) {
      fa(r, v) = ea[v];
      fb(r, v) = eb[v];
    }
  }
  for (VertexId v : g.layer(3)) {
    double ma = fa.col(v).mean();
    double mb = fb.col(v).mean();
    double va = (fa.col(v).array() - ma).square().sum() / (runs - 1);
    double vb = (fb.col(v).array() - mb).square().sum() / (runs - 1);
    double se = std::sqrt((va + vb) / runs);
    CHECK(std::abs(ma - mb) <= 4.0 * se + 1e-12);
  }
}

TEST_CASE("lazy_step with every site branching twice") {
  auto g = make_full_tree(2);
  const std::size_t n = 4000;
  auto pop = population(std::vector<VertexId>(n, *g.root()), 11);
  lazy_step(pop, g, 0);
  auto counts = pop.counts(g.size());
  CHECK(counts[0] == 0);
  CHECK(counts[1] + counts[2] == n);
  // Binomial(n, 1/2): 4 sd is about 126.
  CHECK(std::abs(static_cast<double>(counts[1]) - n / 2.0) < 130.0);
}

TEST_CASE("lazy_step with mixed branching") {
  // root 0; a=1 with children 3,4; b=2 with the single child 5.
  WeightedGraph g(6, {{0, 1, 1.0}, {0, 2, 1.0}, {1, 3, 1.0}, {1, 4, 1.0}, {2, 5, 1.0}},
                  {2, 1, 1, 0, 0, 0}, std::vector<int>{0, 1, 1, 2, 2, 2});
  // Two walkers at a always move. Each of the two at b moves w.p. 1/2; the
  // stayers copy a uniform arrival. Enumerating the number k of movers from b:
  // E[count at 5] = 1/2 (1 + 1/3) + 1/4 * 2 = 7/6.
  const double expected = 7.0 / 24.0;
  const int reps = 20000;
  double sum = 0.0;
  double sum_sq = 0.0;
  auto pop = population({}, 21);
  for (int r = 0; r < reps; ++r) {
    pop.positions = {1, 1, 2, 2};
    lazy_step(pop, g, 1);
    double f = pop.empirical(g.size())[5];
    sum += f;
    sum_sq += f * f;
    for (VertexId v : pop.positions) CHECK(g.depth(v) == 2);
  }
  double m = sum / reps;
  double sd = std::sqrt((sum_sq / reps - m * m) / reps);
  CHECK(std::abs(m - expected) < 4.0 * sd);
}

TEST_CASE("lazy_step keeps the spine fraction from collapsing on the waterfall") {
  auto g = make_waterfall(6);
  std::vector<VertexId> spine{*g.target()};
  while (auto p = g.parent(spine.back())) spine.push_back(*p);
  std::reverse(spine.begin(), spine.end());
  VertexId tooth = 0;
  for (VertexId v : g.layer(2))
    if (v != spine[2]) tooth = v;
  const std::size_t walkers = 16;
  const std::size_t on_spine = 2;
  const double m = static_cast<double>(on_spine) / walkers;
  const int reps = 8000;
  double sum = 0.0;
  double sum_sq = 0.0;
  auto pop = population({}, 5);
  for (int r = 0; r < reps; ++r) {
    pop.positions.assign(walkers, tooth);
    for (std::size_t k = 0; k < on_spine; ++k) pop.positions[k] = spine[2];
    lazy_step(pop, g, 2);
    double f = pop.empirical(g.size())[spine[3]];
    sum += f;
    sum_sq += f * f;
  }
  double mean = sum / reps;
  double sd = std::sqrt((sum_sq / reps - mean * mean) / reps);
  CHECK(mean >= m / (1.0 + m) - 4.0 * sd);
}

TEST_CASE("lazy SSMC reaches the last layer") {
  auto g = make_comb(6);
  auto r = run_lazy_ssmc(g, 8, 3);
  CHECK(r.snapshots.size() == 7);
  for (VertexId v : r.final.positions) CHECK(g.depth(v) == 6);
  CHECK(run_lazy_ssmc(g, 8, 3).final.positions == r.final.positions);
}

TEST_CASE("interpolated dynamics") {
  auto g = make_hypercube(6);
  auto objective = g.objective_vector();
  SUBCASE("no deaths at s = 0") {
    auto pop = population({63, 0, 5});
    auto shifted = shifted_objective(objective, pop);
    for (VertexId x : pop.occupied()) CHECK(interpolated_rates(g, 0.0, shifted, x).death_rate == 0.0);
  }
  SUBCASE("no deaths at a flat minimum") {
    auto pop = population(std::vector<VertexId>(8, 0));
    auto shifted = shifted_objective(objective, pop);
    CHECK(interpolated_rates(g, 0.7, shifted, 0).death_rate == 0.0);
  }
  SUBCASE("selection pulls walkers below pure diffusion") {
    InterpolatedOptions opts;
    opts.dt_cap = 0.05;
    opts.check_invariants = true;
    // Without deaths each bit flips at rate (1 - s)/d, so the expected
    // fraction of ones at s = 1 is 1/2 + e^{-1/d}/2.
    const double diffusion = 0.5 + 0.5 * std::exp(-1.0 / 6.0);
    const int seeds = 200;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int seed = 0; seed < seeds; ++seed) {
      auto snaps = run_interpolated_ssmc(
          g, population(std::vector<VertexId>(32, 63), derive_seed(9, seed)), 1.0, opts);
      REQUIRE_FALSE(snaps.empty());
      const auto& last = snaps.back();
      CHECK(last.clock == doctest::Approx(1.0));
      CHECK(last.size() == 32);
      double m = 0.0;
      for (VertexId v : last.positions) m += objective[v];
      m /= 32.0;
      sum += m;
      sum_sq += m * m;
    }
    const double mean = sum / seeds;
    const double se = std::sqrt((sum_sq / seeds - mean * mean) / seeds);
    CHECK(mean < diffusion - 3.0 * se);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(run_interpolated_ssmc(g, population({0}), 1.5), InvalidArgument);
  }
}

TEST_CASE("population drift examples") {
  SUBCASE("symmetric, no potential, uniform") {
    Eigen::MatrixXd h(3, 3);
    h << 2, -1, -1, -1, 2, -1, -1, -1, 2;
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(3, 4.0);
    CHECK(population_drift(eta, h, 12.0).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("everyone at one isolated vertex") {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 2);
    h(0, 0) = 3.0;
    Eigen::VectorXd eta(2);
    eta << 5.0, 0.0;
    // every death re-lands on the same vertex
    CHECK(population_drift(eta, h, 5.0).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("two vertices") {
    Eigen::MatrixXd h(2, 2);
    h << 1.5, -0.5, -1.0, 2.0;
    std::vector<int> pos{0, 0, 0, 1};
    Eigen::VectorXd eta(2);
    eta << 3.0, 1.0;
    CHECK((population_drift(eta, h, 4.0) - particle_drift(pos, h)).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(population_drift(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Ones(1, 1), 1.0),
                  InvalidArgument);
}

TEST_CASE("population drift matches the particle generator") {
  std::mt19937_64 gen(13);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2 + rep % 5;
    auto h = random_generator(n, gen);
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<int> pos(2 + rep % 9);
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
    for (int& p : pos) {
      p = pick(gen);
      eta(p) += 1.0;
    }
    auto drift = population_drift(eta, h, static_cast<double>(pos.size()));
    CHECK((drift - particle_drift(pos, h)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(drift.sum()) < 1e-12);
  }
}

TEST_CASE("integrated drift conserves the population") {
  std::mt19937_64 gen(2);
  auto h = random_generator(4, gen);
  Eigen::VectorXd eta(4);
  eta << 10.0, 0.0, 0.0, 0.0;
  auto out = integrate_drift(eta, h, 10.0, 2.0, 400);
  CHECK(out.sum() == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(out.minCoeff() >= -1e-12);
}
