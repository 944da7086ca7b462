#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ssmc/graph.hpp"
#include "ssmc/gww.hpp"
#include "ssmc/stats.hpp"

using namespace ssmc;

namespace {

double success_rate(const WeightedGraph& g, std::size_t walkers, GwwRule rule, int trials,
                    std::uint64_t master) {
  int hits = 0;
  for (int t = 0; t < trials; ++t) hits += run_gww(g, walkers, rule, derive_seed(master, t)).success;
  return static_cast<double>(hits) / trials;
}

// root 0; depth 1: b=1 -> 4, c=2 -> 5, and the leaf a=3.
WeightedGraph two_branches() {
  return WeightedGraph(6, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}, {1, 4, 1.0}, {2, 5, 1.0}},
                       {2, 1, 1, 1, 0, 0}, std::vector<int>{0, 1, 1, 1, 2, 2});
}

}  // namespace

TEST_CASE("all walkers at leaves returns an output and leaves the state alone") {
  auto g = make_full_tree(1);
  GwwState s(5, 1, 1, 3);
  s.positions = {1, 2, 2, 1, 2};
  auto before = s.positions;
  std::vector<int> seen(3, 0);
  for (int r = 0; r < 2000; ++r) {
    auto out = gww_star_step(s, g);
    REQUIRE(out);
    ++seen[*out];
  }
  CHECK(s.positions == before);
  CHECK(s.depth == 1);
  // 2 of 5 walkers sit at vertex 1
  CHECK(std::abs(seen[1] / 2000.0 - 0.4) < 4.0 * binomial_sd(0.4, 2000));
}

TEST_CASE("a binary node splits its walkers binomially") {
  auto g = make_full_tree(1);
  const int n = 10;
  const int reps = 5000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    GwwState s(n, 0, 0, derive_seed(4, r));
    REQUIRE_FALSE(gww_star_step(s, g));
    double k = static_cast<double>(std::count(s.positions.begin(), s.positions.end(), 1u));
    sum += k;
    sum_sq += k * k;
  }
  double mean = sum / reps;
  double var = sum_sq / reps - mean * mean;
  CHECK(std::abs(mean - 5.0) < 4.0 * std::sqrt(2.5 / reps));
  CHECK(var == doctest::Approx(2.5).epsilon(0.1));
}

TEST_CASE("walkers that can move always move to a child") {
  auto g = make_comb(8);
  for (GwwRule rule : {GwwRule::walker_uniform, GwwRule::node_uniform}) {
    GwwState s(16, *g.root(), 0, 12);
    while (true) {
      auto before = s.positions;
      if (gww_step(s, g, rule)) break;
      REQUIRE(s.positions.size() == 16);
      for (std::size_t i = 0; i < before.size(); ++i) {
        if (g.is_leaf(before[i])) continue;
        CHECK(g.parent(s.positions[i]) == std::optional<VertexId>(before[i]));
      }
    }
  }
}

TEST_CASE("stranded walkers: walker-uniform versus node-uniform") {
  auto g = two_branches();
  const int reps = 6000;
  int node_hits = 0;
  int walker_hits = 0;
  for (int r = 0; r < reps; ++r) {
    std::vector<VertexId> start(99, 1);
    start.push_back(2);
    start.push_back(3);
    GwwState a(0, 0, 1, derive_seed(8, r));
    a.positions = start;
    GwwState b = a;
    REQUIRE_FALSE(gww_variant_step(a, g));
    REQUIRE_FALSE(gww_star_step(b, g));
    node_hits += a.positions.back() == 5;
    walker_hits += b.positions.back() == 5;
  }
  CHECK(std::abs(node_hits / double(reps) - 0.5) < 4.0 * binomial_sd(0.5, reps));
  CHECK(std::abs(walker_hits / double(reps) - 0.01) < 4.0 * binomial_sd(0.01, reps));
}

TEST_CASE("a single occupied node takes every stranded walker") {
  auto g = two_branches();
  for (GwwRule rule : {GwwRule::walker_uniform, GwwRule::node_uniform}) {
    GwwState s(0, 0, 1, 2);
    s.positions = {1, 1, 3, 3, 3};
    REQUIRE_FALSE(gww_step(s, g, rule));
    CHECK(std::all_of(s.positions.begin(), s.positions.end(), [](VertexId v) { return v == 4; }));
  }
}

TEST_CASE("walkers must share a layer") {
  auto g = two_branches();
  GwwState s(0, 0, 1, 2);
  s.positions = {1, 4};
  CHECK_THROWS_AS(gww_star_step(s, g), InvalidArgument);
  CHECK_THROWS_AS(run_gww(g, 0, GwwRule::walker_uniform, 1), InvalidArgument);
}

TEST_CASE("weighted child choice") {
  std::vector<double> w{1.0, 3.0};
  auto g = make_star(w);
  GwwOptions opts;
  opts.child_weight = [](double x) { return x; };
  const int reps = 8000;
  int heavy = 0;
  for (int r = 0; r < reps; ++r) {
    GwwState s(1, 0, 0, derive_seed(6, r));
    REQUIRE_FALSE(gww_star_step(s, g, opts));
    heavy += g.weight(0, s.positions[0]) == std::optional<double>(3.0);
  }
  CHECK(std::abs(heavy / double(reps) - 0.75) < 4.0 * binomial_sd(0.75, reps));
}

TEST_CASE("on the waterfall no walker is stranded before the last layer") {
  const int d = 5;
  const std::size_t n = 4;
  auto g = make_waterfall(d);
  const int trials = 4000;
  double p = 1.0 - std::pow(1.0 - std::pow(2.0, -d), static_cast<double>(n));
  for (GwwRule rule : {GwwRule::walker_uniform, GwwRule::node_uniform}) {
    double f = success_rate(g, n, rule, trials, 31);
    CHECK(std::abs(f - p) < 4.0 * binomial_sd(p, trials));
  }
  auto r = run_gww(g, n, GwwRule::node_uniform, 1);
  CHECK(r.final_depth == d);
}

TEST_CASE("waterfall success stays under 2N/2^D") {
  const int d = 8;
  const std::size_t n = 4;
  const int trials = 4000;
  auto g = make_waterfall(d);
  int hits = 0;
  for (int t = 0; t < trials; ++t)
    hits += run_gww(g, n, GwwRule::node_uniform, derive_seed(77, t)).success;
  CHECK(wilson_interval(hits, trials).high <= 2.0 * n / std::pow(2.0, d));
}

TEST_CASE("comb success decays with depth and more walkers do not rescue it") {
  const int trials = 2000;
  double shallow = success_rate(make_comb(6), 16, GwwRule::walker_uniform, trials, 1);
  double deep = success_rate(make_comb(10), 16, GwwRule::walker_uniform, trials, 2);
  double deep_more = success_rate(make_comb(10), 64, GwwRule::walker_uniform, trials, 3);
  CHECK(deep < shallow);
  CHECK(deep_more - deep < shallow - deep);
}

TEST_CASE("runs are reproducible") {
  auto g = make_comb(7);
  auto a = run_gww(g, 8, GwwRule::walker_uniform, 99);
  auto b = run_gww(g, 8, GwwRule::walker_uniform, 99);
  CHECK(a.final_positions == b.final_positions);
  CHECK(a.output == b.output);
}
