#include "ssmc/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ssmc/gww.hpp"
#include "ssmc/harness.hpp"
#include "ssmc/process.hpp"
#include "ssmc/qa.hpp"
#include "ssmc/walkers.hpp"

namespace ssmc {

namespace {

constexpr std::uint64_t kSeed = 20240611;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

ExperimentConfig quiet(Experiment e) {
  ExperimentConfig c = default_config(e);
  c.seed = kSeed;
  c.record_timing = false;
  c.check_invariants = true;
  return c;
}

CriterionResult closed_form() {
  double worst = 0.0;
  for (double e : {1.0, 10.0, 100.0}) {
    for (double w : {0.5, 1.0, 2.0}) {
      for (double t : {0.1, 0.25, 0.5, 1.0}) {
        const PairProbabilities cf = closed_form_pair(e, w, t);
        const Distribution out =
            evolve_exact(Distribution::delta(2, 0), pair_generator(e, w), t);
        worst = std::max({worst, std::abs(cf.stay - out.mass(0)), std::abs(cf.child - out.mass(1))});
      }
    }
  }
  return {1, "closed-form pair vs matrix exponential", worst <= 1e-10,
          "max |difference| " + fmt(worst) + " over 36 (E, w, t) (limit 1e-10)"};
}

CriterionResult star_scaling() {
  const std::vector<double> weights{0.5, 1.0, 2.0};
  bool ok = true;
  std::string detail;
  for (double e : {100.0, 1000.0}) {
    const auto a = star_child_errors(weights, e);
    const auto b = star_child_errors(weights, 2 * e);
    const double ratio =
        *std::max_element(a.begin(), a.end()) / *std::max_element(b.begin(), b.end());
    ok = ok && ratio >= 3.0 && ratio <= 5.0;
    detail += "E=" + fmt(e) + ": ratio " + fmt(ratio) + " (per child";
    for (std::size_t k = 0; k < a.size(); ++k) detail += " " + fmt(a[k] / b[k]);
    detail += "); ";
  }
  return {2, "child-probability error scales as 1/E^2", ok, detail + "need [3, 5]"};
}

CriterionResult limit_scaling() {
  ExperimentConfig c = quiet(Experiment::thm3_scaling);
  c.trials = 10;
  const ExperimentOutcome out = run_experiment(c);
  double lo = 1.0, hi = 0.0;
  for (const TrialRecord& r : out.records) {
    lo = std::min(lo, r.statistic);
    hi = std::max(hi, r.statistic);
  }
  return {3, "staged process converges to the limit process at rate 1/E", out.summary.passed,
          "err(2E)/err(E) in [" + fmt(lo) + ", " + fmt(hi) + "] over " +
              std::to_string(c.trials) + " random 3-layer trees at E=1000 (need [0.3, 0.7])"};
}

CriterionResult uniform() {
  const ExperimentOutcome out = run_experiment(quiet(Experiment::uniform_corollary));
  return {4, "equal weights give the uniform law on the last layer", out.summary.passed,
          "TV " + fmt(out.summary.mean_statistic) + " <= " + fmt(out.summary.threshold)};
}

CriterionResult comb_gww() {
  ExperimentConfig deep = quiet(Experiment::comb_gww);
  deep.depth = 24;
  deep.walkers = 64;
  ExperimentConfig shallow = deep;
  shallow.depth = 8;
  ExperimentConfig wide = deep;
  wide.walkers = 256;
  wide.seed = kSeed + 1;
  const double f8 = run_experiment(shallow).summary.frequency;
  const double f24 = run_experiment(deep).summary.frequency;
  const double f24_wide = run_experiment(wide).summary.frequency;
  const bool ok = f24 <= f8 / 4.0 && f24_wide <= f8;
  return {5, "comb defeats walker-uniform GWW", ok,
          "freq D=8,N=64 " + fmt(f8) + "; D=24,N=64 " + fmt(f24) + " (<= " + fmt(f8 / 4) +
              "); D=24,N=256 " + fmt(f24_wide) + " (<= " + fmt(f8) + ")"};
}

CriterionResult waterfall_gww() {
  const ExperimentOutcome out = run_experiment(quiet(Experiment::waterfall_gww));
  const Summary& s = out.summary;
  return {6, "waterfall defeats node-uniform GWW", s.passed,
          "freq " + fmt(s.frequency) + ", Wilson upper " + fmt(s.wilson.high) +
              " <= 2N/2^D = " + fmt(s.threshold)};
}

CriterionResult ssmc_trees() {
  bool ok = true;
  std::string detail;
  for (Experiment e : {Experiment::waterfall_ssmc, Experiment::comb_ssmc}) {
    const ExperimentOutcome out = run_experiment(quiet(e));
    const Summary& s = out.summary;
    ok = ok && s.passed;
    detail += to_string(e) + ": freq " + fmt(s.frequency) + ", Wilson lower " +
              fmt(s.wilson.low) + "; ";
  }
  return {7, "SSMC reaches the target on both trees", ok,
          detail + "need >= 0.7 (1/12 - 1/64) = " + fmt(0.7 * (1.0 / 12 - 1.0 / 64))};
}

CriterionResult qa_bound() {
  bool ok = true;
  double worst_ratio = 0.0;
  double worst_drift = 0.0;
  for (int d = 2; d <= 6; ++d) {
    ExperimentConfig c = quiet(Experiment::qa_amplitude);
    c.depth = d;
    c.trials = 1;
    const ExperimentOutcome out = run_experiment(c);
    ok = ok && out.summary.passed;
    worst_ratio = std::max(worst_ratio, out.summary.mean_statistic * std::ldexp(1.0, d));
    for (const auto& [k, v] : out.summary.extras) {
      if (k == "max_norm_drift") worst_drift = std::max(worst_drift, v);
    }
  }
  return {8, "quantum annealing target probability <= 1/2^D", ok,
          "D=2..6, comb and waterfall, " + std::to_string(standard_schedules().size()) +
              " schedules x 4 stage times x 3 energies: max 2^D |psi_target|^2 " +
              fmt(worst_ratio) + ", max norm drift " + fmt(worst_drift)};
}

CriterionResult branch_amplitude() {
  const double w1 = 1.0;
  const std::vector<double> weights{w1, w1};
  const WeightedGraph g = make_star(weights);
  const auto kids = g.children(*g.root());
  double worst = 0.0;
  int runs = 0;
  for (const StageSchedule& sched : standard_schedules()) {
    for (double tf : {0.1, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0}) {
      for (double e : {0.0, 1.0, 5.0}) {
        QaOptions o;
        o.schedule = sched;
        o.stage_time = tf;
        o.energy = e;
        const QaResult r = qa_staged_run(g, o);
        for (const Neighbor& c : kids) worst = std::max(worst, std::abs(r.state.amplitudes(c.to)));
        ++runs;
      }
    }
  }
  const double bound = 1.0 / std::sqrt(2.0) + 1e-8;
  return {9, "symmetric branch leaf amplitude <= 1/sqrt 2", worst <= bound,
          "max leaf |amplitude| " + fmt(worst) + " over " + std::to_string(runs) +
              " schedules (limit " + fmt(bound) + ")"};
}

CriterionResult descent() {
  const ExperimentOutcome out = run_experiment(quiet(Experiment::descent));
  const Summary& s = out.summary;
  double bound = 0.0;
  for (const auto& [k, v] : s.extras) {
    if (k == "bound") bound = v;
  }
  return {10, "gradient-descent step on the two-site instance", s.passed,
          "all-descended freq " + fmt(s.frequency) + " >= bound " + fmt(bound) + " - 3 sd = " +
              fmt(s.threshold)};
}

CriterionResult meanfield() {
  const ExperimentOutcome out = run_experiment(quiet(Experiment::drift_meanfield));
  const Summary& s = out.summary;
  std::string detail;
  for (const auto& [k, v] : s.extras) detail += k + " " + fmt(v) + "; ";
  return {11, "ensemble mean follows the population drift equation", s.passed,
          detail + "limit 0.05"};
}

CriterionResult invariants() {
  std::vector<std::string> failures;
  auto expect = [&](bool cond, const std::string& what) {
    if (!cond) failures.push_back(what);
  };
  int checks = 0;

  // Walker conservation and column completion are enforced inside the
  // simulators when check_invariants is set; any violation throws.
  try {
    for (const WeightedGraph& g : {make_waterfall(6), make_comb(6), make_full_tree(4, 2)}) {
      for (StepMode mode : {StepMode::skip_ahead, StepMode::naive}) {
        StagedSsmcOptions o;
        o.walkers = 16;
        o.energy = mode == StepMode::naive ? 50.0 : 0.0;
        o.advance.mode = mode;
        o.advance.check_invariants = true;
        for (std::uint64_t s = 0; s < 5; ++s) {
          const StagedSsmcResult a = run_staged_ssmc(g, o, kSeed + s);
          const StagedSsmcResult b = run_staged_ssmc(g, o, kSeed + s);
          for (const auto& snap : a.snapshots) expect(snap.size() == o.walkers, "walker count");
          expect(a.snapshots == b.snapshots && a.final.clock == b.final.clock,
                 "staged SSMC replay");
          ++checks;
        }
      }
    }
    const WeightedGraph cube = make_hypercube(6);
    InterpolatedOptions io;
    io.check_invariants = true;
    io.dt_cap = 0.05;
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto a = run_interpolated_ssmc(cube, WalkerPopulation(20, 63, kSeed + s), 1.0, io);
      const auto b = run_interpolated_ssmc(cube, WalkerPopulation(20, 63, kSeed + s), 1.0, io);
      expect(a.size() == b.size(), "interpolated replay length");
      for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) {
        expect(a[k].positions == b[k].positions, "interpolated replay");
        expect(a[k].positions.size() == 20, "walker count");
      }
      ++checks;
    }
    for (std::uint64_t s = 0; s < 5; ++s) {
      const WeightedGraph g = make_waterfall(8);
      const GwwResult a = run_gww(g, 32, GwwRule::node_uniform, kSeed + s);
      const GwwResult b = run_gww(g, 32, GwwRule::node_uniform, kSeed + s);
      expect(a.final_positions == b.final_positions && a.final_positions.size() == 32,
             "GWW replay");
      const LazySsmcResult la = run_lazy_ssmc(g, 32, kSeed + s);
      const LazySsmcResult lb = run_lazy_ssmc(g, 32, kSeed + s);
      expect(la.snapshots == lb.snapshots, "lazy replay");
      for (const auto& snap : la.snapshots) expect(snap.size() == 32, "walker count");
      checks += 2;
    }
    ExperimentConfig c = quiet(Experiment::waterfall_ssmc);
    c.trials = 8;
    c.depth = 6;
    expect(run_experiment(c).records == run_experiment(c).records, "experiment replay");
    ++checks;
  } catch (const Error& e) {
    failures.push_back(e.what());
  }

  // Shift invariance of the exact process.
  double worst_shift = 0.0;
  for (const WeightedGraph& g : {make_full_tree(3, 2), random_three_layer_tree(kSeed),
                                 make_comb(4), make_waterfall(4)}) {
    const Distribution start = Distribution::delta(g.size(), *g.root());
    const auto base = run_staged_exact(g, 100.0, start);
    for (double a : {0.5, 3.0, 10.0}) {
      const auto shifted = run_staged_exact(g, 100.0, start, a);
      for (std::size_t j = 0; j < base.size(); ++j) {
        worst_shift = std::max(worst_shift, tv_distance(base[j].mass, shifted[j].mass));
      }
      ++checks;
    }
  }
  expect(worst_shift <= 1e-9, "shift invariance");

  std::string detail = std::to_string(checks) + " checks; max shift TV " + fmt(worst_shift);
  if (!failures.empty()) detail += "; failed: " + failures.front();
  return {12, "universal invariants (conservation, completion, shift, replay)", failures.empty(),
          detail};
}

}  // namespace

std::string format_criterion(const CriterionResult& r) {
  std::ostringstream out;
  out << (r.passed ? "PASS" : "FAIL") << "  [" << (r.id < 10 ? " " : "") << r.id << "] " << r.name
      << ": " << r.detail;
  char t[32];
  std::snprintf(t, sizeof t, " (%.1fs)", r.seconds);
  out << t;
  return out.str();
}

CriterionResult run_criterion(int id) {
  const auto start = std::chrono::steady_clock::now();
  if (id < 1 || id > 12) throw InvalidArgument("no acceptance criterion " + std::to_string(id));
  CriterionResult r;
  try {
    switch (id) {
      case 1: r = closed_form(); break;
      case 2: r = star_scaling(); break;
      case 3: r = limit_scaling(); break;
      case 4: r = uniform(); break;
      case 5: r = comb_gww(); break;
      case 6: r = waterfall_gww(); break;
      case 7: r = ssmc_trees(); break;
      case 8: r = qa_bound(); break;
      case 9: r = branch_amplitude(); break;
      case 10: r = descent(); break;
      case 11: r = meanfield(); break;
      case 12: r = invariants(); break;
    }
  } catch (const std::exception& e) {
    r = {id, "criterion " + std::to_string(id), false, std::string("raised: ") + e.what()};
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<CriterionResult> run_acceptance(
    const std::function<void(const CriterionResult&)>& on_result) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= 12; ++id) {
    out.push_back(run_criterion(id));
    if (on_result) on_result(out.back());
  }
  return out;
}

}  // namespace ssmc
