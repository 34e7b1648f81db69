// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "dqn/bfgs.hpp"
#include "dqn/dfp.hpp"
#include "dqn/errors.hpp"
#include "dqn/framework.hpp"
#include "dqn/harness.hpp"
#include "oracles.hpp"

using namespace dqn;
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double plain_dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Tracking identity, measured from node states independently of the library:
// ||sum_i (g_i - v_i)|| / n relative to the largest ||g_i||, ||v_i|| seen.
// A non-finite gap means the states overflowed; the run is then diverged and
// stops being checked.
struct TrackingMonitor {
  double scale = 0.0;
  double worst = 0.0;
  std::size_t checks = 0;
  std::size_t violations = 0;
  bool overflowed = false;

  bool observe(const std::vector<NodeState>& states) {
    const std::size_t d = states.front().g.size();
    Vector diff(d, 0.0);
    for (const auto& s : states) {
      scale = std::max({scale, oracle::vec_norm(s.g), oracle::vec_norm(s.v)});
      for (std::size_t j = 0; j < d; ++j) diff[j] += s.g[j] - s.v[j];
    }
    const double gap = oracle::vec_norm(diff) / static_cast<double>(states.size()) / std::max(scale, 1e-300);
    if (!std::isfinite(gap)) {
      overflowed = true;
      return false;
    }
    worst = std::max(worst, gap);
    ++checks;
    if (gap > 1e-11) ++violations;
    return true;
  }
};

// Tracking results over every run the acceptance checks step.
struct TrackingTally {
  double worst = 0.0;
  std::size_t runs = 0;
  std::size_t checks = 0;
  std::size_t violations = 0;
  std::size_t diverged = 0;

  void add(const TrackingMonitor& m, bool diverged_run) {
    worst = std::max(worst, m.worst);
    checks += m.checks;
    violations += m.violations;
    diverged += diverged_run || m.overflowed;
    ++runs;
  }
};

TrackingTally tracking;

// Steps until the relative error reaches target or max_iterations pass.
// Returns the epochs at the first hit, or infinity.
double epochs_to_target(const Experiment& e, double target, std::size_t max_iterations) {
  Simulation sim(e.problem, e.mixing.weights, e.run);
  TrackingMonitor monitor;
  monitor.observe(sim.states());
  double hit = kInf;
  bool diverged = false;
  try {
    for (std::size_t k = 0; k < max_iterations; ++k) {
      sim.step();
      if (!monitor.observe(sim.states())) break;
      if (sim.relative_error() <= target) {
        hit = sim.epochs();
        break;
      }
    }
  } catch (const DivergedError&) {
    diverged = true;
  }
  tracking.add(monitor, diverged);
  return hit;
}

ExperimentConfig with_seed(ExperimentConfig c, std::uint64_t seed) {
  c.run.seed = seed;
  return c;
}

// 1. Two-loop recursion against the explicit matrix.
Outcome two_loop_matches_explicit() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> dim_dist(1, 20), mem_dist(1, 10);
  double worst = 0.0;
  std::size_t failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = dim_dist(rng);
    bfgs::Params p;
    p.memory = mem_dist(rng);
    CurvatureMemory memory(p.memory);
    Vector x(d, 0.0), g = oracle::random_vector(rng, d);
    Vector s_last, y_last;
    // walk a random quadratic with noisy gradients until the window is full
    const Matrix a = oracle::random_spd(rng, d);
    for (std::size_t k = 0; memory.size() < p.memory && k < 10 * p.memory; ++k) {
      Vector x_new = x;
      for (std::size_t j = 0; j < d; ++j) x_new[j] += std::normal_distribution<double>(0.0, 1.0)(rng);
      Vector g_new = oracle::naive_matvec(a, x_new);
      for (double& v : g_new) v += std::normal_distribution<double>(0.0, 0.3)(rng);
      if (auto pair = bfgs::make_pair(x_new, x, g_new, g, p)) {
        s_last = pair->s;
        y_last = pair->y;
        memory.push(*pair);
      }
      x = std::move(x_new);
      g = std::move(g_new);
    }
    if (memory.empty()) continue;
    const double h0 = bfgs::initial_scalar(s_last, y_last, p);
    const Vector q = oracle::random_vector(rng, d);
    const Vector fast = bfgs::two_loop(memory, h0, q);
    const Matrix h = bfgs::explicit_matrix(memory, h0, d);
    const Vector slow = oracle::naive_matvec(h, q);
    const Vector eig = oracle::eigenvalues_by_bisection(h);
    const double h_norm = std::max(std::abs(eig.front()), std::abs(eig.back()));
    Vector diff(d);
    for (std::size_t j = 0; j < d; ++j) diff[j] = fast[j] - slow[j];
    const double ratio = oracle::vec_norm(diff) / (oracle::vec_norm(q) * h_norm);
    worst = std::max(worst, ratio);
    if (!(ratio <= 1e-10)) ++failures;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {failures == 0 && seconds < 10.0,
          fmt("1000 states, worst ||diff||/(||g|| ||H||) = %.2e, %.2f s", worst, seconds)};
}

// 2 and 3 share one full ls-kappa10 run per method.
struct CurvatureRunResult {
  std::size_t pairs_checked = 0;  // every admitted pair
  std::size_t admitted = 0;       // library count, for comparison
  std::size_t damping_violations = 0;
  std::size_t matrices = 0;
  std::size_t eigen_violations = 0;
  double lowest = kInf;   // smallest lambda_min seen
  double highest = 0.0;   // largest lambda_max seen
  EigenBounds bounds{};
  double floor = 0.0;
  double seconds = 0.0;
};

CurvatureRunResult audit_curvature_run(Method method) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig cfg = preset("ls-kappa10", method);
  cfg.run.audit_every = 0;  // audited here instead
  const Experiment e = build_experiment(cfg);
  const RunConfig& rc = e.run;
  Simulation sim(e.problem, e.mixing.weights, rc);
  TrackingMonitor monitor;
  monitor.observe(sim.states());

  CurvatureRunResult r;
  r.bounds = method_bounds(rc);
  r.floor = method == Method::dfp ? rc.dfp.rho : 0.0;
  const double eps = method == Method::dfp ? rc.dfp.epsilon : rc.bfgs.epsilon;
  std::vector<Vector> last_s(e.problem.nodes());

  for (std::size_t k = 0; k < rc.iterations; ++k) {
    sim.step();
    monitor.observe(sim.states());
    for (std::size_t i = 0; i < e.problem.nodes(); ++i) {
      const NodeState& node = sim.states()[i];
      // a pair was admitted this round when the newest entry changed
      if (!node.memory.empty() && node.memory.newest().s != last_s[i]) {
        const CurvaturePair& p = node.memory.newest();
        last_s[i] = p.s;
        const Vector& left = method == Method::dfp ? p.s_hat : p.s;
        const double lhs = plain_dot(left, p.y_hat);
        const double rhs = 0.25 * plain_dot(left, left) / (p.h0 + eps);
        ++r.pairs_checked;
        if (!(lhs >= rhs) || !(p.theta > 0.0 && p.theta <= 1.0)) ++r.damping_violations;
      }

      const auto h = current_hessian_inverse(node, rc);
      if (!h) continue;
      ++r.matrices;
      const std::size_t d = h->rows();
      const bool above_floor = oracle::eigen_count_below(*h, std::nextafter(r.floor, kInf)) == 0;
      const bool above_m1 = oracle::eigen_count_below(*h, r.bounds.lower) == 0;
      const bool below_m2 = oracle::eigen_count_below(*h, std::nextafter(r.bounds.upper, kInf)) == d;
      bool symmetric = true;
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < a; ++b) symmetric = symmetric && (*h)(a, b) == (*h)(b, a);
      if (!(above_floor && above_m1 && below_m2 && symmetric)) ++r.eigen_violations;
      const Vector eig = oracle::eigenvalues_by_bisection(*h);
      r.lowest = std::min(r.lowest, eig.front());
      r.highest = std::max(r.highest, eig.back());
    }
  }
  r.admitted = sim.admitted_pairs();
  tracking.add(monitor, false);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

// 5. Full batch with refresh every step against exact local gradients.
Outcome variance_reduction_degenerates() {
  std::size_t compared = 0, mismatches = 0;
  for (Method method : {Method::identity, Method::dfp, Method::bfgs}) {
    ExperimentConfig cfg = preset("ls-kappa10", method);
    cfg.problem.samples_per_node = 100;
    cfg.run.batch = cfg.problem.samples_per_node;
    cfg.run.batch_ratio.reset();
    cfg.period = 1;
    cfg.run.audit_every = 0;
    const Experiment e = build_experiment(cfg);
    RunConfig exact_cfg = e.run;
    exact_cfg.exact_gradients = true;
    Simulation vr(e.problem, e.mixing.weights, e.run);
    Simulation exact(e.problem, e.mixing.weights, exact_cfg);
    TrackingMonitor monitor;
    for (int k = 0; k < 200; ++k) {
      vr.step();
      exact.step();
      monitor.observe(vr.states());
      for (std::size_t i = 0; i < e.problem.nodes(); ++i) {
        ++compared;
        const NodeState& a = vr.states()[i];
        const NodeState& b = exact.states()[i];
        if (a.x != b.x || a.g != b.g || a.v != b.v) ++mismatches;
      }
    }
    tracking.add(monitor, false);
  }
  return {mismatches == 0, fmt("%zu node states over 3 methods, %zu differ in any bit", compared, mismatches)};
}

// 6. Quasi-Newton against the tuned first-order baseline.
Outcome convergence_ordering() {
  bool pass = true;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Experiment k10 = build_experiment(with_seed(preset("ls-kappa10", Method::dfp), seed));
    const double dfp10 = epochs_to_target(k10, 1e-8, k10.run.iterations);

    const Experiment k2000 = build_experiment(with_seed(preset("ls-kappa2000", Method::dfp), seed));
    const double dfp2000 = epochs_to_target(k2000, 1e-8, k2000.run.iterations);

    double best = kInf, best_alpha = 0.0;
    for (double alpha : {0.25, 0.5, 1.0, 2.0, 3.0, 4.0}) {
      ExperimentConfig cfg = with_seed(preset("ls-kappa2000", Method::identity), seed);
      cfg.run.alpha = alpha;
      const double e = epochs_to_target(build_experiment(cfg), 1e-8, 2 * cfg.run.iterations);
      if (e < best || best_alpha == 0.0) best = e, best_alpha = alpha;
    }
    pass = pass && dfp10 <= 120.0 && std::isfinite(dfp2000) && best > dfp2000;
    const std::string baseline =
        std::isfinite(best) ? fmt("%.1f (alpha %g)", best, best_alpha) : std::string("not reached for any alpha");
    detail += fmt("%sseed %llu: dfp k10 %.1f, dfp k2000 %.1f, identity k2000 ", seed == 1 ? "" : "; ",
                  static_cast<unsigned long long>(seed), dfp10, dfp2000) +
              baseline;
  }
  return {pass, detail + " epochs to 1e-8"};
}

Matrix stacked_gram(const GlobalProblem& gp) {
  Matrix g(gp.dim, gp.dim);
  for (const auto& p : gp.locals)
    for (std::size_t l = 0; l < p.samples(); ++l)
      for (std::size_t i = 0; i < gp.dim; ++i)
        for (std::size_t j = 0; j < gp.dim; ++j) g(i, j) += p.features(l, i) * p.features(l, j);
  return g;
}

// 7. Spectrum of the stacked design matrix.
Outcome condition_numbers() {
  bool pass = true;
  std::string detail;
  struct Case {
    double lo, hi, tol;
  };
  for (const Case c : {Case{0.1, 1.0, 1e-9}, Case{0.001, 2.0, 1e-6}}) {
    double worst = 0.0, kappa = 0.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const GlobalProblem gp = synth_least_squares(20, 500, {.dim = 8, .lambda_min = c.lo, .lambda_max = c.hi, .seed = seed});
      const Vector eig = oracle::eigenvalues_by_bisection(stacked_gram(gp), 1e-15);
      const double err = std::max(std::abs(eig.front() - c.lo) / c.lo, std::abs(eig.back() - c.hi) / c.hi);
      worst = std::max(worst, err);
      kappa = eig.back() / eig.front();
      pass = pass && err <= c.tol;
    }
    detail += fmt("%skappa %.6g (worst relative eigen error %.1e, tol %.0e)", detail.empty() ? "" : "; ", kappa, worst,
                  c.tol);
  }
  return {pass, detail};
}

// 8. Gradients against central differences.
Outcome finite_differences() {
  std::mt19937_64 rng(808);
  const GlobalProblem ls = synth_least_squares(20, 500, {.dim = 8, .lambda_min = 0.1, .lambda_max = 1.0, .seed = 3});
  const GlobalProblem lg = synth_logistic(20, 250, 22, 0.001, 3);
  bool pass = true;
  std::string detail;
  for (const GlobalProblem* gp : {&ls, &lg}) {
    double worst = 0.0;
    for (int point = 0; point < 100; ++point) {
      const Vector x = oracle::random_vector(rng, gp->dim);
      const LocalProblem& p = gp->locals[static_cast<std::size_t>(point) % gp->nodes()];
      const Vector g = full_grad(p, x);
      const Vector fd = oracle::finite_difference_grad([&](const Vector& z) { return local_loss(p, z); }, x);
      double scale = 1.0;
      for (double v : g) scale = std::max(scale, std::abs(v));
      for (std::size_t j = 0; j < g.size(); ++j) worst = std::max(worst, std::abs(g[j] - fd[j]) / scale);
    }
    pass = pass && worst <= 1e-6;
    detail += fmt("%s%s worst %.1e", detail.empty() ? "" : ", ", gp == &ls ? "least squares" : "logistic", worst);
  }
  return {pass, "100 points each, " + detail};
}

// 9. Epochs to 1e-6 as the graph changes, method settings held fixed.
struct TopologyScore {
  std::size_t ordered = 0;
  std::size_t total = 0;
  std::string detail;
};

TopologyScore topology_ordering(Method method) {
  struct Graph {
    const char* label;
    TopologyKind kind;
    double connectivity;
  };
  const Graph graphs[] = {{"cycle", TopologyKind::cycle, 0.0},
                          {"star", TopologyKind::star, 0.0},
                          {"r0.2", TopologyKind::random, 0.2},
                          {"r0.3", TopologyKind::random, 0.3},
                          {"r0.5", TopologyKind::random, 0.5}};
  TopologyScore score;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    std::vector<std::pair<double, double>> points;  // sigma, epochs
    std::string row;
    for (const Graph& g : graphs) {
      ExperimentConfig cfg = with_seed(preset("ijcnn1-r0.5", method), seed);
      cfg.topology.kind = g.kind;
      cfg.topology.connectivity = g.connectivity;
      cfg.run.audit_every = 0;
      const Experiment e = build_experiment(cfg);
      const double epochs = epochs_to_target(e, 1e-6, 3000);
      points.emplace_back(e.mixing.sigma, epochs);
      row += fmt(" %s(%.3f)=%.1f", g.label, e.mixing.sigma, epochs);
    }
    std::sort(points.begin(), points.end());
    for (std::size_t k = 0; k + 1 < points.size(); ++k) {
      ++score.total;
      if (points[k].second < points[k + 1].second) ++score.ordered;
    }
    score.detail += fmt("%sseed %llu:", seed == 1 ? "" : ";", static_cast<unsigned long long>(seed)) + row;
  }
  return score;
}

// 10. Byte-identical traces for reruns.
Outcome deterministic_reruns(const fs::path& dir) {
  std::size_t runs = 0, differing = 0, failed = 0;
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  for (const std::string& name : preset_names()) {
    for (const char* method : {"identity", "dfp", "bfgs"}) {
      std::string bytes[2];
      for (int rep = 0; rep < 2; ++rep) {
        const fs::path out = dir / (name + "_" + method + "_" + std::to_string(rep) + ".csv");
        std::ostringstream sink_out, sink_err;
        const int code = cli_main({"run", "--preset", name, "--method", method, "--iters", "40", "--seed", "7",
                                   "--deterministic", "--out", out.string()},
                                  sink_out, sink_err);
        if (code != kExitOk) ++failed;
        bytes[rep] = slurp(out);
      }
      ++runs;
      if (bytes[0].empty() || bytes[0] != bytes[1]) ++differing;
    }
  }
  return {differing == 0 && failed == 0,
          fmt("%zu preset/method pairs rerun, %zu differ, %zu non-zero exits", runs, differing, failed)};
}

}  // namespace

int main() {
  std::map<int, std::pair<std::string, Outcome>> results;
  auto record = [&](int id, const std::string& name, Outcome o) {
    results[id] = {name, std::move(o)};
    std::cerr << "  finished criterion " << id << "\n";
  };

  record(1, "two-loop recursion matches explicit BFGS matrix", two_loop_matches_explicit());

  const CurvatureRunResult dfp_run = audit_curvature_run(Method::dfp);
  const CurvatureRunResult bfgs_run = audit_curvature_run(Method::bfgs);
  record(2, "damped pairs satisfy the curvature floor",
         {dfp_run.damping_violations == 0 && bfgs_run.damping_violations == 0 && dfp_run.pairs_checked > 0 &&
              dfp_run.pairs_checked == dfp_run.admitted && bfgs_run.pairs_checked == bfgs_run.admitted,
          fmt("dfp %zu pairs, %zu violations; bfgs %zu pairs, %zu violations", dfp_run.pairs_checked,
              dfp_run.damping_violations, bfgs_run.pairs_checked, bfgs_run.damping_violations)});
  record(3, "every approximation stays inside [M1, M2]",
         {dfp_run.eigen_violations == 0 && bfgs_run.eigen_violations == 0 && dfp_run.matrices > 0 &&
              bfgs_run.matrices > 0 && dfp_run.seconds + bfgs_run.seconds < 300.0,
          fmt("dfp %zu matrices, eig in [%.6g, %.6g] vs [%.6g, %.6g], rho %g; bfgs %zu matrices, eig in [%.6g, "
              "%.6g] vs [%.3g, %.6g]; %zu violations, %.1f s",
              dfp_run.matrices, dfp_run.lowest, dfp_run.highest, dfp_run.bounds.lower, dfp_run.bounds.upper,
              dfp_run.floor, bfgs_run.matrices, bfgs_run.lowest, bfgs_run.highest, bfgs_run.bounds.lower,
              bfgs_run.bounds.upper, dfp_run.eigen_violations + bfgs_run.eigen_violations,
              dfp_run.seconds + bfgs_run.seconds)});

  record(5, "full batch with T = 1 is bitwise exact gradient tracking", variance_reduction_degenerates());
  record(6, "quasi-Newton converges linearly and beats the tuned baseline", convergence_ordering());
  record(7, "synthetic spectra give kappa 10 and 2000", condition_numbers());
  record(8, "gradients match central differences", finite_differences());

  const TopologyScore bfgs_topo = topology_ordering(Method::bfgs);
  record(9, "smaller sigma needs fewer epochs to 1e-6",
         {bfgs_topo.ordered * 5 >= bfgs_topo.total * 4,
          fmt("bfgs: %zu of %zu adjacent comparisons ordered; ", bfgs_topo.ordered, bfgs_topo.total) +
              bfgs_topo.detail});

  char dir_template[] = "/tmp/dqn_acceptance_XXXXXX";
  const char* dir = mkdtemp(dir_template);
  if (dir == nullptr) {
    record(10, "reruns produce byte-identical traces", {false, "could not create a scratch directory"});
  } else {
    record(10, "reruns produce byte-identical traces", deterministic_reruns(dir));
    fs::remove_all(dir);
  }

  record(4, "mean g equals mean v on every iteration",
         {tracking.violations == 0 && tracking.checks > 0,
          fmt("%zu runs, %zu iterations checked, worst relative gap %.2e, %zu violations, diverged runs checked "
              "up to divergence: %zu",
              tracking.runs, tracking.checks, tracking.worst, tracking.violations, tracking.diverged)});

  const TopologyScore dfp_topo = topology_ordering(Method::dfp);

  bool all = true;
  for (const auto& [id, entry] : results) {
    const auto& [name, o] = entry;
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << name << " | " << o.detail << "\n";
  }
  std::cout << "info  dfp topology ordering: " << dfp_topo.ordered << " of " << dfp_topo.total
            << " adjacent comparisons ordered | " << dfp_topo.detail << "\n";
  return all ? 0 : 1;
}
