#include "dqn/framework.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "dqn/errors.hpp"

namespace dqn {

namespace {

template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min(threads, n);
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  // lowest node first, matching the sequential order
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double max_state_norm(const std::vector<NodeState>& states) {
  double m = 0.0;
  for (const auto& s : states) m = std::max({m, norm(s.g), norm(s.v)});
  return m;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::identity: return "identity";
    case Method::dfp: return "dfp";
    case Method::bfgs: return "bfgs";
  }
  return "unknown";
}

std::size_t RunConfig::batch_for(std::size_t m) const {
  if (batch_ratio) {
    const auto b = static_cast<std::size_t>(std::llround(*batch_ratio * static_cast<double>(m)));
    return std::clamp<std::size_t>(b, 1, m);
  }
  return batch;
}

void RunConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive and finite");
  if (period < 1) throw ConfigError("checkpoint period must be >= 1");
  if (batch_ratio) {
    if (!(*batch_ratio > 0.0 && *batch_ratio <= 1.0)) throw ConfigError("batch ratio must lie in (0, 1]");
  } else if (batch < 1) {
    throw ConfigError("batch size must be >= 1");
  }
  if (method == Method::dfp) dfp.validate();
  if (method == Method::bfgs) bfgs.validate();
}

EigenBounds method_bounds(const RunConfig& config) {
  switch (config.method) {
    case Method::dfp: return dfp::bounds(config.dfp);
    case Method::bfgs: return bfgs::bounds(config.bfgs);
    case Method::identity: break;
  }
  return {1.0, 1.0};
}

std::vector<NodeState> init_states(const GlobalProblem& gp, const Vector& x0, const RunConfig& config) {
  if (x0.size() != gp.dim) throw ContractViolation("init_states: x0 has the wrong dimension");
  const std::size_t capacity = config.method == Method::dfp    ? config.dfp.memory
                               : config.method == Method::bfgs ? config.bfgs.memory
                                                               : 1;
  std::vector<NodeState> states;
  states.reserve(gp.nodes());
  for (const auto& p : gp.locals) {
    NodeState s{.x = x0,
                .g = {},
                .v = {},
                .tau = x0,
                .grad_at_tau = full_grad(p, x0),
                .memory = CurvatureMemory(capacity),
                .h = {},
                .rng = {},
                .sample_order = std::vector<std::size_t>(p.samples()),
                .batch = config.batch_for(p.samples()),
                .grad_evals = p.samples()};
    if (s.batch > p.samples())
      throw ConfigError("batch size " + std::to_string(s.batch) + " exceeds the " + std::to_string(p.samples()) +
                        " samples of node " + std::to_string(p.node_id));
    s.g = s.grad_at_tau;
    s.v = s.grad_at_tau;
    std::seed_seq seq{config.seed, static_cast<std::uint64_t>(p.node_id), std::uint64_t{0x5eed}};
    s.rng.seed(seq);
    for (std::size_t l = 0; l < s.sample_order.size(); ++l) s.sample_order[l] = l;
    states.push_back(std::move(s));
  }
  return states;
}

std::optional<Matrix> current_hessian_inverse(const NodeState& node, const RunConfig& config) {
  if (node.memory.empty()) return std::nullopt;
  switch (config.method) {
    case Method::dfp: return node.h;
    case Method::bfgs: {
      const auto& newest = node.memory.newest();
      return bfgs::explicit_matrix(node.memory, bfgs::initial_scalar(newest.s, newest.y, config.bfgs));
    }
    case Method::identity: break;
  }
  return Matrix::identity(node.x.size());
}

Simulation::Simulation(const GlobalProblem& gp, const Matrix& mixing, RunConfig config, Vector x0)
    : gp_(gp), config_(std::move(config)) {
  config_.validate();
  const std::size_t n = gp.nodes();
  if (mixing.rows() != n || mixing.cols() != n) throw ContractViolation("mixing matrix does not match node count");
  if (x0.empty()) x0.assign(gp.dim, 0.0);

  weights_.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (mixing(i, j) != 0.0) weights_[i].emplace_back(j, mixing(i, j));

  states_ = init_states(gp, x0, config_);
  next_.resize(n);
  tracking_scale_ = max_state_norm(states_);
  if (gp.x_star) {
    for (const auto& s : states_) initial_distance_ += squared_norm(subtract(s.x, *gp.x_star));
  }
}

void Simulation::update_node(std::size_t i, Next& next) {
  const auto& p = gp_.locals[i];
  auto& node = states_[i];
  const std::size_t d = gp_.dim;
  const std::size_t k = iteration_;

  // (a) direction from the approximation built through iteration k-1
  Vector direction;
  if (node.memory.empty() || config_.method == Method::identity) {
    direction = node.g;
  } else if (config_.method == Method::dfp) {
    direction = dfp::apply(node.h, node.g);
  } else {
    const auto& newest = node.memory.newest();
    direction = bfgs::two_loop(node.memory, bfgs::initial_scalar(newest.s, newest.y, config_.bfgs), node.g);
  }

  // (b) mix neighbors' iteration-k decisions, then descend
  next.x.assign(d, 0.0);
  for (auto [j, w] : weights_[i]) axpy(w, states_[j].x, next.x);
  axpy(-config_.alpha, direction, next.x);

  // (c) checkpoint refresh
  if ((k + 1) % config_.period == 0) {
    node.tau = next.x;
    node.grad_at_tau = full_grad(p, node.tau);
    node.grad_evals += p.samples();
  }

  // (d) variance-reduced local gradient
  if (config_.exact_gradients) {
    next.v = full_grad(p, next.x);
    node.grad_evals += p.samples();
  } else {
    const std::size_t m = p.samples();
    for (std::size_t t = 0; t < node.batch; ++t) {
      std::uniform_int_distribution<std::size_t> pick(t, m - 1);
      std::swap(node.sample_order[t], node.sample_order[pick(node.rng)]);
    }
    Vector sum(d, 0.0), at_x(d), at_tau(d);
    for (std::size_t t = 0; t < node.batch; ++t) {
      const std::size_t l = node.sample_order[t];
      std::fill(at_x.begin(), at_x.end(), 0.0);
      std::fill(at_tau.begin(), at_tau.end(), 0.0);
      accumulate_sample_grad(p, l, next.x, 1.0, at_x);
      accumulate_sample_grad(p, l, node.tau, 1.0, at_tau);
      for (std::size_t j = 0; j < d; ++j) sum[j] += at_x[j] - at_tau[j];
    }
    node.grad_evals += 2 * node.batch;
    next.v = node.grad_at_tau;
    axpy(1.0 / static_cast<double>(node.batch), sum, next.v);
  }

  // (e) gradient tracking
  next.g.assign(d, 0.0);
  for (auto [j, w] : weights_[i]) axpy(w, states_[j].g, next.g);
  for (std::size_t j = 0; j < d; ++j) next.g[j] += next.v[j] - node.v[j];

  if (!all_finite(next.x) || !all_finite(next.g) || !all_finite(next.v)) throw DivergedError(i, k);

  // (f) curvature pair from this node's own step
  switch (config_.method) {
    case Method::dfp: next.pair = dfp::make_pair(next.x, node.x, next.g, node.g, config_.dfp); break;
    case Method::bfgs: next.pair = bfgs::make_pair(next.x, node.x, next.g, node.g, config_.bfgs); break;
    case Method::identity: next.pair.reset(); break;
  }
  if (next.pair) {
    const auto& pair = *next.pair;
    node.memory.push(pair);
    if (config_.method == Method::dfp) node.h = dfp::build(node.memory, pair.s, pair.y, config_.dfp);
  }
}

void Simulation::step() {
  parallel_for(states_.size(), config_.threads, [this](std::size_t i) { update_node(i, next_[i]); });

  for (std::size_t i = 0; i < states_.size(); ++i) {
    auto& node = states_[i];
    auto& next = next_[i];
    std::swap(node.x, next.x);
    std::swap(node.g, next.g);
    std::swap(node.v, next.v);
    if (next.pair) {
      ++admitted_;
      const bool ok = config_.method == Method::dfp ? dfp::pair_satisfies_damping(*next.pair, config_.dfp)
                                                    : bfgs::pair_satisfies_damping(*next.pair, config_.bfgs);
      if (!ok) ++damping_violations_;
      next.pair.reset();
    }
  }
  tracking_scale_ = std::max(tracking_scale_, max_state_norm(states_));
  ++iteration_;
}

double Simulation::relative_error() const {
  if (!gp_.x_star) throw ContractViolation("relative_error: problem has no reference solution");
  if (!(initial_distance_ > 0.0)) throw ContractViolation("relative_error: x0 coincides with x*");
  double total = 0.0;
  for (const auto& s : states_) total += squared_norm(subtract(s.x, *gp_.x_star));
  return total / initial_distance_;
}

double Simulation::epochs() const {
  double total = 0.0;
  for (std::size_t i = 0; i < states_.size(); ++i)
    total += static_cast<double>(states_[i].grad_evals) / static_cast<double>(gp_.locals[i].samples());
  return total / static_cast<double>(states_.size());
}

double Simulation::tracking_gap() const {
  const std::size_t d = gp_.dim;
  Vector diff(d, 0.0);
  for (const auto& s : states_)
    for (std::size_t j = 0; j < d; ++j) diff[j] += s.g[j] - s.v[j];
  const double gap = norm(diff) / static_cast<double>(states_.size());
  return tracking_scale_ > 0.0 ? gap / tracking_scale_ : gap;
}

void Simulation::audit(TraceRecord& record, std::vector<AuditViolation>& violations) const {
  const EigenBounds bounds = method_bounds(config_);
  const double floor = config_.method == Method::dfp ? config_.dfp.rho : 0.0;

  if (config_.method == Method::identity) {
    record.min_eig = record.max_eig = 1.0;
    record.bound_m1 = bounds.lower;
    record.bound_m2 = bounds.upper;
    return;
  }

  std::optional<double> lo, hi;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    auto h = current_hessian_inverse(states_[i], config_);
    if (!h) continue;
    if (config_.audit_hook) config_.audit_hook(i, iteration_, *h);
    if (!is_symmetric(*h)) {
      violations.push_back({i, iteration_, 0.0, 0.0, "approximation is not symmetric"});
      continue;
    }
    const auto eig = sym_eigs(*h);
    lo = lo ? std::min(*lo, eig.min()) : eig.min();
    hi = hi ? std::max(*hi, eig.max()) : eig.max();
    if (!(eig.min() > floor))
      violations.push_back({i, iteration_, eig.min(), floor, "smallest eigenvalue not above positivity floor"});
    if (!(eig.min() >= bounds.lower))
      violations.push_back({i, iteration_, eig.min(), bounds.lower, "smallest eigenvalue below M1"});
    if (!(eig.max() <= bounds.upper))
      violations.push_back({i, iteration_, eig.max(), bounds.upper, "largest eigenvalue above M2"});
  }
  if (lo) {
    record.min_eig = lo;
    record.max_eig = hi;
    record.bound_m1 = bounds.lower;
    record.bound_m2 = bounds.upper;
  }
}

Trace run(const GlobalProblem& gp, const MixingMatrix& mixing, const RunConfig& config) {
  if (!gp.x_star) throw ContractViolation("run: compute the reference solution first");
  Simulation sim(gp, mixing.weights, config);

  Trace trace;
  trace.sigma = mixing.sigma;
  // returns false once the states are too large to measure
  auto record_now = [&] {
    TraceRecord r{sim.iteration(), sim.epochs(), sim.relative_error(), {}, {}, {}, {}};
    if (config.audit_every > 0 && sim.iteration() % config.audit_every == 0) sim.audit(r, trace.audit_violations);
    const double gap = sim.tracking_gap();
    trace.records.push_back(r);
    if (!std::isfinite(gap) || !std::isfinite(r.relative_error)) {
      trace.diverged = "diverged: state norms overflow at iteration " + std::to_string(sim.iteration());
      return false;
    }
    trace.max_tracking_gap = std::max(trace.max_tracking_gap, gap);
    if (gap > kTrackingTolerance) ++trace.tracking_violations;
    return true;
  };

  try {
    bool ok = record_now();
    for (std::size_t k = 0; ok && k < config.iterations; ++k) {
      sim.step();
      ok = record_now();
    }
  } catch (const DivergedError& e) {
    trace.diverged = e.what();
  }
  trace.admitted_pairs = sim.admitted_pairs();
  trace.damping_violations = sim.damping_violations();
  return trace;
}

Trace run(const GlobalProblem& gp, const Topology& topology, const RunConfig& config) {
  return run(gp, metropolis_weights(topology), config);
}

}  // namespace dqn
