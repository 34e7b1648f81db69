#include "dqn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "dqn/errors.hpp"

namespace dqn {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Topology build_topology(const TopologySpec& spec, std::size_t n, std::uint64_t seed) {
  switch (spec.kind) {
    case TopologyKind::random: return random_connected_graph(n, spec.connectivity, seed);
    case TopologyKind::cycle: return cycle_graph(n);
    case TopologyKind::star: return star_graph(n);
    case TopologyKind::edge_list: {
      std::ifstream in(spec.path);
      if (!in) throw ConfigError("cannot open edge list '" + spec.path + "'");
      Topology t = read_edge_list(in);
      if (t.size() != n)
        throw ConfigError("edge list has " + std::to_string(t.size()) + " nodes, problem has " + std::to_string(n));
      return t;
    }
  }
  throw ConfigError("unknown topology kind");
}

GlobalProblem build_problem(const ProblemSpec& spec, std::uint64_t seed) {
  if (spec.nodes < 1) throw ConfigError("problem.nodes must be >= 1");
  switch (spec.kind) {
    case ProblemKind::synthetic_ls:
      if (spec.samples_per_node < 1 || spec.dim < 1) throw ConfigError("synthetic-ls needs samples_per_node, dim >= 1");
      if (spec.samples_per_node * spec.nodes < spec.dim)
        throw ConfigError("synthetic-ls needs at least dim rows in total");
      if (!(spec.lambda_min > 0.0) || !(spec.lambda_max >= spec.lambda_min))
        throw ConfigError("synthetic-ls needs 0 < lambda_min <= lambda_max");
      return synth_least_squares(spec.nodes, spec.samples_per_node,
                                 {.dim = spec.dim, .lambda_min = spec.lambda_min, .lambda_max = spec.lambda_max,
                                  .seed = seed});
    case ProblemKind::synthetic_logistic:
      if (spec.samples_per_node < 1 || spec.dim < 1) throw ConfigError("synthetic-logistic needs samples_per_node, dim >= 1");
      if (!(spec.iota > 0.0)) throw ConfigError("logistic problems need iota > 0");
      return synth_logistic(spec.nodes, spec.samples_per_node, spec.dim, spec.iota, seed);
    case ProblemKind::libsvm: {
      if (spec.path.empty()) throw ConfigError("libsvm problem needs a data path");
      if (!(spec.iota > 0.0)) throw ConfigError("logistic problems need iota > 0");
      Dataset data = normalize_samples(load_libsvm(spec.path, spec.dim));
      if (data.samples() < spec.nodes)
        throw ConfigError("dataset has fewer samples than nodes");
      return partition(data, spec.nodes, seed, spec.iota);
    }
  }
  throw ConfigError("unknown problem kind");
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string csv_stem(const std::string& out) {
  if (out.size() > 4 && out.ends_with(".csv")) return out.substr(0, out.size() - 4);
  return out;
}

void write_csv_file(const std::string& path, const Trace& trace, bool deterministic) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ConfigError("cannot write '" + path + "'");
  write_trace_csv(file, trace, deterministic);
}

std::string summary_line(const Trace& trace) {
  const auto& last = trace.records.back();
  std::string line = "final_relative_error=" + format_double(last.relative_error) +
                     " epochs=" + format_double(last.epochs) + " sigma=" + format_double(trace.sigma) +
                     " audit=" + (trace.audit_passed() ? "pass" : "fail");
  if (trace.diverged) line += " diverged";
  return line;
}

void report_first_violation(const Trace& trace, std::ostream& err) {
  if (!trace.audit_violations.empty()) {
    const auto& v = trace.audit_violations.front();
    err << "audit violation: node " << v.node << " iteration " << v.iteration << " eigenvalue "
        << format_double(v.eigenvalue) << " bound " << format_double(v.bound) << " (" << v.what << ")\n";
  }
  if (trace.damping_violations > 0)
    err << "audit violation: " << trace.damping_violations << " admitted pairs break the curvature floor\n";
  if (trace.tracking_violations > 0)
    err << "audit violation: tracking gap reached " << format_double(trace.max_tracking_gap) << "\n";
}

int exit_code(const Trace& trace) {
  if (trace.diverged) return kExitDiverged;
  if (!trace.audit_passed()) return kExitAudit;
  return kExitOk;
}

// Options shared by every subcommand. Overrides are queued as (key, value)
// pairs and applied after the preset and config file.
struct CommonOptions {
  std::string config_path;
  std::string preset_name;
  std::optional<std::string> method;
  std::vector<std::pair<std::string, std::string>> overrides;
  bool deterministic = false;
  std::string save_config;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "Experiment config file");
    app.add_option("--preset", preset_name, "Named parameter set");
    app.add_option_function<std::string>("--method", [this](const std::string& v) { method = v; },
                                         "identity | dfp | bfgs");
    add(app, "--nodes", {"problem.nodes"}, "Number of nodes");
    add(app, "--connectivity", {"topology.connectivity"}, "Edge density of the random graph");
    add(app, "--topology", {"topology.kind"}, "random | cycle | star");
    add(app, "--alpha", {"run.alpha"}, "Step size");
    add(app, "--rho", {"dfp.rho"}, "DFP regularization");
    add(app, "--epsilon", {"dfp.epsilon", "bfgs.epsilon"}, "Damping offset");
    add(app, "--beta", {"dfp.beta", "bfgs.beta"}, "Lower clamp of the initial scalar");
    add(app, "--bcal", {"dfp.bcal", "bfgs.bcal"}, "Upper clamp of the initial scalar");
    add(app, "--ltilde", {"dfp.ltilde", "bfgs.ltilde"}, "Damping cap");
    add(app, "--memory", {"dfp.memory", "bfgs.memory"}, "Stored curvature pairs");
    auto* batch = add(app, "--batch", {"run.batch"}, "Samples per node per iteration");
    auto* ratio = add(app, "--batch-ratio", {"run.batch_ratio"}, "Batch as a fraction of local samples");
    batch->excludes(ratio);
    add(app, "--period", {"run.period"}, "Checkpoint refresh period T, or auto");
    add(app, "--iters", {"run.iterations"}, "Iterations");
    add(app, "--seed", {"run.seed"}, "Seed for data, graph and sampling");
    add(app, "--audit-every", {"run.audit_every"}, "Eigenvalue audit period, 0 disables");
    add(app, "--out", {"output.path"}, "CSV output path");
    add(app, "--threads", {"run.threads"}, "Worker threads for node updates");
    add(app, "--edges", {"topology.path"}, "Edge list file (sets topology to edge-list)");
    add(app, "--data", {"problem.path"}, "LIBSVM file (sets problem kind to libsvm)");
    app.add_flag("--deterministic", deterministic, "Omit the timestamp line from CSV output");
    app.add_option("--save-config", save_config, "Write the resolved config to this path");
  }

  CLI::Option* add(CLI::App& app, const std::string& flag, std::vector<std::string> keys, const std::string& help) {
    return app.add_option_function<std::string>(
        flag,
        [this, flag, keys](const std::string& v) {
          if (flag == "--edges") overrides.emplace_back("topology.kind", "edge-list");
          if (flag == "--data") overrides.emplace_back("problem.kind", "libsvm");
          for (const auto& k : keys) overrides.emplace_back(k, v);
        },
        help);
  }

  ExperimentConfig resolve() const {
    if (config_path.empty() && preset_name.empty()) throw CLI::RequiredError("--config or --preset");
    const Method m = method ? parse_method(*method) : Method::dfp;
    ExperimentConfig config = preset_name.empty() ? ExperimentConfig{} : preset(preset_name, m);
    if (!config_path.empty()) config = load_config(config_path, std::move(config));
    if (method) config.run.method = m;
    for (const auto& [k, v] : overrides) apply_setting(config, k, v);
    if (deterministic) config.deterministic = true;
    if (!save_config.empty()) {
      std::ofstream f(save_config);
      if (!f) throw ConfigError("cannot write '" + save_config + "'");
      f << serialize_config(config);
    }
    return config;
  }
};

Trace run_experiment(const ExperimentConfig& config, RunConfig* used = nullptr) {
  Experiment ex = build_experiment(config);
  if (used) *used = ex.run;
  return run(ex.problem, ex.mixing, ex.run);
}

int do_run(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  const Trace trace = run_experiment(config);
  write_csv_file(config.out, trace, config.deterministic);
  out << summary_line(trace) << "\n";
  if (trace.diverged) err << *trace.diverged << "\n";
  report_first_violation(trace, err);
  return exit_code(trace);
}

int do_verify(ExperimentConfig config, bool corrupt, std::ostream& out, std::ostream& err) {
  config.run.audit_every = 1;
  if (corrupt) {
    // negative control: flip the sign of one node's approximation
    config.run.audit_hook = [](std::size_t node, std::size_t, Matrix& h) {
      if (node != 0) return;
      for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t j = 0; j < h.cols(); ++j) h(i, j) = -h(i, j);
    };
  }
  const Trace trace = run_experiment(config);
  out << summary_line(trace) << " audited_iterations=" << trace.records.size()
      << " admitted_pairs=" << trace.admitted_pairs << "\n";
  if (trace.diverged) err << *trace.diverged << "\n";
  report_first_violation(trace, err);
  return exit_code(trace);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void apply_axis(ExperimentConfig& config, const std::string& axis, const std::string& value) {
  if (axis == "batch") {
    apply_setting(config, "run.batch_ratio", value);
  } else if (axis == "memory") {
    apply_setting(config, "dfp.memory", value);
    apply_setting(config, "bfgs.memory", value);
  } else if (axis == "topology") {
    if (value == "cycle" || value == "star" || value == "random") {
      apply_setting(config, "topology.kind", value);
    } else {
      apply_setting(config, "topology.kind", "random");
      apply_setting(config, "topology.connectivity", value);
    }
  } else {
    throw ConfigError("sweep axis must be batch, memory or topology, got '" + axis + "'");
  }
}

int do_sweep(const ExperimentConfig& base, const std::string& axis, std::string values, double target,
             std::ostream& out, std::ostream& err) {
  if (values.empty()) {
    if (axis == "batch") values = "0.02,0.04,0.06,0.08,0.1";
    if (axis == "memory") values = "5,10,20,30,40,50";
    if (axis == "topology") values = "cycle,star,0.2,0.3,0.5";
  }
  const auto list = split_list(values);
  if (list.empty()) throw ConfigError("sweep needs at least one value");

  // validate every point before spending time on any run
  std::vector<ExperimentConfig> points;
  for (const auto& v : list) {
    ExperimentConfig c = base;
    apply_axis(c, axis, v);
    points.push_back(std::move(c));
  }

  const std::string stem = csv_stem(base.out);
  std::ostringstream summary;
  summary << "value,sigma,final_epochs,final_relative_error,epochs_to_target,audit\n";
  int code = kExitOk;
  for (std::size_t p = 0; p < points.size(); ++p) {
    const Trace trace = run_experiment(points[p]);
    write_csv_file(stem + "_" + list[p] + ".csv", trace, base.deterministic);
    const auto* hit = first_below(trace, target);
    const auto& last = trace.records.back();
    summary << list[p] << ',' << format_double(trace.sigma) << ',' << format_double(last.epochs) << ','
            << format_double(last.relative_error) << ',' << (hit ? format_double(hit->epochs) : std::string()) << ','
            << (trace.diverged ? "diverged" : trace.audit_passed() ? "pass" : "fail") << '\n';
    out << axis << '=' << list[p] << ' ' << summary_line(trace) << "\n";
    if (trace.diverged) err << list[p] << ": " << *trace.diverged << "\n";
    report_first_violation(trace, err);
    code = std::max(code, exit_code(trace));
  }
  std::ofstream file(stem + "_summary.csv", std::ios::binary);
  if (!file) throw ConfigError("cannot write '" + stem + "_summary.csv'");
  file << summary.str();
  return code;
}

}  // namespace

Experiment build_experiment(const ExperimentConfig& config) {
  const std::uint64_t data_seed = splitmix64(config.run.seed ^ 0xda7aULL);
  const std::uint64_t graph_seed = splitmix64(config.run.seed ^ 0x9a9fULL);

  GlobalProblem gp = build_problem(config.problem, data_seed);
  Topology topology = build_topology(config.topology, gp.nodes(), graph_seed);
  if (!topology.is_connected()) throw ConfigError("topology is not connected");
  MixingMatrix mixing = metropolis_weights(topology);

  RunConfig run = config.run;
  std::size_t smallest = gp.locals.front().samples();
  for (const auto& p : gp.locals) smallest = std::min(smallest, p.samples());
  const std::size_t b = run.batch_for(smallest);
  if (b > smallest)
    throw ConfigError("batch size " + std::to_string(b) + " exceeds the " + std::to_string(smallest) +
                      " samples of the smallest node");
  run.period = config.period != 0
                   ? config.period
                   : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                                  static_cast<double>(smallest) / static_cast<double>(b))));
  run.validate();

  try {
    centralized_newton(gp);
  } catch (const ConvergenceError& e) {
    throw ConfigError(std::string("reference solve failed: ") + e.what());
  }
  return {std::move(gp), std::move(topology), std::move(mixing), std::move(run)};
}

void write_trace_csv(std::ostream& out, const Trace& trace, bool deterministic) {
  if (!deterministic) out << "# generated " << utc_timestamp() << "\n";
  out << "iteration,epochs,relative_error,min_eig,max_eig,bound_m1,bound_m2\n";
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << format_double(r.epochs) << ',' << format_double(r.relative_error) << ','
        << optional_cell(r.min_eig) << ',' << optional_cell(r.max_eig) << ',' << optional_cell(r.bound_m1) << ','
        << optional_cell(r.bound_m2) << '\n';
  }
}

const TraceRecord* first_below(const Trace& trace, double target) {
  for (const auto& r : trace.records)
    if (r.relative_error <= target) return &r;
  return nullptr;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Decentralized stochastic quasi-Newton simulator"};
  app.require_subcommand(1);

  CommonOptions run_opts, sweep_opts, verify_opts;
  auto* run_cmd = app.add_subcommand("run", "Run one experiment and write its CSV trace");
  run_opts.attach(*run_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "Run one experiment per value of a parameter");
  sweep_opts.attach(*sweep_cmd);
  std::string axis;
  std::string values;
  double target = 1e-6;
  sweep_cmd->add_option("--axis", axis, "batch | memory | topology")->required();
  sweep_cmd->add_option("--values", values, "Comma-separated values (defaults per axis)");
  sweep_cmd->add_option("--target", target, "Relative error for the epochs_to_target column");

  auto* verify_cmd = app.add_subcommand("verify", "Re-run with an eigenvalue audit on every iteration");
  verify_opts.attach(*verify_cmd);
  bool corrupt = false;
  verify_cmd->add_flag("--corrupt-h", corrupt, "Test hook: negate node 0's approximation before auditing")
      ->group("");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
    if (run_cmd->parsed()) return do_run(run_opts.resolve(), out, err);
    if (sweep_cmd->parsed()) return do_sweep(sweep_opts.resolve(), axis, values, target, out, err);
    return do_verify(verify_opts.resolve(), corrupt, out, err);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto* sub = run_cmd->parsed() ? run_cmd : sweep_cmd->parsed() ? sweep_cmd : verify_cmd->parsed() ? verify_cmd : nullptr;
    err << (sub ? sub->help() : app.help());
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace dqn
