#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dqn/config.hpp"
#include "dqn/framework.hpp"
#include "dqn/network.hpp"
#include "dqn/problems.hpp"

namespace dqn {

/// Everything a run needs, with the reference solution already computed.
struct Experiment {
  GlobalProblem problem;
  Topology topology;
  MixingMatrix mixing;
  RunConfig run;
};

/// Generates or loads the data, builds the graph and solves for x*. The data
/// and graph seeds are derived from run.seed. Throws ConfigError.
Experiment build_experiment(const ExperimentConfig& config);

/// Columns: iteration,epochs,relative_error,min_eig,max_eig,bound_m1,bound_m2.
/// Eigen columns stay empty on rows without an audit. Unless deterministic, a
/// "# generated <UTC time>" line comes first.
void write_trace_csv(std::ostream& out, const Trace& trace, bool deterministic);

/// First record whose relative error is <= target, or nullptr.
const TraceRecord* first_below(const Trace& trace, double target);

/// Exit codes of cli_main.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitAudit = 4;

/// dqn-sim run|sweep|verify ...
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dqn
