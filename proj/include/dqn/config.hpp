#pragma once

// Experiment configuration: a flat, sectioned key = value text format.
//
//   [problem]
//   kind = synthetic-ls        # synthetic-ls | synthetic-logistic | libsvm
//   nodes = 20
//   ...
//   [run]
//   method = dfp
//   alpha = 0.6
//
// Every key is also reachable as "section.key" through apply_setting, which is
// what CLI flag overrides use.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dqn/framework.hpp"
#include "dqn/network.hpp"

namespace dqn {

enum class ProblemKind { synthetic_ls, synthetic_logistic, libsvm };

struct ProblemSpec {
  ProblemKind kind = ProblemKind::synthetic_ls;
  std::size_t nodes = 20;
  std::size_t samples_per_node = 500;  // synthetic only
  std::size_t dim = 8;                 // synthetic; libsvm lower bound
  double lambda_min = 0.1;
  double lambda_max = 1.0;
  double iota = 0.001;
  std::string path;  // libsvm only

  bool operator==(const ProblemSpec&) const = default;
};

struct TopologySpec {
  TopologyKind kind = TopologyKind::random;
  double connectivity = 0.5;
  std::string path;  // edge_list only

  bool operator==(const TopologySpec&) const = default;
};

/// run.seed drives data generation, the random graph and batch sampling.
struct ExperimentConfig {
  ProblemSpec problem;
  TopologySpec topology;
  RunConfig run;
  std::size_t period = 0;  // 0 picks round(m / b) from the smallest node
  std::string out = "trace.csv";
  bool deterministic = false;
};

bool same_settings(const ExperimentConfig& a, const ExperimentConfig& b);

/// Sets one "section.key" value, parsing it for the field's type. Throws
/// ConfigError on unknown keys or unparsable values.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Applies the file's settings on top of `base`. Throws ConfigError naming the
/// line for unknown sections, unknown keys and bad values.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
std::string serialize_config(const ExperimentConfig& config);

/// Named parameter sets for the least-squares and logistic experiments.
/// Throws ConfigError for an unknown name.
ExperimentConfig preset(const std::string& name, Method method);
std::vector<std::string> preset_names();

std::string format_double(double v);
Method parse_method(const std::string& text);

}  // namespace dqn
