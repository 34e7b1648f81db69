#include "dqn/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <system_error>

#include "dqn/errors.hpp"

namespace dqn {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

std::size_t parse_size(const std::string& key, const std::string& text) {
  return static_cast<std::size_t>(parse_uint(key, text));
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

ProblemKind parse_problem_kind(const std::string& text) {
  if (text == "synthetic-ls") return ProblemKind::synthetic_ls;
  if (text == "synthetic-logistic") return ProblemKind::synthetic_logistic;
  if (text == "libsvm") return ProblemKind::libsvm;
  throw ConfigError("problem.kind: expected synthetic-ls, synthetic-logistic or libsvm, got '" + text + "'");
}

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::synthetic_ls: return "synthetic-ls";
    case ProblemKind::synthetic_logistic: return "synthetic-logistic";
    case ProblemKind::libsvm: return "libsvm";
  }
  return "unknown";
}

TopologyKind parse_topology_kind(const std::string& text) {
  if (text == "random") return TopologyKind::random;
  if (text == "cycle") return TopologyKind::cycle;
  if (text == "star") return TopologyKind::star;
  if (text == "edge-list") return TopologyKind::edge_list;
  throw ConfigError("topology.kind: expected random, cycle, star or edge-list, got '" + text + "'");
}

std::string topology_kind_name(TopologyKind kind) {
  return kind == TopologyKind::edge_list ? "edge-list" : to_string(kind);
}

struct Field {
  const char* section;
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  // empty optional: the key is omitted from serialized output
  std::function<std::optional<std::string>(const ExperimentConfig&)> get;
};

#define DQN_DOUBLE(sec, name, member)                                                               \
  Field {                                                                                           \
    sec, name, [](ExperimentConfig& c, const std::string& k, const std::string& v) {                \
      c.member = parse_double(k, v);                                                                \
    },                                                                                              \
        [](const ExperimentConfig& c) -> std::optional<std::string> { return format_double(c.member); } \
  }

#define DQN_SIZE(sec, name, member)                                                                      \
  Field {                                                                                                \
    sec, name, [](ExperimentConfig& c, const std::string& k, const std::string& v) {                     \
      c.member = parse_size(k, v);                                                                       \
    },                                                                                                   \
        [](const ExperimentConfig& c) -> std::optional<std::string> { return std::to_string(c.member); } \
  }

#define DQN_STRING(sec, name, member)                                                                   \
  Field {                                                                                               \
    sec, name, [](ExperimentConfig& c, const std::string&, const std::string& v) { c.member = v; },     \
        [](const ExperimentConfig& c) -> std::optional<std::string> { return quote(c.member); }         \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"problem", "kind",
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.problem.kind = parse_problem_kind(v); },
       [](const ExperimentConfig& c) -> std::optional<std::string> { return to_string(c.problem.kind); }},
      DQN_SIZE("problem", "nodes", problem.nodes),
      DQN_SIZE("problem", "samples_per_node", problem.samples_per_node),
      DQN_SIZE("problem", "dim", problem.dim),
      DQN_DOUBLE("problem", "lambda_min", problem.lambda_min),
      DQN_DOUBLE("problem", "lambda_max", problem.lambda_max),
      DQN_DOUBLE("problem", "iota", problem.iota),
      DQN_STRING("problem", "path", problem.path),

      {"topology", "kind",
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.topology.kind = parse_topology_kind(v); },
       [](const ExperimentConfig& c) -> std::optional<std::string> { return topology_kind_name(c.topology.kind); }},
      DQN_DOUBLE("topology", "connectivity", topology.connectivity),
      DQN_STRING("topology", "path", topology.path),

      {"run", "method",
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.run.method = parse_method(v); },
       [](const ExperimentConfig& c) -> std::optional<std::string> { return to_string(c.run.method); }},
      DQN_DOUBLE("run", "alpha", run.alpha),
      {"run", "period",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.period = v == "auto" ? 0 : parse_size(k, v);
         if (v != "auto" && c.period == 0) throw ConfigError(k + ": must be >= 1 or auto");
       },
       [](const ExperimentConfig& c) -> std::optional<std::string> {
         return c.period == 0 ? std::string("auto") : std::to_string(c.period);
       }},
      {"run", "batch",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.run.batch = parse_size(k, v);
         c.run.batch_ratio.reset();
       },
       [](const ExperimentConfig& c) -> std::optional<std::string> {
         if (c.run.batch_ratio) return std::nullopt;
         return std::to_string(c.run.batch);
       }},
      {"run", "batch_ratio",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.run.batch_ratio = parse_double(k, v); },
       [](const ExperimentConfig& c) -> std::optional<std::string> {
         if (!c.run.batch_ratio) return std::nullopt;
         return format_double(*c.run.batch_ratio);
       }},
      DQN_SIZE("run", "iterations", run.iterations),
      {"run", "seed",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.run.seed = parse_uint(k, v); },
       [](const ExperimentConfig& c) -> std::optional<std::string> { return std::to_string(c.run.seed); }},
      DQN_SIZE("run", "audit_every", run.audit_every),
      DQN_SIZE("run", "threads", run.threads),

      DQN_DOUBLE("dfp", "rho", run.dfp.rho),
      DQN_DOUBLE("dfp", "epsilon", run.dfp.epsilon),
      DQN_DOUBLE("dfp", "beta", run.dfp.beta),
      DQN_DOUBLE("dfp", "bcal", run.dfp.bcal),
      DQN_DOUBLE("dfp", "ltilde", run.dfp.ltilde),
      DQN_SIZE("dfp", "memory", run.dfp.memory),

      DQN_DOUBLE("bfgs", "epsilon", run.bfgs.epsilon),
      DQN_DOUBLE("bfgs", "beta", run.bfgs.beta),
      DQN_DOUBLE("bfgs", "bcal", run.bfgs.bcal),
      DQN_DOUBLE("bfgs", "ltilde", run.bfgs.ltilde),
      DQN_SIZE("bfgs", "memory", run.bfgs.memory),

      DQN_STRING("output", "path", out),
      {"output", "deterministic",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.deterministic = parse_bool(k, v); },
       [](const ExperimentConfig& c) -> std::optional<std::string> {
         return std::string(c.deterministic ? "true" : "false");
       }},
  };
  return table;
}

#undef DQN_DOUBLE
#undef DQN_SIZE
#undef DQN_STRING

// Value text after '=': a quoted string (with \" and \\ escapes) or a bare
// token; a trailing '#' comment is dropped.
std::string parse_value(const std::string& raw, std::size_t line_no) {
  const std::string text = trim(raw);
  if (!text.empty() && text.front() == '"') {
    std::string out;
    std::size_t i = 1;
    for (; i < text.size() && text[i] != '"'; ++i) {
      if (text[i] == '\\' && i + 1 < text.size()) ++i;
      out += text[i];
    }
    if (i >= text.size()) throw ConfigError("line " + std::to_string(line_no) + ": unterminated string");
    const std::string rest = trim(std::string_view(text).substr(i + 1));
    if (!rest.empty() && rest.front() != '#')
      throw ConfigError("line " + std::to_string(line_no) + ": unexpected text after string");
    return out;
  }
  return trim(text.substr(0, text.find('#')));
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

Method parse_method(const std::string& text) {
  if (text == "identity") return Method::identity;
  if (text == "dfp") return Method::dfp;
  if (text == "bfgs") return Method::bfgs;
  throw ConfigError("method: expected identity, dfp or bfgs, got '" + text + "'");
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == std::string(f.section) + "." + f.key) {
      f.set(config, key, value);
      return;
    }
  }
  throw ConfigError("unknown setting '" + key + "'");
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  ExperimentConfig config = std::move(base);
  std::string section;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.front() == '[') {
      const auto close = t.find(']');
      if (close == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
      section = trim(std::string_view(t).substr(1, close - 1));
      const bool known = std::any_of(fields().begin(), fields().end(),
                                     [&](const Field& f) { return section == f.section; });
      if (!known) throw ConfigError("line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    if (section.empty()) throw ConfigError("line " + std::to_string(line_no) + ": key outside any section");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    try {
      apply_setting(config, section + "." + key, parse_value(t.substr(eq + 1), line_no));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, std::move(base));
}

std::string serialize_config(const ExperimentConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const auto& f : fields()) {
    if (section != f.section) {
      if (!section.empty()) out << '\n';
      section = f.section;
      out << '[' << section << "]\n";
    }
    if (auto v = f.get(config)) out << f.key << " = " << *v << '\n';
  }
  return out.str();
}

bool same_settings(const ExperimentConfig& a, const ExperimentConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

namespace {

struct DfpSet {
  double alpha, rho, epsilon, beta, ltilde;
  std::size_t memory;
};
struct BfgsSet {
  double alpha, epsilon, beta, ltilde;
  std::size_t memory;
};

void use_dfp(ExperimentConfig& c, const DfpSet& p) {
  c.run.alpha = p.alpha;
  c.run.dfp = {.rho = p.rho, .epsilon = p.epsilon, .beta = p.beta, .bcal = 1e4, .ltilde = p.ltilde, .memory = p.memory};
}

void use_bfgs(ExperimentConfig& c, const BfgsSet& p) {
  c.run.alpha = p.alpha;
  c.run.bfgs = {.epsilon = p.epsilon, .beta = p.beta, .bcal = 1e4, .ltilde = p.ltilde, .memory = p.memory};
}

void set_batch(ExperimentConfig& c, std::size_t b) {
  c.run.batch = b;
  c.run.batch_ratio.reset();
}

void set_ratio(ExperimentConfig& c, double r) { c.run.batch_ratio = r; }

// Logistic problems default to a synthetic stand-in of the dataset's feature
// dimension; --data switches to the real file.
ExperimentConfig logistic_base(std::size_t dim) {
  ExperimentConfig c;
  c.problem.kind = ProblemKind::synthetic_logistic;
  c.problem.nodes = 20;
  c.problem.samples_per_node = 250;
  c.problem.dim = dim;
  c.problem.iota = 0.001;
  c.topology.kind = TopologyKind::random;
  c.topology.connectivity = 0.5;
  c.run.iterations = 500;
  return c;
}

ExperimentConfig least_squares_base(double lambda_min, double lambda_max) {
  ExperimentConfig c;
  c.problem.kind = ProblemKind::synthetic_ls;
  c.problem.nodes = 20;
  c.problem.samples_per_node = 500;
  c.problem.dim = 8;
  c.problem.lambda_min = lambda_min;
  c.problem.lambda_max = lambda_max;
  c.topology.kind = TopologyKind::random;
  c.topology.connectivity = 0.5;
  c.run.iterations = 2000;
  return c;
}

struct TopologyPreset {
  const char* name;
  TopologyKind kind;
  double connectivity;
  double dfp_alpha, dfp_rho;
  double bfgs_alpha, bfgs_epsilon, bfgs_ratio;
};

constexpr TopologyPreset kTopologyPresets[] = {
    {"ijcnn1-cycle", TopologyKind::cycle, 0.0, 0.035, 0.003, 0.06, 0.005, 0.11},
    {"ijcnn1-star", TopologyKind::star, 0.0, 0.02, 0.001, 0.07, 0.005, 0.10},
    {"ijcnn1-r0.2", TopologyKind::random, 0.2, 0.2, 0.001, 0.2, 0.002, 0.06},
    {"ijcnn1-r0.3", TopologyKind::random, 0.3, 0.25, 0.001, 0.3, 0.002, 0.06},
    {"ijcnn1-r0.5", TopologyKind::random, 0.5, 0.32, 0.005, 0.31, 0.002, 0.06},
};

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names = {"ls-kappa10", "ls-kappa2000", "covtype", "cod-rna", "a6a", "a9a",
                                    "ijcnn1-batch", "ijcnn1-memory"};
  for (const auto& t : kTopologyPresets) names.emplace_back(t.name);
  return names;
}

ExperimentConfig preset(const std::string& name, Method method) {
  ExperimentConfig c;
  const bool dfp = method == Method::dfp;
  const bool bfgs = method == Method::bfgs;

  if (name == "ls-kappa10") {
    c = least_squares_base(0.1, 1.0);
    set_batch(c, 10);
    if (dfp) use_dfp(c, {0.6, 1e-5, 3.0, 0.04, 10.0, 20});
    if (bfgs) use_bfgs(c, {0.6, 3.0, 0.04, 10.0, 20});
    if (method == Method::identity) c.run.alpha = 4.0;
  } else if (name == "ls-kappa2000") {
    c = least_squares_base(0.001, 2.0);
    set_batch(c, 15);
    if (dfp) use_dfp(c, {0.6, 1e-5, 5.0, 0.01, 10.0, 20});
    if (bfgs) use_bfgs(c, {0.6, 37.0, 0.01, 10.0, 50});
    if (method == Method::identity) c.run.alpha = 3.0;
  } else if (name == "covtype") {
    c = logistic_base(54);
    if (dfp) use_dfp(c, {0.32, 0.01, 0.02, 0.002, 50.0, 3}), set_ratio(c, 0.10);
    if (bfgs) use_bfgs(c, {0.37, 0.001, 0.002, 50.0, 3}), set_ratio(c, 0.10);
    if (method == Method::identity) c.run.alpha = 0.002, set_batch(c, 5);
  } else if (name == "cod-rna") {
    c = logistic_base(8);
    if (dfp) use_dfp(c, {0.3, 0.0002, 0.03, 0.002, 50.0, 20}), set_ratio(c, 0.08);
    if (bfgs) use_bfgs(c, {0.35, 100.0, 0.002, 50.0, 40}), set_ratio(c, 0.10);
    if (method == Method::identity) c.run.alpha = 0.01, set_batch(c, 2);
  } else if (name == "a6a") {
    c = logistic_base(123);
    if (dfp) use_dfp(c, {0.38, 0.01, 0.005, 0.015, 20.0, 40}), set_ratio(c, 0.10);
    if (bfgs) use_bfgs(c, {0.38, 30.0, 1.2, 20.0, 50}), set_ratio(c, 0.10);
    if (method == Method::identity) c.run.alpha = 0.009, set_batch(c, 1);
  } else if (name == "a9a") {
    c = logistic_base(123);
    if (dfp) use_dfp(c, {0.38, 0.001, 0.1, 0.5, 50.0, 50}), set_ratio(c, 0.06);
    if (bfgs) use_bfgs(c, {0.35, 30.0, 0.5, 20.0, 50}), set_ratio(c, 0.10);
    if (method == Method::identity) c.run.alpha = 0.004, set_batch(c, 2);
  } else if (name == "ijcnn1-batch") {
    c = logistic_base(22);
    set_ratio(c, 0.06);
    if (dfp) use_dfp(c, {0.32, 0.005, 0.005, 0.1, 50.0, 50});
    if (bfgs) use_bfgs(c, {0.31, 0.005, 0.1, 50.0, 50});
    if (method == Method::identity) c.run.alpha = 0.01;
  } else if (name == "ijcnn1-memory") {
    c = logistic_base(22);
    set_ratio(c, 0.06);
    if (dfp) use_dfp(c, {0.32, 0.004, 0.005, 0.001, 50.0, 20});
    if (bfgs) use_bfgs(c, {0.31, 0.002, 0.1, 50.0, 20});
    if (method == Method::identity) c.run.alpha = 0.01;
  } else {
    const auto* t = std::find_if(std::begin(kTopologyPresets), std::end(kTopologyPresets),
                                 [&](const TopologyPreset& p) { return name == p.name; });
    if (t == std::end(kTopologyPresets)) {
      std::string known;
      for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
      throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
    }
    c = logistic_base(22);
    c.topology.kind = t->kind;
    c.topology.connectivity = t->connectivity;
    set_ratio(c, 0.06);
    if (dfp) use_dfp(c, {t->dfp_alpha, t->dfp_rho, 0.005, 0.1, 50.0, 50});
    if (bfgs) use_bfgs(c, {t->bfgs_alpha, t->bfgs_epsilon, 0.1, 50.0, 50}), set_ratio(c, t->bfgs_ratio);
    if (method == Method::identity) c.run.alpha = 0.01;
  }
  c.run.method = method;
  return c;
}

}  // namespace dqn
