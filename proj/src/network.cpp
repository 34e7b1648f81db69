#include "dqn/network.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "dqn/errors.hpp"

namespace dqn {

std::string to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::random: return "random";
    case TopologyKind::cycle: return "cycle";
    case TopologyKind::star: return "star";
    case TopologyKind::edge_list: return "edge-list";
  }
  return "unknown";
}

Topology::Topology(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                   TopologyKind kind, double connectivity)
    : neighbors_(n), kind_(kind), connectivity_(connectivity) {
  for (auto [i, j] : edges) {
    if (i >= n || j >= n) throw ConfigError("edge (" + std::to_string(i) + ", " + std::to_string(j) +
                                            ") out of range for " + std::to_string(n) + " nodes");
    if (i == j) throw ConfigError("self loop at node " + std::to_string(i));
    neighbors_[i].push_back(j);
    neighbors_[j].push_back(i);
  }
  for (auto& list : neighbors_) {
    std::sort(list.begin(), list.end());
    if (std::adjacent_find(list.begin(), list.end()) != list.end())
      throw ConfigError("duplicate edge in topology");
  }
}

std::size_t Topology::edge_count() const noexcept {
  std::size_t total = 0;
  for (const auto& list : neighbors_) total += list.size();
  return total / 2;
}

std::vector<std::pair<std::size_t, std::size_t>> Topology::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < neighbors_.size(); ++i)
    for (std::size_t j : neighbors_[i])
      if (i < j) out.emplace_back(i, j);
  return out;
}

bool Topology::is_connected() const {
  const std::size_t n = size();
  if (n == 0) return true;
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t v : neighbors_[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++reached;
        stack.push_back(v);
      }
    }
  }
  return reached == n;
}

Topology random_connected_graph(std::size_t n, double connectivity, std::uint64_t seed) {
  if (n == 0) throw ConfigError("random graph needs at least one node");
  if (!(connectivity > 0.0 && connectivity <= 1.0))
    throw ConfigError("connectivity ratio must lie in (0, 1], got " + std::to_string(connectivity));

  const std::size_t max_edges = n * (n - 1) / 2;
  const auto target = static_cast<std::size_t>(std::llround(connectivity * static_cast<double>(max_edges)));
  if (target < n - 1) {
    std::ostringstream msg;
    msg << "connectivity " << connectivity << " yields " << target << " edges but " << n
        << " nodes need at least " << n - 1 << "; minimum feasible connectivity is about "
        << 2.0 / static_cast<double>(n);
    throw ConfigError(msg.str());
  }

  std::mt19937_64 rng(seed);
  std::vector<std::vector<bool>> adjacent(n, std::vector<bool>(n, false));
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  edges.reserve(target);

  // Random-walk (Aldous-Broder) spanning tree: uniform over labeled trees.
  {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<bool> visited(n, false);
    std::size_t current = pick(rng);
    visited[current] = true;
    std::size_t remaining = n - 1;
    while (remaining > 0) {
      std::size_t next = pick(rng);
      if (next == current) continue;
      if (!visited[next]) {
        visited[next] = true;
        adjacent[current][next] = adjacent[next][current] = true;
        edges.emplace_back(std::min(current, next), std::max(current, next));
        --remaining;
      }
      current = next;
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!adjacent[i][j]) candidates.emplace_back(i, j);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  const std::size_t extra = target - edges.size();
  edges.insert(edges.end(), candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(extra));

  return Topology(n, edges, TopologyKind::random, connectivity);
}

Topology cycle_graph(std::size_t n) {
  if (n < 3) throw ConfigError("cycle graph needs at least 3 nodes");
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  return Topology(n, edges, TopologyKind::cycle);
}

Topology star_graph(std::size_t n) {
  if (n < 2) throw ConfigError("star graph needs at least 2 nodes");
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 1; i < n; ++i) edges.emplace_back(0, i);
  return Topology(n, edges, TopologyKind::star);
}

void write_edge_list(std::ostream& out, const Topology& t) {
  out << t.size() << '\n';
  for (auto [i, j] : t.edges()) out << i << ' ' << j << '\n';
}

Topology read_edge_list(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };

  if (!next_line()) throw ConfigError("edge list: missing node count");
  long long n = -1;
  {
    std::istringstream header(line);
    std::string rest;
    if (!(header >> n) || n < 1 || (header >> rest))
      throw ConfigError("edge list line " + std::to_string(line_no) + ": expected node count");
  }

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  while (next_line()) {
    std::istringstream row(line);
    long long i = -1, j = -1;
    std::string rest;
    if (!(row >> i >> j) || i < 0 || j < 0 || (row >> rest))
      throw ConfigError("edge list line " + std::to_string(line_no) + ": expected \"i j\"");
    edges.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  }
  Topology t(static_cast<std::size_t>(n), edges, TopologyKind::edge_list);
  if (!t.is_connected()) throw ConfigError("edge list describes a disconnected graph");
  return t;
}

double consensus_contraction(const Matrix& w) {
  const std::size_t n = w.rows();
  Matrix centered = w;
  const double avg = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) centered(i, j) -= avg;
  return spectral_norm(centered);
}

MixingMatrix metropolis_weights(const Topology& t) {
  if (!t.is_connected()) throw ContractViolation("metropolis_weights: topology is disconnected");
  const std::size_t n = t.size();
  Matrix w(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double off = 0.0;
    for (std::size_t j : t.neighbors(i)) {
      const double wij = 1.0 / (1.0 + static_cast<double>(std::max(t.degree(i), t.degree(j))));
      w(i, j) = wij;
      off += wij;
    }
    w(i, i) = 1.0 - off;
  }
  return {w, consensus_contraction(w)};
}

}  // namespace dqn
