#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dqn/numerics.hpp"

namespace dqn {

enum class TopologyKind { random, cycle, star, edge_list };

std::string to_string(TopologyKind kind);

/// Undirected graph stored as sorted per-node neighbor lists (self excluded).
class Topology {
 public:
  Topology(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
           TopologyKind kind, double connectivity = 0.0);

  std::size_t size() const noexcept { return neighbors_.size(); }
  TopologyKind kind() const noexcept { return kind_; }
  /// Only meaningful for TopologyKind::random.
  double connectivity() const noexcept { return connectivity_; }

  const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_.at(i); }
  std::size_t degree(std::size_t i) const { return neighbors_.at(i).size(); }
  std::size_t edge_count() const noexcept;
  /// Edges with i < j, lexicographically ordered.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;

  bool is_connected() const;

  bool operator==(const Topology& other) const { return neighbors_ == other.neighbors_; }

 private:
  std::vector<std::vector<std::size_t>> neighbors_;
  TopologyKind kind_;
  double connectivity_;
};

/// round(connectivity * n(n-1)/2) edges, a uniform random spanning tree plus
/// uniformly chosen extra edges. Throws ConfigError when the edge budget cannot
/// connect n nodes.
Topology random_connected_graph(std::size_t n, double connectivity, std::uint64_t seed);
Topology cycle_graph(std::size_t n);
Topology star_graph(std::size_t n);

/// Plain text: first line "n", then one "i j" line per edge, 0-indexed.
void write_edge_list(std::ostream& out, const Topology& t);
Topology read_edge_list(std::istream& in);

struct MixingMatrix {
  Matrix weights;
  double sigma = 0.0;  // ||W - (1/n) 1 1^T||_2
};

/// w_ij = 1 / (1 + max(deg_i, deg_j)) on edges, diagonal fills the row to 1.
MixingMatrix metropolis_weights(const Topology& t);

/// ||W - (1/n) 1 1^T||_2
double consensus_contraction(const Matrix& w);

}  // namespace dqn
