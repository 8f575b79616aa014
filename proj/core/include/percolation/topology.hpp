#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "percolation/types.hpp"

namespace perc {

struct EdgeState {
  Bandwidth bandwidth = 1;
  bool up = true;

  friend bool operator==(const EdgeState&, const EdgeState&) = default;
};

/// Undirected edge, endpoints stored with u < v.
struct Edge {
  NodeId u;
  NodeId v;
  Bandwidth bandwidth = 1;
  bool up = true;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected M2M graph. Adjacency includes links that are currently down;
/// callers check `link_up` when they need live connectivity.
class Graph {
 public:
  Graph() = default;

  void add_node(NodeId v);
  void remove_node(NodeId v);
  void add_edge(NodeId a, NodeId b, Bandwidth bandwidth);
  void remove_edge(NodeId a, NodeId b);

  bool has_node(NodeId v) const { return adjacency_.contains(v); }
  bool has_edge(NodeId a, NodeId b) const { return edges_.contains(key(a, b)); }
  bool link_up(NodeId a, NodeId b) const;

  const EdgeState& edge(NodeId a, NodeId b) const;
  EdgeState& edge(NodeId a, NodeId b);

  /// Sorted close-neighbors of v.
  std::span<const NodeId> neighbors(NodeId v) const;
  std::size_t degree(NodeId v) const { return neighbors(v).size(); }

  std::size_t node_count() const { return adjacency_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  std::vector<NodeId> nodes() const;
  std::vector<Edge> edges() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  using Key = std::pair<NodeId, NodeId>;
  static Key key(NodeId a, NodeId b) { return a < b ? Key{a, b} : Key{b, a}; }

  std::map<NodeId, std::vector<NodeId>> adjacency_;
  std::map<Key, EdgeState> edges_;
};

struct TopologyParams {
  std::uint32_t n = 0;
  std::uint32_t k = 0;
  double p = 0.0;
  Bandwidth default_bandwidth = 1;
  std::uint64_t seed = 0;
};

/// Ring lattice of n nodes, each linked to its k nearest ring neighbors, with every
/// lattice edge rewired to a uniform random non-neighbor with probability p.
Graph generate_small_world(const TopologyParams& params);

struct EdgeRecord {
  NodeId u;
  NodeId v;
  Bandwidth bandwidth = 1;
};

Graph load_graph(std::span<const EdgeRecord> edges);

/// Parses `u v bandwidth` lines; `#` starts a comment.
std::vector<EdgeRecord> parse_edge_list(std::istream& in);
Graph load_edge_list_file(const std::filesystem::path& path);
void write_edge_list(std::ostream& out, const Graph& g);

struct ChurnEvent {
  enum class Kind { kJoin, kLeave, kLinkUp, kLinkDown, kSetBandwidth };

  Kind kind = Kind::kJoin;
  NodeId u;
  NodeId v;
  Bandwidth bandwidth = 1;

  static ChurnEvent join(NodeId v) { return {Kind::kJoin, v, v, 0}; }
  static ChurnEvent leave(NodeId v) { return {Kind::kLeave, v, v, 0}; }
  /// Brings a link up, creating it with `bandwidth` if it does not exist yet.
  static ChurnEvent link_up(NodeId a, NodeId b, Bandwidth bw = 1) { return {Kind::kLinkUp, a, b, bw}; }
  static ChurnEvent link_down(NodeId a, NodeId b) { return {Kind::kLinkDown, a, b, 0}; }
  static ChurnEvent set_bandwidth(NodeId a, NodeId b, Bandwidth bw) { return {Kind::kSetBandwidth, a, b, bw}; }
};

void apply_churn_in_place(Graph& g, const ChurnEvent& event);

[[nodiscard]] inline Graph apply_churn(Graph g, const ChurnEvent& event) {
  apply_churn_in_place(g, event);
  return g;
}

/// Degree strictly above the network's average degree.
bool is_star_node(const Graph& g, NodeId v);

}  // namespace perc
