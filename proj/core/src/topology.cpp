#include "percolation/topology.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "percolation/error.hpp"
#include "percolation/random.hpp"

namespace perc {

namespace {

std::string node_str(NodeId v) { return std::to_string(v.value); }

std::string edge_str(NodeId a, NodeId b) { return "(" + node_str(a) + ", " + node_str(b) + ")"; }

}  // namespace

void Graph::add_node(NodeId v) {
  if (!adjacency_.try_emplace(v).second) {
    throw Error(ErrorCode::kDuplicate, "node " + node_str(v) + " already exists");
  }
}

void Graph::remove_node(NodeId v) {
  auto it = adjacency_.find(v);
  if (it == adjacency_.end()) throw Error(ErrorCode::kNotFound, "unknown node " + node_str(v));
  const std::vector<NodeId> incident = it->second;
  for (NodeId w : incident) remove_edge(v, w);
  adjacency_.erase(v);
}

void Graph::add_edge(NodeId a, NodeId b, Bandwidth bandwidth) {
  if (a == b) throw Error(ErrorCode::kFormat, "self-loop at node " + node_str(a));
  if (bandwidth == 0) throw Error(ErrorCode::kParameter, "edge " + edge_str(a, b) + " needs positive bandwidth");
  auto ia = adjacency_.find(a);
  auto ib = adjacency_.find(b);
  if (ia == adjacency_.end() || ib == adjacency_.end()) {
    throw Error(ErrorCode::kNotFound, "edge " + edge_str(a, b) + " references an unknown node");
  }
  if (!edges_.try_emplace(key(a, b), EdgeState{bandwidth, true}).second) {
    throw Error(ErrorCode::kDuplicate, "duplicate edge " + edge_str(a, b));
  }
  auto& na = ia->second;
  na.insert(std::lower_bound(na.begin(), na.end(), b), b);
  auto& nb = ib->second;
  nb.insert(std::lower_bound(nb.begin(), nb.end(), a), a);
}

void Graph::remove_edge(NodeId a, NodeId b) {
  if (edges_.erase(key(a, b)) == 0) throw Error(ErrorCode::kNotFound, "unknown edge " + edge_str(a, b));
  auto drop = [](std::vector<NodeId>& list, NodeId x) {
    list.erase(std::lower_bound(list.begin(), list.end(), x));
  };
  drop(adjacency_.at(a), b);
  drop(adjacency_.at(b), a);
}

bool Graph::link_up(NodeId a, NodeId b) const {
  auto it = edges_.find(key(a, b));
  return it != edges_.end() && it->second.up;
}

const EdgeState& Graph::edge(NodeId a, NodeId b) const {
  auto it = edges_.find(key(a, b));
  if (it == edges_.end()) throw Error(ErrorCode::kNotFound, "unknown edge " + edge_str(a, b));
  return it->second;
}

EdgeState& Graph::edge(NodeId a, NodeId b) {
  auto it = edges_.find(key(a, b));
  if (it == edges_.end()) throw Error(ErrorCode::kNotFound, "unknown edge " + edge_str(a, b));
  return it->second;
}

std::span<const NodeId> Graph::neighbors(NodeId v) const {
  auto it = adjacency_.find(v);
  if (it == adjacency_.end()) throw Error(ErrorCode::kNotFound, "unknown node " + node_str(v));
  return it->second;
}

std::vector<NodeId> Graph::nodes() const {
  std::vector<NodeId> out;
  out.reserve(adjacency_.size());
  for (const auto& [v, _] : adjacency_) out.push_back(v);
  return out;
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(edges_.size());
  for (const auto& [k, s] : edges_) out.push_back(Edge{k.first, k.second, s.bandwidth, s.up});
  return out;
}

Graph generate_small_world(const TopologyParams& params) {
  if (params.k % 2 != 0) throw Error(ErrorCode::kParameter, "k must be even");
  if (params.n == 0 || params.k >= params.n) throw Error(ErrorCode::kParameter, "need 0 <= k < n");
  if (!(params.p >= 0.0 && params.p <= 1.0)) throw Error(ErrorCode::kParameter, "p must lie in [0, 1]");
  if (params.default_bandwidth == 0) throw Error(ErrorCode::kParameter, "default bandwidth must be positive");

  const std::uint32_t n = params.n;
  Graph g;
  for (std::uint32_t i = 0; i < n; ++i) g.add_node(NodeId{i});
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 1; j <= params.k / 2; ++j) {
      g.add_edge(NodeId{i}, NodeId{(i + j) % n}, params.default_bandwidth);
    }
  }

  Rng rng(params.seed);
  for (std::uint32_t j = 1; j <= params.k / 2; ++j) {
    for (std::uint32_t i = 0; i < n; ++i) {
      if (!rng.bernoulli(params.p)) continue;
      const NodeId a{i};
      const NodeId old{(i + j) % n};
      if (g.degree(a) + 1 >= n) continue;  // a is adjacent to everything
      NodeId target;
      do {
        target = NodeId{static_cast<std::uint32_t>(rng.below(n))};
      } while (target == a || g.has_edge(a, target));
      g.remove_edge(a, old);
      g.add_edge(a, target, params.default_bandwidth);
    }
  }
  return g;
}

Graph load_graph(std::span<const EdgeRecord> edges) {
  Graph g;
  for (const auto& e : edges) {
    if (e.u == e.v) throw Error(ErrorCode::kFormat, "self-loop at node " + node_str(e.u));
    if (!g.has_node(e.u)) g.add_node(e.u);
    if (!g.has_node(e.v)) g.add_node(e.v);
    if (g.has_edge(e.u, e.v)) throw Error(ErrorCode::kFormat, "duplicate edge " + edge_str(e.u, e.v));
    if (e.bandwidth == 0) throw Error(ErrorCode::kFormat, "edge " + edge_str(e.u, e.v) + " has zero bandwidth");
    g.add_edge(e.u, e.v, e.bandwidth);
  }
  return g;
}

std::vector<EdgeRecord> parse_edge_list(std::istream& in) {
  std::vector<EdgeRecord> out;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    long long u = 0, v = 0, bw = 0;
    if (!(fields >> u)) continue;  // blank or comment-only
    if (!(fields >> v >> bw)) {
      throw FormatError("line " + std::to_string(line_no) + ": expected `u v bandwidth`", std::nullopt, line_no);
    }
    std::string extra;
    if (fields >> extra) {
      throw FormatError("line " + std::to_string(line_no) + ": trailing field `" + extra + "`", std::nullopt, line_no);
    }
    if (u < 0 || v < 0 || u > UINT32_MAX || v > UINT32_MAX || bw <= 0 || bw > UINT32_MAX) {
      throw FormatError("line " + std::to_string(line_no) + ": ids must be non-negative, bandwidth positive",
                        std::nullopt, line_no);
    }
    out.push_back(EdgeRecord{NodeId{static_cast<std::uint32_t>(u)}, NodeId{static_cast<std::uint32_t>(v)},
                             static_cast<Bandwidth>(bw)});
  }
  return out;
}

Graph load_edge_list_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open edge list " + path.string());
  const auto records = parse_edge_list(in);
  return load_graph(records);
}

void write_edge_list(std::ostream& out, const Graph& g) {
  for (const auto& e : g.edges()) out << e.u.value << ' ' << e.v.value << ' ' << e.bandwidth << '\n';
}

void apply_churn_in_place(Graph& g, const ChurnEvent& event) {
  using Kind = ChurnEvent::Kind;
  switch (event.kind) {
    case Kind::kJoin:
      g.add_node(event.u);
      return;
    case Kind::kLeave:
      g.remove_node(event.u);
      return;
    case Kind::kLinkUp:
      if (!g.has_node(event.u) || !g.has_node(event.v)) {
        throw Error(ErrorCode::kNotFound, "link_up " + edge_str(event.u, event.v) + " references an unknown node");
      }
      if (g.has_edge(event.u, event.v)) {
        g.edge(event.u, event.v).up = true;
      } else {
        g.add_edge(event.u, event.v, event.bandwidth == 0 ? 1 : event.bandwidth);
      }
      return;
    case Kind::kLinkDown:
      g.edge(event.u, event.v).up = false;
      return;
    case Kind::kSetBandwidth:
      if (event.bandwidth == 0) throw Error(ErrorCode::kParameter, "bandwidth must be positive");
      g.edge(event.u, event.v).bandwidth = event.bandwidth;
      return;
  }
}

bool is_star_node(const Graph& g, NodeId v) {
  const std::size_t deg = g.degree(v);  // throws for unknown v
  // deg > 2|E| / n, compared in integers
  return deg * g.node_count() > 2 * g.edge_count();
}

}  // namespace perc
