#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "percolation/random.hpp"
#include "percolation/topology.hpp"
#include "percolation/types.hpp"

namespace perc {

/// Per-node routing information table.
///
/// Holds the owner's close-neighbors (names double as addresses), the direct link
/// bandwidth to each, and for every (neighbor, destination) pair a measure counter and
/// the best path bandwidth seen so far. Unknown pairs read as (0, r_min).
class RoutingTable {
 public:
  explicit RoutingTable(NodeId owner, Bandwidth r_min = 1);

  NodeId owner() const { return owner_; }
  Bandwidth r_min() const { return r_min_; }

  std::span<const NodeId> neighbors() const { return neighbors_; }
  std::size_t neighbor_count() const { return neighbors_.size(); }
  bool has_neighbor(NodeId v) const;

  Bandwidth direct_bandwidth(NodeId neighbor) const;
  std::uint64_t measure(NodeId via, NodeId dest) const;
  Bandwidth path_bandwidth(NodeId via, NodeId dest) const;

  /// Re-runs the neighbor query against g. Entries for neighbors that are gone are
  /// dropped; surviving entries keep their values; new neighbors start at (0, r_min).
  void sync(const Graph& g);

  /// Forwarding choice toward dest. A destination that is itself a close-neighbor wins
  /// outright; otherwise a uniform pick among the max-measure neighbors not in exclude.
  std::optional<NodeId> best_neighbor(NodeId dest, std::span<const NodeId> exclude, Rng& rng) const;

  /// Reinforces next_hop toward every node in downstream by one unit.
  void bump_measures(NodeId next_hop, std::span<const NodeId> downstream, Bandwidth bottleneck);

  /// (via, dest, measure) triples with a non-zero measure, in key order.
  std::vector<std::tuple<NodeId, NodeId, std::uint64_t>> measure_entries() const;

 private:
  using Key = std::pair<NodeId, NodeId>;

  NodeId owner_;
  Bandwidth r_min_;
  std::vector<NodeId> neighbors_;
  std::map<NodeId, Bandwidth> direct_bandwidth_;
  std::map<Key, std::uint64_t> measures_;
  std::map<Key, Bandwidth> path_bandwidth_;
};

RoutingTable init_table(NodeId owner, const Graph& g, Bandwidth r_min = 1);

using TableSet = std::map<NodeId, RoutingTable>;

TableSet init_tables(const Graph& g, Bandwidth r_min = 1);

void to_json(nlohmann::json& j, const RoutingTable& t);

}  // namespace perc
