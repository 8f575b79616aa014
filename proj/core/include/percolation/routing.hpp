#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "percolation/random.hpp"
#include "percolation/routing_table.hpp"
#include "percolation/topology.hpp"
#include "percolation/types.hpp"

namespace perc {

enum class SelectionRule { kLeastHops, kMaxThroughput };

std::string_view to_string(SelectionRule rule) noexcept;
SelectionRule selection_rule_from_string(std::string_view name);

struct RoutingParams {
  /// Y: maximum hops of any selected path.
  std::uint32_t max_hops = 6;
  /// X: maximum number of paths in a route.
  std::uint32_t max_paths = 5;
  /// Ticks the destination collects probes before selecting. 0 means
  /// max_hops * latency + 1.
  Tick probe_window = 0;
  SelectionRule rule = SelectionRule::kLeastHops;

  void validate() const;
  Tick window_for(Tick latency) const;
};

/// Routing-phase probe. `relays` holds the relay nodes written so far; the source
/// travels in the header and is not a relay.
struct ProbePacket {
  std::uint64_t probe_id = 0;
  NodeId source;
  NodeId dest;
  std::uint32_t hop_counter = 0;
  std::vector<NodeId> relays;

  /// Checks hop_counter == |relays|, no duplicates, capacity.
  void validate(const RoutingParams& params) const;
};

struct LaunchedProbe {
  NodeId next_hop;
  ProbePacket probe;
};

struct Path {
  std::vector<NodeId> nodes;
  Bandwidth bottleneck = 0;

  std::size_t hops() const { return nodes.empty() ? 0 : nodes.size() - 1; }
  NodeId source() const { return nodes.front(); }
  NodeId dest() const { return nodes.back(); }
  std::span<const NodeId> interior() const;

  friend bool operator==(const Path&, const Path&) = default;
};

struct Route {
  NodeId source;
  NodeId dest;
  std::vector<Path> paths;
  SelectionRule rule = SelectionRule::kLeastHops;

  friend bool operator==(const Route&, const Route&) = default;
};

/// Builds a path over g, computing its bottleneck. Throws kConsistency when the node
/// sequence is not a simple path of existing edges.
Path make_path(const Graph& g, std::vector<NodeId> nodes);

/// True when `path` is simple, every consecutive pair is an up link in g, and its
/// recorded bottleneck matches the graph.
bool path_is_live(const Graph& g, const Path& path);

/// One probe per close-neighbor of the source, hop counter 0, no relays.
std::vector<LaunchedProbe> launch_probes(NodeId source, NodeId dest, const RoutingTable& table,
                                         const RoutingParams& params, std::uint64_t first_probe_id = 0);

enum class DropReason { kHopLimit, kClosedLoop };

std::string_view to_string(DropReason reason) noexcept;

struct Deliver {};
struct Forward {
  NodeId next;
  ProbePacket probe;
};
struct Drop {
  DropReason reason;
};

using ProbeDecision = std::variant<Deliver, Forward, Drop>;

/// Handles a probe received at `at`. `unavailable` lists neighbors the node knows it
/// cannot reach right now (links down); they are excluded like visited nodes.
ProbeDecision step_probe(const ProbePacket& probe, NodeId at, const RoutingTable& table,
                         const RoutingParams& params, Rng& rng, std::span<const NodeId> unavailable = {});

/// Destination-side selection: dedupe, order by the rule, then greedily keep paths
/// whose interiors are disjoint from every kept path, up to max_paths.
Route select_paths(std::vector<Path> candidates, const RoutingParams& params);

struct AckReport {
  /// Indices into route.paths whose feedback could not traverse a down or missing link.
  std::vector<std::size_t> failed_paths;

  bool complete() const { return failed_paths.empty(); }
};

/// Walks each path back from the destination; every node before the destination
/// reinforces its successor toward all downstream nodes.
AckReport propagate_ack(const Route& route, TableSet& tables, const Graph& g);

void to_json(nlohmann::json& j, const Path& p);
void to_json(nlohmann::json& j, const Route& r);
void from_json(const nlohmann::json& j, Route& r);

}  // namespace perc
