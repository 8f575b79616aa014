#include "percolation/routing.hpp"

#include <algorithm>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "percolation/error.hpp"

namespace perc {

namespace {

bool has_duplicates(std::vector<NodeId> nodes) {
  std::sort(nodes.begin(), nodes.end());
  return std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end();
}

bool contains(std::span<const NodeId> list, NodeId v) { return std::find(list.begin(), list.end(), v) != list.end(); }

// Total orders: rule key first, then the other key, then node ids.
bool ranks_before(const Path& a, const Path& b, SelectionRule rule) {
  if (rule == SelectionRule::kLeastHops) {
    if (a.hops() != b.hops()) return a.hops() < b.hops();
    if (a.bottleneck != b.bottleneck) return a.bottleneck > b.bottleneck;
  } else {
    if (a.bottleneck != b.bottleneck) return a.bottleneck > b.bottleneck;
    if (a.hops() != b.hops()) return a.hops() < b.hops();
  }
  return a.nodes < b.nodes;
}

}  // namespace

std::string_view to_string(SelectionRule rule) noexcept {
  return rule == SelectionRule::kLeastHops ? "least_hops" : "max_throughput";
}

SelectionRule selection_rule_from_string(std::string_view name) {
  if (name == "least_hops") return SelectionRule::kLeastHops;
  if (name == "max_throughput") return SelectionRule::kMaxThroughput;
  throw Error(ErrorCode::kParameter, "unknown selection rule `" + std::string(name) + "`");
}

std::string_view to_string(DropReason reason) noexcept {
  return reason == DropReason::kHopLimit ? "HopLimit" : "ClosedLoop";
}

void RoutingParams::validate() const {
  if (max_hops < 1) throw Error(ErrorCode::kParameter, "max_hops must be >= 1");
  if (max_paths < 1) throw Error(ErrorCode::kParameter, "max_paths must be >= 1");
  if (probe_window < 0) throw Error(ErrorCode::kParameter, "probe_window must be non-negative");
}

Tick RoutingParams::window_for(Tick latency) const {
  const Tick minimum = static_cast<Tick>(max_hops) * latency;
  if (probe_window == 0) return minimum + 1;
  if (probe_window < minimum) {
    throw Error(ErrorCode::kParameter, "probe_window " + std::to_string(probe_window) +
                                           " shorter than max_hops * latency = " + std::to_string(minimum));
  }
  return probe_window;
}

void ProbePacket::validate(const RoutingParams& params) const {
  if (hop_counter != relays.size()) throw Error(ErrorCode::kProtocol, "probe hop counter disagrees with relay list");
  if (hop_counter > params.max_hops) throw Error(ErrorCode::kProtocol, "probe hop counter exceeds max_hops");
  if (has_duplicates(relays)) throw Error(ErrorCode::kProtocol, "probe relay list repeats a node");
  if (source == dest) throw Error(ErrorCode::kProtocol, "probe addressed to its own source");
  if (contains(relays, source) || contains(relays, dest)) {
    throw Error(ErrorCode::kProtocol, "probe relay list contains an endpoint");
  }
}

std::span<const NodeId> Path::interior() const {
  if (nodes.size() <= 2) return {};
  return std::span<const NodeId>(nodes).subspan(1, nodes.size() - 2);
}

Path make_path(const Graph& g, std::vector<NodeId> nodes) {
  if (nodes.size() < 2) throw Error(ErrorCode::kConsistency, "a path needs at least two nodes");
  if (has_duplicates(nodes)) throw Error(ErrorCode::kConsistency, "path is not simple");
  Bandwidth bottleneck = 0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    if (!g.has_edge(nodes[i], nodes[i + 1])) {
      throw Error(ErrorCode::kConsistency, "path step " + std::to_string(nodes[i].value) + " -> " +
                                               std::to_string(nodes[i + 1].value) + " is not an edge");
    }
    const Bandwidth bw = g.edge(nodes[i], nodes[i + 1]).bandwidth;
    bottleneck = i == 0 ? bw : std::min(bottleneck, bw);
  }
  return Path{std::move(nodes), bottleneck};
}

bool path_is_live(const Graph& g, const Path& path) {
  if (path.nodes.size() < 2 || has_duplicates(path.nodes)) return false;
  Bandwidth bottleneck = 0;
  for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    if (!g.link_up(path.nodes[i], path.nodes[i + 1])) return false;
    const Bandwidth bw = g.edge(path.nodes[i], path.nodes[i + 1]).bandwidth;
    bottleneck = i == 0 ? bw : std::min(bottleneck, bw);
  }
  return bottleneck == path.bottleneck;
}

std::vector<LaunchedProbe> launch_probes(NodeId source, NodeId dest, const RoutingTable& table,
                                         const RoutingParams& params, std::uint64_t first_probe_id) {
  params.validate();
  if (source == dest) throw Error(ErrorCode::kInvalidRequest, "source and destination are the same node");
  if (table.owner() != source) throw Error(ErrorCode::kConsistency, "routing table does not belong to the source");
  if (table.neighbor_count() == 0) {
    throw Error(ErrorCode::kNoNeighbors, "node " + std::to_string(source.value) + " has no close-neighbors");
  }
  std::vector<LaunchedProbe> out;
  out.reserve(table.neighbor_count());
  std::uint64_t id = first_probe_id;
  for (NodeId v : table.neighbors()) {
    ProbePacket p;
    p.probe_id = id++;
    p.source = source;
    p.dest = dest;
    p.relays.reserve(params.max_hops);
    out.push_back(LaunchedProbe{v, std::move(p)});
  }
  return out;
}

ProbeDecision step_probe(const ProbePacket& probe, NodeId at, const RoutingTable& table,
                         const RoutingParams& params, Rng& rng, std::span<const NodeId> unavailable) {
  probe.validate(params);
  if (table.owner() != at) throw Error(ErrorCode::kConsistency, "routing table does not belong to the current node");
  if (at == probe.source || contains(probe.relays, at)) {
    throw Error(ErrorCode::kProtocol, "probe revisits node " + std::to_string(at.value));
  }
  if (at == probe.dest) return Deliver{};

  // The path so far is source..at, hop_counter + 1 hops; any onward delivery adds at
  // least one more, so stop while there is still room to stay within max_hops.
  if (probe.hop_counter + 2 > params.max_hops) return Drop{DropReason::kHopLimit};

  std::vector<NodeId> exclude(probe.relays.begin(), probe.relays.end());
  exclude.push_back(at);
  exclude.push_back(probe.source);
  exclude.insert(exclude.end(), unavailable.begin(), unavailable.end());

  const auto next = table.best_neighbor(probe.dest, exclude, rng);
  if (!next) return Drop{DropReason::kClosedLoop};

  Forward f{*next, probe};
  f.probe.hop_counter += 1;
  f.probe.relays.push_back(at);
  return f;
}

Route select_paths(std::vector<Path> candidates, const RoutingParams& params) {
  params.validate();
  if (candidates.empty()) throw Error(ErrorCode::kNoPath, "no candidate paths");

  const NodeId source = candidates.front().source();
  const NodeId dest = candidates.front().dest();
  for (const auto& p : candidates) {
    if (p.nodes.size() < 2 || p.source() != source || p.dest() != dest) {
      throw Error(ErrorCode::kConsistency, "candidate paths disagree on endpoints");
    }
    if (p.hops() > params.max_hops) throw Error(ErrorCode::kConsistency, "candidate path exceeds max_hops");
    if (has_duplicates(p.nodes)) throw Error(ErrorCode::kConsistency, "candidate path is not simple");
  }

  std::sort(candidates.begin(), candidates.end(),
            [&](const Path& a, const Path& b) { return ranks_before(a, b, params.rule); });
  Route route{source, dest, {}, params.rule};
  std::set<std::vector<NodeId>> seen;
  std::set<NodeId> used;
  for (auto& p : candidates) {
    if (route.paths.size() >= params.max_paths) break;
    if (!seen.insert(p.nodes).second) continue;
    const auto inner = p.interior();
    if (std::any_of(inner.begin(), inner.end(), [&](NodeId v) { return used.contains(v); })) continue;
    used.insert(inner.begin(), inner.end());
    route.paths.push_back(std::move(p));
  }
  return route;
}

AckReport propagate_ack(const Route& route, TableSet& tables, const Graph& g) {
  AckReport report;
  for (std::size_t i = 0; i < route.paths.size(); ++i) {
    const auto& nodes = route.paths[i].nodes;
    // Feedback travels dest -> source; it stops at the first broken link, and only
    // the nodes it actually reached update their tables.
    std::size_t reached = nodes.size() - 1;
    while (reached > 0 && g.link_up(nodes[reached - 1], nodes[reached])) --reached;
    if (reached > 0) report.failed_paths.push_back(i);
    for (std::size_t k = nodes.size() - 1; k-- > reached;) {
      auto it = tables.find(nodes[k]);
      if (it == tables.end()) continue;
      const std::span<const NodeId> downstream(nodes.data() + k + 1, nodes.size() - k - 1);
      it->second.bump_measures(nodes[k + 1], downstream, route.paths[i].bottleneck);
    }
  }
  return report;
}

void to_json(nlohmann::json& j, const Path& p) {
  auto nodes = nlohmann::json::array();
  for (NodeId v : p.nodes) nodes.push_back(v.value);
  j = {{"nodes", std::move(nodes)}, {"hops", p.hops()}, {"bottleneck", p.bottleneck}};
}

void to_json(nlohmann::json& j, const Route& r) {
  j = {{"source", r.source.value},
       {"dest", r.dest.value},
       {"rule", to_string(r.rule)},
       {"paths", r.paths}};
}

void from_json(const nlohmann::json& j, Route& r) {
  r.source = NodeId{j.at("source").get<std::uint32_t>()};
  r.dest = NodeId{j.at("dest").get<std::uint32_t>()};
  r.rule = selection_rule_from_string(j.at("rule").get<std::string>());
  r.paths.clear();
  for (const auto& jp : j.at("paths")) {
    Path p;
    for (const auto& v : jp.at("nodes")) p.nodes.push_back(NodeId{v.get<std::uint32_t>()});
    p.bottleneck = jp.at("bottleneck").get<Bandwidth>();
    if (p.nodes.size() < 2 || p.source() != r.source || p.dest() != r.dest) {
      throw Error(ErrorCode::kFormat, "route path endpoints disagree with the route header");
    }
    r.paths.push_back(std::move(p));
  }
}

}  // namespace perc
