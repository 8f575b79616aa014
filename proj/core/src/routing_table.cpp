#include "percolation/routing_table.hpp"

#include <algorithm>
#include <string>

#include <nlohmann/json.hpp>

#include "percolation/error.hpp"

namespace perc {

RoutingTable::RoutingTable(NodeId owner, Bandwidth r_min) : owner_(owner), r_min_(r_min) {
  if (r_min == 0) throw Error(ErrorCode::kParameter, "r_min must be positive");
}

bool RoutingTable::has_neighbor(NodeId v) const {
  return std::binary_search(neighbors_.begin(), neighbors_.end(), v);
}

Bandwidth RoutingTable::direct_bandwidth(NodeId neighbor) const {
  auto it = direct_bandwidth_.find(neighbor);
  if (it == direct_bandwidth_.end()) {
    throw Error(ErrorCode::kNotFound, std::to_string(neighbor.value) + " is not a close-neighbor of " +
                                          std::to_string(owner_.value));
  }
  return it->second;
}

std::uint64_t RoutingTable::measure(NodeId via, NodeId dest) const {
  auto it = measures_.find({via, dest});
  return it == measures_.end() ? 0 : it->second;
}

Bandwidth RoutingTable::path_bandwidth(NodeId via, NodeId dest) const {
  auto it = path_bandwidth_.find({via, dest});
  return it == path_bandwidth_.end() ? r_min_ : it->second;
}

void RoutingTable::sync(const Graph& g) {
  const auto adj = g.neighbors(owner_);
  neighbors_.assign(adj.begin(), adj.end());
  direct_bandwidth_.clear();
  for (NodeId v : neighbors_) direct_bandwidth_.emplace(v, g.edge(owner_, v).bandwidth);
  std::erase_if(measures_, [&](const auto& kv) { return !has_neighbor(kv.first.first); });
  std::erase_if(path_bandwidth_, [&](const auto& kv) { return !has_neighbor(kv.first.first); });
}

std::optional<NodeId> RoutingTable::best_neighbor(NodeId dest, std::span<const NodeId> exclude, Rng& rng) const {
  if (dest == owner_) throw Error(ErrorCode::kInvalidRequest, "best_neighbor toward the table owner");
  auto excluded = [&](NodeId v) {
    return v == owner_ || std::find(exclude.begin(), exclude.end(), v) != exclude.end();
  };
  if (has_neighbor(dest) && !excluded(dest)) return dest;

  std::vector<NodeId> best;
  std::uint64_t best_measure = 0;
  for (NodeId v : neighbors_) {
    if (excluded(v)) continue;
    const auto m = measure(v, dest);
    if (best.empty() || m > best_measure) {
      best.assign(1, v);
      best_measure = m;
    } else if (m == best_measure) {
      best.push_back(v);
    }
  }
  if (best.empty()) return std::nullopt;
  if (best.size() == 1) return best.front();
  return best[rng.below(best.size())];
}

void RoutingTable::bump_measures(NodeId next_hop, std::span<const NodeId> downstream, Bandwidth bottleneck) {
  if (!has_neighbor(next_hop)) {
    throw Error(ErrorCode::kConsistency, "bump via " + std::to_string(next_hop.value) +
                                             ", not a close-neighbor of " + std::to_string(owner_.value));
  }
  const Bandwidth bw = std::max(bottleneck, r_min_);
  for (NodeId d : downstream) {
    ++measures_[{next_hop, d}];
    auto [it, inserted] = path_bandwidth_.try_emplace({next_hop, d}, bw);
    if (!inserted) it->second = std::max(it->second, bw);
  }
}

std::vector<std::tuple<NodeId, NodeId, std::uint64_t>> RoutingTable::measure_entries() const {
  std::vector<std::tuple<NodeId, NodeId, std::uint64_t>> out;
  for (const auto& [k, m] : measures_) {
    if (m != 0) out.emplace_back(k.first, k.second, m);
  }
  return out;
}

RoutingTable init_table(NodeId owner, const Graph& g, Bandwidth r_min) {
  if (!g.has_node(owner)) throw Error(ErrorCode::kNotFound, "unknown node " + std::to_string(owner.value));
  RoutingTable t(owner, r_min);
  t.sync(g);
  return t;
}

TableSet init_tables(const Graph& g, Bandwidth r_min) {
  TableSet tables;
  for (NodeId v : g.nodes()) tables.emplace(v, init_table(v, g, r_min));
  return tables;
}

void to_json(nlohmann::json& j, const RoutingTable& t) {
  j = nlohmann::json::object();
  j["owner"] = t.owner().value;
  j["r_min"] = t.r_min();
  auto& neighbors = j["neighbors"] = nlohmann::json::array();
  for (NodeId v : t.neighbors()) {
    neighbors.push_back({{"id", v.value}, {"bandwidth", t.direct_bandwidth(v)}});
  }
  auto& measures = j["measures"] = nlohmann::json::array();
  for (const auto& [via, dest, m] : t.measure_entries()) {
    measures.push_back({{"via", via.value},
                        {"dest", dest.value},
                        {"measure", m},
                        {"path_bandwidth", t.path_bandwidth(via, dest)}});
  }
}

}  // namespace perc
