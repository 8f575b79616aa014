#include "percolation/storage.hpp"

#include <algorithm>
#include <string>

#include <nlohmann/json.hpp>

namespace perc {

std::size_t StoragePlan::remote_count() const {
  std::size_t total = 0;
  for (const auto& [_, packets] : remote) total += packets.size();
  return total;
}

std::vector<NodeId> StoragePlan::holders() const {
  std::vector<NodeId> out;
  for (const auto& [v, _] : remote) out.push_back(v);
  return out;
}

namespace {

// Self-avoiding walk of up to `radius` hops that starts at `first`.
std::vector<NodeId> placement_walk(Network& net, NodeId owner, NodeId first, std::uint32_t radius) {
  std::vector<NodeId> walk{owner, first};
  while (walk.size() <= radius) {
    std::vector<NodeId> options;
    for (NodeId w : net.graph().neighbors(walk.back())) {
      if (net.graph().link_up(walk.back(), w) && std::find(walk.begin(), walk.end(), w) == walk.end()) {
        options.push_back(w);
      }
    }
    if (options.empty()) break;
    walk.push_back(options[net.rng().below(options.size())]);
  }
  return walk;
}

}  // namespace

StoragePlan disperse(Network& net, NodeId owner, std::span<const std::uint8_t> data, std::uint16_t k,
                     std::uint16_t m, std::size_t s1, std::size_t s2, const StorageOptions& options) {
  if (!(s1 + s2 > k && s2 < k)) {
    throw Error(ErrorCode::kConstraintViolation, "storage split needs S1 + S2 > K and S2 < K (S1=" +
                                                     std::to_string(s1) + ", S2=" + std::to_string(s2) +
                                                     ", K=" + std::to_string(k) + ")");
  }
  if (options.hop_radius < 1) throw Error(ErrorCode::kParameter, "hop_radius must be >= 1");
  if (!net.graph().has_node(owner)) throw Error(ErrorCode::kNotFound, "unknown owner " + std::to_string(owner.value));

  std::vector<NodeId> neighbors;
  for (NodeId w : net.graph().neighbors(owner)) {
    if (net.graph().link_up(owner, w)) neighbors.push_back(w);
  }
  if (s2 > 0 && neighbors.empty()) {
    throw Error(ErrorCode::kNoNeighbors, "owner " + std::to_string(owner.value) + " has no reachable neighbors");
  }

  const Encoder encoder(SourceBlock::from_bytes(data, k, m), options.frame_id, options.code);
  StoragePlan plan;
  plan.owner = owner;
  plan.k = k;
  plan.m = m;
  plan.frame_id = options.frame_id;
  plan.length = static_cast<std::uint32_t>(data.size());
  plan.s1 = s1;
  plan.s2 = s2;
  plan.code = options.code;

  std::uint32_t n = 0;
  for (std::size_t i = 0; i < s1; ++i) plan.local.push_back(encoder.packet(n++));
  for (std::size_t i = 0; i < s2; ++i) {
    auto walk = placement_walk(net, owner, neighbors[i % neighbors.size()], options.hop_radius);
    const NodeId holder = walk.back();
    plan.remote[holder].push_back(encoder.packet(n));
    plan.placements.push_back(Placement{n, holder, std::move(walk)});
    ++n;
  }
  return plan;
}

RecoveryResult recover(const StoragePlan& plan, std::span<const NodeId> available) {
  auto listed = [&](NodeId v) { return std::find(available.begin(), available.end(), v) != available.end(); };

  Decoder decoder(plan.frame_id, plan.k, plan.m, plan.code);
  RecoveryResult result;
  auto feed = [&](const std::vector<CodedPacket>& packets) {
    for (const auto& p : packets) {
      if (decoder.complete()) return;
      ++result.packets_used;
      decoder.push(p);
    }
  };
  if (listed(plan.owner)) feed(plan.local);
  for (const auto& [holder, packets] : plan.remote) {
    if (listed(holder)) feed(packets);
  }

  result.sources_recovered = decoder.recovered_count();
  if (!decoder.complete()) {
    result.failure = ErrorCode::kInsufficientPackets;
    return result;
  }
  const auto block = decoder.block();
  result.data.assign(block.bytes().begin(), block.bytes().begin() + plan.length);
  result.recovered = true;
  return result;
}

void to_json(nlohmann::json& j, const StoragePlan& plan) {
  auto indices = [](const std::vector<CodedPacket>& packets) {
    auto out = nlohmann::json::array();
    for (const auto& p : packets) out.push_back(p.n);
    return out;
  };
  auto remote = nlohmann::json::array();
  for (const auto& [holder, packets] : plan.remote) {
    remote.push_back({{"holder", holder.value}, {"packets", indices(packets)}});
  }
  auto placements = nlohmann::json::array();
  for (const auto& p : plan.placements) {
    auto path = nlohmann::json::array();
    for (NodeId v : p.path) path.push_back(v.value);
    placements.push_back({{"n", p.n}, {"holder", p.holder.value}, {"path", std::move(path)}});
  }
  j = {{"owner", plan.owner.value},
       {"K", plan.k},
       {"M", plan.m},
       {"frame_id", plan.frame_id},
       {"length", plan.length},
       {"S1", plan.s1},
       {"S2", plan.s2},
       {"local", indices(plan.local)},
       {"remote", std::move(remote)},
       {"placements", std::move(placements)}};
}

}  // namespace perc
