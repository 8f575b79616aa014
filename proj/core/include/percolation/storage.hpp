#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "percolation/error.hpp"
#include "percolation/fountain.hpp"
#include "percolation/sim.hpp"

namespace perc {

struct StorageOptions {
  std::uint32_t frame_id = 0;
  RobustSolitonParams code;
  /// 1 places remote packets on direct neighbors; larger values walk that many hops
  /// away from the owner before placing.
  std::uint32_t hop_radius = 1;
};

struct Placement {
  std::uint32_t n = 0;
  NodeId holder;
  std::vector<NodeId> path;  // owner first, holder last
};

struct StoragePlan {
  NodeId owner;
  std::uint16_t k = 0;
  std::uint16_t m = 0;
  std::uint32_t frame_id = 0;
  std::uint32_t length = 0;
  std::size_t s1 = 0;
  std::size_t s2 = 0;
  RobustSolitonParams code;
  std::vector<CodedPacket> local;
  std::map<NodeId, std::vector<CodedPacket>> remote;
  std::vector<Placement> placements;

  std::size_t remote_count() const;
  std::vector<NodeId> holders() const;
};

/// Encodes `data` into s1 + s2 coded packets with distinct indices, keeps s1 at the
/// owner and scatters s2 over other nodes. Requires s1 + s2 > K and s2 < K.
StoragePlan disperse(Network& net, NodeId owner, std::span<const std::uint8_t> data, std::uint16_t k,
                     std::uint16_t m, std::size_t s1, std::size_t s2, const StorageOptions& options = {});

struct RecoveryResult {
  bool recovered = false;
  std::optional<ErrorCode> failure;
  std::vector<std::uint8_t> data;
  std::size_t packets_used = 0;
  std::size_t sources_recovered = 0;
};

/// Peels using every packet held by a node in `available` (the owner counts when listed).
RecoveryResult recover(const StoragePlan& plan, std::span<const NodeId> available);

void to_json(nlohmann::json& j, const StoragePlan& plan);

}  // namespace perc
