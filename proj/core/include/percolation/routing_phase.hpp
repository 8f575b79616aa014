#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "percolation/error.hpp"
#include "percolation/routing.hpp"
#include "percolation/sim.hpp"

namespace perc {

struct RoutingPhaseResult {
  std::optional<Route> route;
  std::optional<ErrorCode> failure;  // kNoNeighbors or kNoPath
  std::vector<Path> candidates;
  AckReport ack;
  std::size_t probes_launched = 0;
  std::size_t probes_delivered = 0;
  std::size_t probes_dropped = 0;
  Tick started = 0;
  Tick finished = 0;

  bool ok() const { return route.has_value(); }
};

/// Probe fan-out from `source`, greedy probe walks through the network until the
/// probe window closes, path selection at `dest`, then ACK reinforcement of the
/// tables along every selected path. Advances the simulation by the probe window.
RoutingPhaseResult run_routing_phase(Network& net, NodeId source, NodeId dest, const RoutingParams& params);

}  // namespace perc
