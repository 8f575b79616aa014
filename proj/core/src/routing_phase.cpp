#include "percolation/routing_phase.hpp"

#include <memory>
#include <string>
#include <variant>

namespace perc {

namespace {

constexpr std::uint64_t kProbeTag = 0x50524f4245ULL;

struct ProbeRun : std::enable_shared_from_this<ProbeRun> {
  ProbeRun(Network& n, RoutingParams p) : net(n), params(p) {}

  Network& net;
  RoutingParams params;
  std::vector<Path> delivered;
  std::size_t dropped = 0;
  bool open = true;

  // Called when `probe` has arrived at `at`.
  void arrive(ProbePacket probe, NodeId at) {
    if (!open) return;
    const auto unavailable = net.unreachable_neighbors(at);
    const auto decision = step_probe(probe, at, net.table(at), params, net.rng(), unavailable);
    if (std::holds_alternative<Deliver>(decision)) {
      std::vector<NodeId> nodes;
      nodes.reserve(probe.relays.size() + 2);
      nodes.push_back(probe.source);
      nodes.insert(nodes.end(), probe.relays.begin(), probe.relays.end());
      nodes.push_back(at);
      try {
        delivered.push_back(make_path(net.graph(), std::move(nodes)));
      } catch (const Error&) {
        ++dropped;  // an earlier hop vanished under churn
      }
    } else if (const auto* fwd = std::get_if<Forward>(&decision)) {
      dispatch(at, fwd->next, fwd->probe);
    } else {
      ++dropped;
    }
  }

  void dispatch(NodeId from, NodeId to, ProbePacket probe) {
    const std::uint64_t key = hash_words({kProbeTag, probe.probe_id, probe.hop_counter});
    auto self = shared_from_this();
    const bool left = net.send(
        from, to, key, [self, probe](NodeId at) mutable { self->arrive(std::move(probe), at); },
        [self] { ++self->dropped; });
    if (!left) ++dropped;
  }
};

}  // namespace

RoutingPhaseResult run_routing_phase(Network& net, NodeId source, NodeId dest, const RoutingParams& params) {
  params.validate();
  if (!net.graph().has_node(source)) throw Error(ErrorCode::kNotFound, "unknown source " + std::to_string(source.value));
  if (!net.graph().has_node(dest)) throw Error(ErrorCode::kNotFound, "unknown destination " + std::to_string(dest.value));
  if (source == dest) throw Error(ErrorCode::kInvalidRequest, "source and destination are the same node");

  RoutingPhaseResult result;
  result.started = net.sim().now();
  const Tick deadline = result.started + params.window_for(net.link().latency);

  std::vector<LaunchedProbe> probes;
  try {
    probes = launch_probes(source, dest, net.table(source), params, net.next_probe_id());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoNeighbors) throw;
    result.failure = ErrorCode::kNoNeighbors;
    result.finished = result.started;
    return result;
  }
  for (std::size_t i = 1; i < probes.size(); ++i) net.next_probe_id();

  // Shared so late probe arrivals after the window find a closed collector.
  auto run = std::make_shared<ProbeRun>(net, params);
  result.probes_launched = probes.size();
  for (auto& lp : probes) run->dispatch(source, lp.next_hop, std::move(lp.probe));

  net.sim().run_until(deadline);
  run->open = false;

  result.candidates = std::move(run->delivered);
  result.probes_delivered = result.candidates.size();
  result.probes_dropped = run->dropped;
  result.finished = net.sim().now();

  // Routes are selected against the graph as it stands when the window closes.
  std::erase_if(result.candidates, [&](const Path& p) { return !path_is_live(net.graph(), p); });
  if (result.candidates.empty()) {
    result.failure = ErrorCode::kNoPath;
    return result;
  }
  result.route = select_paths(result.candidates, params);
  result.ack = propagate_ack(*result.route, net.tables(), net.graph());
  return result;
}

}  // namespace perc
