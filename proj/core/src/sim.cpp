#include "percolation/sim.hpp"

#include <algorithm>
#include <string>

#include "percolation/error.hpp"

namespace perc {

std::uint64_t Simulator::schedule(Tick at, EventKind kind, std::function<void()> action) {
  if (at < now_) {
    throw Error(ErrorCode::kLogic,
                "cannot schedule at tick " + std::to_string(at) + " before now (" + std::to_string(now_) + ")");
  }
  const std::uint64_t seq = next_seq_++;
  queue_.push(Event{at, seq, kind, std::move(action)});
  return seq;
}

std::size_t Simulator::run_until(Tick until) {
  if (until < now_) throw Error(ErrorCode::kLogic, "run_until into the past");
  std::size_t count = 0;
  while (!queue_.empty() && queue_.top().tick <= until) {
    // Copy out before popping; the action may schedule more events.
    Event e = queue_.top();
    queue_.pop();
    now_ = e.tick;
    ++count;
    ++processed_;
    if (e.action) e.action();
  }
  now_ = until;
  return count;
}

void LinkModel::validate() const {
  if (latency < 1) throw Error(ErrorCode::kParameter, "per-hop latency must be at least one tick");
  if (!(loss_probability >= 0.0 && loss_probability <= 1.0)) {
    throw Error(ErrorCode::kParameter, "loss probability must lie in [0, 1]");
  }
  for (const auto& w : jam_schedule) {
    if (w.start < 0 || w.end < w.start) throw Error(ErrorCode::kParameter, "jam window needs 0 <= start <= end");
  }
}

Network::Network(Graph graph, LinkModel link, std::uint64_t seed, Bandwidth r_min)
    : graph_(std::move(graph)),
      link_(std::move(link)),
      seed_(seed),
      rng_(hash_words({seed, 0x524e47ULL})),
      r_min_(r_min),
      tables_(init_tables(graph_, r_min)) {
  link_.validate();
  for (const auto& window : link_.jam_schedule) {
    if (window.start == window.end) continue;
    auto toggle = [this, nodes = window.nodes](int delta) {
      for (NodeId v : nodes) jam_depth_[v] += delta;
    };
    if (window.start <= sim_.now()) {
      toggle(+1);
    } else {
      sim_.schedule(window.start, EventKind::kJammingToggle, [toggle] { toggle(+1); });
    }
    sim_.schedule(window.end, EventKind::kJammingToggle, [toggle] { toggle(-1); });
  }
}

RoutingTable& Network::table(NodeId v) {
  auto it = tables_.find(v);
  if (it == tables_.end()) throw Error(ErrorCode::kNotFound, "no routing table for node " + std::to_string(v.value));
  return it->second;
}

void Network::resync(NodeId v) {
  if (!graph_.has_node(v)) {
    tables_.erase(v);
    return;
  }
  auto [it, inserted] = tables_.try_emplace(v, v, r_min_);
  it->second.sync(graph_);
}

void Network::apply_churn(const ChurnEvent& event) {
  std::vector<NodeId> touched{event.u, event.v};
  if (event.kind == ChurnEvent::Kind::kLeave && graph_.has_node(event.u)) {
    const auto adj = graph_.neighbors(event.u);
    touched.insert(touched.end(), adj.begin(), adj.end());
  }
  apply_churn_in_place(graph_, event);
  for (NodeId v : touched) resync(v);
}

void Network::schedule_churn(Tick at, const ChurnEvent& event) {
  sim_.schedule(at, EventKind::kChurn, [this, event] { apply_churn(event); });
}

bool Network::jammed(NodeId v) const {
  auto it = jam_depth_.find(v);
  return it != jam_depth_.end() && it->second > 0;
}

std::vector<NodeId> Network::unreachable_neighbors(NodeId v) const {
  std::vector<NodeId> out;
  for (NodeId w : graph_.neighbors(v)) {
    if (!graph_.link_up(v, w)) out.push_back(w);
  }
  return out;
}

bool Network::lost(std::uint64_t packet_key, NodeId from, NodeId to) const {
  if (link_.loss_probability <= 0.0) return false;
  return to_unit(hash_words({seed_, packet_key, from.value, to.value})) < link_.loss_probability;
}

bool Network::send(NodeId from, NodeId to, std::uint64_t packet_key, ArrivalFn on_arrival, LostFn on_lost) {
  if (!graph_.has_node(from) || !graph_.link_up(from, to)) {
    ++stats_.link_failures;
    return false;
  }
  if (jammed(from)) {
    ++stats_.jammed;
    return false;
  }
  ++stats_.sent;
  const bool dropped = lost(packet_key, from, to);
  sim_.schedule(sim_.now() + link_.latency, EventKind::kPacketArrival,
                [this, from, to, dropped, on_arrival = std::move(on_arrival), on_lost = std::move(on_lost)] {
                  auto fail = [&](std::uint64_t& counter) {
                    ++counter;
                    if (on_lost) on_lost();
                  };
                  if (dropped) return fail(stats_.lost);
                  // The link may have gone down, or the receiver left, while in flight.
                  if (!graph_.has_node(to) || !graph_.link_up(from, to)) return fail(stats_.link_failures);
                  if (jammed(to)) return fail(stats_.jammed);
                  ++stats_.delivered;
                  on_arrival(to);
                });
  return true;
}

}  // namespace perc
