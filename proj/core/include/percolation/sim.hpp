#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <span>
#include <vector>

#include "percolation/random.hpp"
#include "percolation/routing_table.hpp"
#include "percolation/topology.hpp"
#include "percolation/types.hpp"

namespace perc {

enum class EventKind { kPacketArrival, kChurn, kJammingToggle, kTimer };

struct Event {
  Tick tick = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::kTimer;
  std::function<void()> action;
};

/// Discrete-event engine. Events run in (tick, seq) order; seq is assigned at
/// schedule time, so same-tick events run in the order they were scheduled.
class Simulator {
 public:
  Tick now() const { return now_; }

  /// Throws kLogic when `at` lies in the past.
  std::uint64_t schedule(Tick at, EventKind kind, std::function<void()> action);

  /// Processes every event with tick <= until, then sets the clock to until.
  std::size_t run_until(Tick until);

  bool idle() const { return queue_.empty(); }
  std::size_t pending() const { return queue_.size(); }
  std::uint64_t processed() const { return processed_; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.tick != b.tick ? a.tick > b.tick : a.seq > b.seq;
    }
  };

  Tick now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t processed_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
};

struct JamWindow {
  std::vector<NodeId> nodes;
  Tick start = 0;
  Tick end = 0;  // exclusive
};

struct LinkModel {
  Tick latency = 1;
  double loss_probability = 0.0;
  std::vector<JamWindow> jam_schedule;

  void validate() const;
};

struct NetworkStats {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t lost = 0;
  std::uint64_t jammed = 0;
  std::uint64_t link_failures = 0;
};

/// A graph living inside a simulator: per-node routing tables, hop-by-hop packet
/// delivery with latency, seeded loss, jamming windows and scheduled churn.
class Network {
 public:
  Network(Graph graph, LinkModel link, std::uint64_t seed, Bandwidth r_min = 1);

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  Simulator& sim() { return sim_; }
  const Simulator& sim() const { return sim_; }
  const Graph& graph() const { return graph_; }
  const LinkModel& link() const { return link_; }
  std::uint64_t seed() const { return seed_; }
  Rng& rng() { return rng_; }

  TableSet& tables() { return tables_; }
  RoutingTable& table(NodeId v);

  /// Applies a churn event now and re-syncs the tables of every node it touches.
  void apply_churn(const ChurnEvent& event);
  void schedule_churn(Tick at, const ChurnEvent& event);

  bool jammed(NodeId v) const;

  /// Neighbors of v whose link is currently down.
  std::vector<NodeId> unreachable_neighbors(NodeId v) const;

  using ArrivalFn = std::function<void(NodeId at)>;
  using LostFn = std::function<void()>;

  /// Sends one packet over the link from -> to. `packet_key` identifies the packet
  /// for the loss draw, which is a pure function of (seed, key, from, to) so that
  /// reruns with more traffic see the same fate for the packets they share. Returns
  /// false when the packet never leaves; otherwise exactly one of on_arrival or
  /// on_lost runs later.
  bool send(NodeId from, NodeId to, std::uint64_t packet_key, ArrivalFn on_arrival, LostFn on_lost = {});

  std::uint64_t next_probe_id() { return next_probe_id_++; }

  const NetworkStats& stats() const { return stats_; }

 private:
  bool lost(std::uint64_t packet_key, NodeId from, NodeId to) const;
  void resync(NodeId v);

  Simulator sim_;
  Graph graph_;
  LinkModel link_;
  std::uint64_t seed_;
  Rng rng_;
  Bandwidth r_min_;
  TableSet tables_;
  std::map<NodeId, int> jam_depth_;
  std::uint64_t next_probe_id_ = 0;
  NetworkStats stats_;
};

}  // namespace perc
