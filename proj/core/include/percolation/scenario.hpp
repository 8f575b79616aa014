#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "percolation/routing.hpp"
#include "percolation/routing_phase.hpp"
#include "percolation/sim.hpp"
#include "percolation/topology.hpp"
#include "percolation/transport.hpp"

namespace perc {

/// Layered relay graph: ground station, a chain of earth relays, a chain of moon
/// relays, and a lander. Each earth relay reaches two moon relays; every moon relay
/// reaches the lander.
struct RelayParams {
  std::uint32_t earth_relays = 4;
  std::uint32_t moon_relays = 3;
  Bandwidth bandwidth = 2;
};

Graph relay_network(const RelayParams& params);
inline NodeId relay_ground() { return NodeId{0}; }
inline NodeId relay_lander(const RelayParams& params) { return NodeId{params.earth_relays + params.moon_relays + 1}; }

struct TopologySpec {
  std::optional<TopologyParams> generated;
  std::optional<std::filesystem::path> edge_list;
  std::optional<RelayParams> relay;
};

struct Flow {
  NodeId source;
  NodeId dest;
};

struct StorageSpec {
  NodeId owner{0};
  std::size_t s1 = 40;
  std::size_t s2 = 80;
  std::uint32_t trials = 200;
  std::uint32_t hop_radius = 1;
};

struct TimedChurn {
  Tick tick = 0;
  ChurnEvent event;
};

struct SimConfig {
  std::string scenario;
  std::uint64_t seed = 0;
  /// Flows (or storage trials) only start before this tick.
  Tick duration = 1'000'000;
  TopologySpec topology;
  RoutingParams routing;
  TransferOptions transfer;
  std::uint32_t frames = 1;
  std::optional<std::uint32_t> frame_bytes;
  LinkModel link;
  std::vector<TimedChurn> timeline;
  std::uint32_t flows = 1;
  std::vector<Flow> flow_pairs;
  Tick flow_gap = 0;
  StorageSpec storage;
  std::optional<Flow> route_dump;
};

inline const std::vector<std::string>& known_scenarios() {
  static const std::vector<std::string> names{"stub_iot", "relay", "jamming", "storage"};
  return names;
}

/// Throws Error(kConfig) naming the offending field.
SimConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
SimConfig load_config(const std::filesystem::path& path);

Graph build_topology(const SimConfig& config);

struct Metrics {
  std::string scenario;
  std::uint64_t seed = 0;

  std::uint64_t flows_attempted = 0;
  std::uint64_t routes_found = 0;
  double routing_success_rate = 0.0;
  double mean_hops = 0.0;
  double mean_path_count = 0.0;

  std::uint64_t transfers = 0;
  std::uint64_t transfers_delivered = 0;
  double delivery_rate = 0.0;
  double mean_overhead_ratio = 0.0;
  double mean_ticks_to_delivery = 0.0;
  std::uint64_t packets_sent_total = 0;

  std::uint64_t storage_trials = 0;
  double storage_recovery_rate = 0.0;
  double adversary_recovery_rate = 0.0;

  Tick final_tick = 0;

  /// Numeric metrics in CSV column order, for aggregation.
  std::vector<std::pair<std::string, double>> values() const;
};

Metrics run_scenario(const SimConfig& config);

/// Runs only the routing phase for config.route_dump (or the first flow).
RoutingPhaseResult run_route_dump(const SimConfig& config);

void to_json(nlohmann::json& j, const Metrics& m);
std::string metrics_csv_header();
std::string metrics_csv_row(const Metrics& m);

}  // namespace perc
