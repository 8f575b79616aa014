#include "percolation/scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "percolation/error.hpp"
#include "percolation/storage.hpp"

namespace perc {

using nlohmann::json;

Graph relay_network(const RelayParams& params) {
  if (params.earth_relays < 1 || params.moon_relays < 1) {
    throw Error(ErrorCode::kParameter, "relay network needs at least one earth and one moon relay");
  }
  const std::uint32_t e = params.earth_relays;
  const std::uint32_t mo = params.moon_relays;
  auto earth = [](std::uint32_t i) { return NodeId{1 + i}; };
  auto moon = [e](std::uint32_t j) { return NodeId{1 + e + j}; };
  const NodeId ground = relay_ground();
  const NodeId lander = relay_lander(params);

  Graph g;
  for (std::uint32_t v = 0; v <= lander.value; ++v) g.add_node(NodeId{v});
  for (std::uint32_t i = 0; i < e; ++i) {
    g.add_edge(ground, earth(i), params.bandwidth);
    if (i + 1 < e) g.add_edge(earth(i), earth(i + 1), params.bandwidth);
    g.add_edge(earth(i), moon(i % mo), params.bandwidth);
    if (mo > 1 && !g.has_edge(earth(i), moon((i + 1) % mo))) g.add_edge(earth(i), moon((i + 1) % mo), params.bandwidth);
  }
  for (std::uint32_t j = 0; j < mo; ++j) {
    if (j + 1 < mo) g.add_edge(moon(j), moon(j + 1), params.bandwidth);
    g.add_edge(moon(j), lander, params.bandwidth);
  }
  return g;
}

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::kConfig, "config field `" + field + "`: " + what);
}

std::string join(const std::string& parent, const std::string& key) { return parent.empty() ? key : parent + "." + key; }

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(where.empty() ? "<root>" : where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      config_error(join(where, key), "unknown field");
    }
  }
}

template <typename T>
T get_as(const json& value, const std::string& field) {
  try {
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (value.is_number_integer() && value.get<long long>() < 0) config_error(field, "must be non-negative");
    }
    return value.get<T>();
  } catch (const json::exception& e) {
    config_error(field, e.what());
  }
}

template <typename T>
T required(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) config_error(join(where, key), "missing");
  return get_as<T>(obj.at(key), join(where, key));
}

template <typename T>
T optional_field(const json& obj, const std::string& where, const char* key, T fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  return get_as<T>(obj.at(key), join(where, key));
}

NodeId node_field(const json& obj, const std::string& where, const char* key) {
  return NodeId{required<std::uint32_t>(obj, where, key)};
}

TimedChurn parse_churn(const json& j, const std::string& where) {
  only_keys(j, where, {"tick", "event", "node", "u", "v", "bandwidth"});
  TimedChurn out;
  out.tick = required<Tick>(j, where, "tick");
  if (out.tick < 0) config_error(join(where, "tick"), "must be non-negative");
  const auto kind = required<std::string>(j, where, "event");
  if (kind == "join") {
    out.event = ChurnEvent::join(node_field(j, where, "node"));
  } else if (kind == "leave") {
    out.event = ChurnEvent::leave(node_field(j, where, "node"));
  } else if (kind == "link_up") {
    out.event = ChurnEvent::link_up(node_field(j, where, "u"), node_field(j, where, "v"),
                                    optional_field<Bandwidth>(j, where, "bandwidth", 1));
  } else if (kind == "link_down") {
    out.event = ChurnEvent::link_down(node_field(j, where, "u"), node_field(j, where, "v"));
  } else if (kind == "set_bandwidth") {
    out.event = ChurnEvent::set_bandwidth(node_field(j, where, "u"), node_field(j, where, "v"),
                                          required<Bandwidth>(j, where, "bandwidth"));
  } else {
    config_error(join(where, "event"), "unknown churn event `" + kind + "`");
  }
  return out;
}

Flow parse_flow(const json& j, const std::string& where) {
  if (j.is_array()) {
    if (j.size() != 2) config_error(where, "expected [source, dest]");
    return Flow{NodeId{get_as<std::uint32_t>(j[0], where + "[0]")}, NodeId{get_as<std::uint32_t>(j[1], where + "[1]")}};
  }
  only_keys(j, where, {"source", "dest"});
  return Flow{node_field(j, where, "source"), node_field(j, where, "dest")};
}

}  // namespace

SimConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  only_keys(j, "", {"scenario", "seed", "duration", "topology", "routing", "code", "transfer", "link", "timeline",
                    "flows", "flow_pairs", "flow_gap", "storage", "route_dump", "description"});
  SimConfig c;
  c.scenario = required<std::string>(j, "", "scenario");
  const auto& names = known_scenarios();
  if (std::find(names.begin(), names.end(), c.scenario) == names.end()) {
    config_error("scenario", "unknown scenario `" + c.scenario + "`");
  }
  if (!j.contains("seed")) config_error("seed", "missing (a seed is mandatory)");
  c.seed = required<std::uint64_t>(j, "", "seed");
  c.duration = optional_field<Tick>(j, "", "duration", c.duration);
  if (c.duration < 0) config_error("duration", "must be non-negative");

  if (!j.contains("topology")) config_error("topology", "missing");
  const auto& topo = j.at("topology");
  only_keys(topo, "topology", {"generate", "edge_list", "relay"});
  if (topo.size() != 1) config_error("topology", "expected exactly one of generate, edge_list, relay");
  if (topo.contains("generate")) {
    const auto& gen = topo.at("generate");
    only_keys(gen, "topology.generate", {"n", "k", "p", "bandwidth", "seed"});
    TopologyParams tp;
    tp.n = required<std::uint32_t>(gen, "topology.generate", "n");
    tp.k = required<std::uint32_t>(gen, "topology.generate", "k");
    tp.p = required<double>(gen, "topology.generate", "p");
    tp.default_bandwidth = optional_field<Bandwidth>(gen, "topology.generate", "bandwidth", 1);
    // Without an explicit topology seed the graph follows the run seed.
    tp.seed = optional_field<std::uint64_t>(gen, "topology.generate", "seed", hash_words({c.seed, 0x544f504fULL}));
    if (tp.k % 2 != 0 || tp.k >= tp.n || tp.p < 0.0 || tp.p > 1.0 || tp.default_bandwidth == 0) {
      config_error("topology.generate", "need even k < n, p in [0, 1], positive bandwidth");
    }
    c.topology.generated = tp;
  } else if (topo.contains("edge_list")) {
    std::filesystem::path p = get_as<std::string>(topo.at("edge_list"), "topology.edge_list");
    if (p.is_relative()) p = base_dir / p;
    if (!std::filesystem::exists(p)) config_error("topology.edge_list", "fixture " + p.string() + " does not exist");
    c.topology.edge_list = p;
  } else {
    const auto& relay = topo.at("relay");
    only_keys(relay, "topology.relay", {"earth_relays", "moon_relays", "bandwidth"});
    RelayParams rp;
    rp.earth_relays = optional_field<std::uint32_t>(relay, "topology.relay", "earth_relays", rp.earth_relays);
    rp.moon_relays = optional_field<std::uint32_t>(relay, "topology.relay", "moon_relays", rp.moon_relays);
    rp.bandwidth = optional_field<Bandwidth>(relay, "topology.relay", "bandwidth", rp.bandwidth);
    if (rp.earth_relays < 1 || rp.moon_relays < 1 || rp.bandwidth == 0) {
      config_error("topology.relay", "need at least one relay per layer and positive bandwidth");
    }
    c.topology.relay = rp;
  }

  if (j.contains("routing")) {
    const auto& r = j.at("routing");
    only_keys(r, "routing", {"max_hops", "max_paths", "probe_window", "rule"});
    c.routing.max_hops = optional_field<std::uint32_t>(r, "routing", "max_hops", c.routing.max_hops);
    c.routing.max_paths = optional_field<std::uint32_t>(r, "routing", "max_paths", c.routing.max_paths);
    c.routing.probe_window = optional_field<Tick>(r, "routing", "probe_window", c.routing.probe_window);
    try {
      c.routing.rule = selection_rule_from_string(optional_field<std::string>(r, "routing", "rule", "least_hops"));
      c.routing.validate();
    } catch (const Error& e) {
      config_error("routing", e.what());
    }
  }

  if (j.contains("code")) {
    const auto& code = j.at("code");
    only_keys(code, "code", {"K", "M", "c", "delta"});
    c.transfer.k = optional_field<std::uint16_t>(code, "code", "K", c.transfer.k);
    c.transfer.m = optional_field<std::uint16_t>(code, "code", "M", c.transfer.m);
    c.transfer.code.c = optional_field<double>(code, "code", "c", c.transfer.code.c);
    c.transfer.code.delta = optional_field<double>(code, "code", "delta", c.transfer.code.delta);
  }
  if (j.contains("transfer")) {
    const auto& t = j.at("transfer");
    only_keys(t, "transfer", {"mode", "fec_overhead", "frames", "frame_bytes", "give_up_factor", "budget"});
    try {
      c.transfer.mode = transfer_mode_from_string(optional_field<std::string>(t, "transfer", "mode", "feedback"));
    } catch (const Error& e) {
      config_error("transfer.mode", e.what());
    }
    c.transfer.fec_overhead = optional_field<double>(t, "transfer", "fec_overhead", c.transfer.fec_overhead);
    c.transfer.give_up_factor = optional_field<double>(t, "transfer", "give_up_factor", c.transfer.give_up_factor);
    if (t.contains("budget") && !t.at("budget").is_null()) c.transfer.budget = required<Bandwidth>(t, "transfer", "budget");
    c.frames = optional_field<std::uint32_t>(t, "transfer", "frames", c.frames);
    if (t.contains("frame_bytes") && !t.at("frame_bytes").is_null()) {
      c.frame_bytes = required<std::uint32_t>(t, "transfer", "frame_bytes");
    }
  }
  try {
    c.transfer.validate();
  } catch (const Error& e) {
    config_error("code/transfer", e.what());
  }
  if (c.frame_bytes && *c.frame_bytes > std::uint32_t{c.transfer.k} * c.transfer.m) {
    config_error("transfer.frame_bytes", "exceeds K*M");
  }

  if (j.contains("link")) {
    const auto& l = j.at("link");
    only_keys(l, "link", {"latency", "loss", "jam"});
    c.link.latency = optional_field<Tick>(l, "link", "latency", c.link.latency);
    c.link.loss_probability = optional_field<double>(l, "link", "loss", c.link.loss_probability);
    if (l.contains("jam")) {
      const auto& jam = l.at("jam");
      if (!jam.is_array()) config_error("link.jam", "expected an array");
      for (std::size_t i = 0; i < jam.size(); ++i) {
        const std::string where = "link.jam[" + std::to_string(i) + "]";
        only_keys(jam[i], where, {"nodes", "start", "end"});
        JamWindow w;
        for (const auto& v : required<json>(jam[i], where, "nodes")) w.nodes.push_back(NodeId{get_as<std::uint32_t>(v, where + ".nodes")});
        w.start = required<Tick>(jam[i], where, "start");
        w.end = required<Tick>(jam[i], where, "end");
        c.link.jam_schedule.push_back(std::move(w));
      }
    }
    try {
      c.link.validate();
    } catch (const Error& e) {
      config_error("link", e.what());
    }
  }

  if (j.contains("timeline")) {
    const auto& tl = j.at("timeline");
    if (!tl.is_array()) config_error("timeline", "expected an array");
    for (std::size_t i = 0; i < tl.size(); ++i) c.timeline.push_back(parse_churn(tl[i], "timeline[" + std::to_string(i) + "]"));
  }

  c.flows = optional_field<std::uint32_t>(j, "", "flows", c.flows);
  c.flow_gap = optional_field<Tick>(j, "", "flow_gap", c.flow_gap);
  if (c.flow_gap < 0) config_error("flow_gap", "must be non-negative");
  if (j.contains("flow_pairs")) {
    const auto& fp = j.at("flow_pairs");
    if (!fp.is_array()) config_error("flow_pairs", "expected an array");
    for (std::size_t i = 0; i < fp.size(); ++i) c.flow_pairs.push_back(parse_flow(fp[i], "flow_pairs[" + std::to_string(i) + "]"));
  }
  if (j.contains("route_dump")) c.route_dump = parse_flow(j.at("route_dump"), "route_dump");

  if (j.contains("storage")) {
    const auto& s = j.at("storage");
    only_keys(s, "storage", {"owner", "S1", "S2", "trials", "hop_radius"});
    c.storage.owner = NodeId{optional_field<std::uint32_t>(s, "storage", "owner", c.storage.owner.value)};
    c.storage.s1 = optional_field<std::size_t>(s, "storage", "S1", c.storage.s1);
    c.storage.s2 = optional_field<std::size_t>(s, "storage", "S2", c.storage.s2);
    c.storage.trials = optional_field<std::uint32_t>(s, "storage", "trials", c.storage.trials);
    c.storage.hop_radius = optional_field<std::uint32_t>(s, "storage", "hop_radius", c.storage.hop_radius);
    if (!(c.storage.s1 + c.storage.s2 > c.transfer.k && c.storage.s2 < c.transfer.k)) {
      config_error("storage", "need S1 + S2 > K and S2 < K");
    }
  }
  return c;
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

Graph build_topology(const SimConfig& config) {
  if (config.topology.generated) return generate_small_world(*config.topology.generated);
  if (config.topology.edge_list) return load_edge_list_file(*config.topology.edge_list);
  if (config.topology.relay) return relay_network(*config.topology.relay);
  throw Error(ErrorCode::kConfig, "config has no topology");
}

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

std::vector<std::uint8_t> random_bytes(Rng& rng, std::size_t count) {
  std::vector<std::uint8_t> out(count);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng.next() >> 56);
  return out;
}

Flow pick_flow(const SimConfig& config, Network& net, std::uint32_t index) {
  if (!config.flow_pairs.empty()) return config.flow_pairs[index % config.flow_pairs.size()];
  if (config.topology.relay && config.topology.edge_list == std::nullopt && config.topology.generated == std::nullopt) {
    return Flow{relay_ground(), relay_lander(*config.topology.relay)};
  }
  const auto nodes = net.graph().nodes();
  if (nodes.size() < 2) throw Error(ErrorCode::kConfig, "scenario needs at least two nodes for a flow");
  const auto a = net.rng().below(nodes.size());
  auto b = net.rng().below(nodes.size() - 1);
  if (b >= a) ++b;
  return Flow{nodes[a], nodes[b]};
}

void run_flows(const SimConfig& config, Network& net, Metrics& m) {
  double hops = 0.0;
  double path_count = 0.0;
  double overhead = 0.0;
  double ticks = 0.0;
  for (std::uint32_t f = 0; f < config.flows && net.sim().now() < config.duration; ++f) {
    const Flow flow = pick_flow(config, net, f);
    ++m.flows_attempted;
    if (!net.graph().has_node(flow.source) || !net.graph().has_node(flow.dest)) continue;

    const auto phase = run_routing_phase(net, flow.source, flow.dest, config.routing);
    if (phase.ok()) {
      ++m.routes_found;
      path_count += static_cast<double>(phase.route->paths.size());
      for (const auto& p : phase.route->paths) hops += static_cast<double>(p.hops()) / phase.route->paths.size();

      std::vector<std::vector<std::uint8_t>> frames;
      const std::size_t bytes = config.frame_bytes.value_or(std::uint32_t{config.transfer.k} * config.transfer.m);
      for (std::uint32_t i = 0; i < config.frames; ++i) frames.push_back(random_bytes(net.rng(), bytes));
      TransferOptions opts = config.transfer;
      opts.frame_id = f * config.frames;
      // Frames never started (no capacity, or an earlier frame went unacked) count as failed.
      m.transfers += frames.size();
      std::vector<TransmissionResult> results;
      try {
        results = transmit_frames(net, *phase.route, frames, opts);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNoCapacity) throw;
      }
      for (const auto& r : results) {
        m.packets_sent_total += r.packets_sent_total();
        if (!r.delivered) continue;
        ++m.transfers_delivered;
        overhead += r.overhead_ratio;
        ticks += static_cast<double>(r.ticks);
      }
    }
    if (config.flow_gap > 0) net.sim().run_until(net.sim().now() + config.flow_gap);
  }
  m.routing_success_rate = ratio(static_cast<double>(m.routes_found), static_cast<double>(m.flows_attempted));
  m.mean_hops = ratio(hops, static_cast<double>(m.routes_found));
  m.mean_path_count = ratio(path_count, static_cast<double>(m.routes_found));
  m.delivery_rate = ratio(static_cast<double>(m.transfers_delivered), static_cast<double>(m.transfers));
  m.mean_overhead_ratio = ratio(overhead, static_cast<double>(m.transfers_delivered));
  m.mean_ticks_to_delivery = ratio(ticks, static_cast<double>(m.transfers_delivered));
}

void run_storage(const SimConfig& config, Network& net, Metrics& m) {
  const auto& s = config.storage;
  std::uint64_t owner_ok = 0;
  std::uint64_t adversary_ok = 0;
  const std::uint32_t trials = config.duration > 0 ? s.trials : 0;
  for (std::uint32_t t = 0; t < trials; ++t) {
    const auto data = random_bytes(net.rng(), std::size_t{config.transfer.k} * config.transfer.m);
    StorageOptions opts{t, config.transfer.code, s.hop_radius};
    const auto plan = disperse(net, s.owner, data, config.transfer.k, config.transfer.m, s.s1, s.s2, opts);
    auto holders = plan.holders();
    const auto adversary = recover(plan, holders);
    holders.push_back(plan.owner);
    const auto owner = recover(plan, holders);
    if (owner.recovered) {
      if (owner.data != data) throw Error(ErrorCode::kLogic, "storage recovery returned different bytes");
      ++owner_ok;
    }
    if (adversary.recovered) ++adversary_ok;
    ++m.storage_trials;
  }
  m.storage_recovery_rate = ratio(static_cast<double>(owner_ok), static_cast<double>(m.storage_trials));
  m.adversary_recovery_rate = ratio(static_cast<double>(adversary_ok), static_cast<double>(m.storage_trials));
}

}  // namespace

Metrics run_scenario(const SimConfig& config) {
  Network net(build_topology(config), config.link, config.seed);
  for (const auto& tc : config.timeline) net.schedule_churn(tc.tick, tc.event);

  Metrics m;
  m.scenario = config.scenario;
  m.seed = config.seed;
  if (config.scenario == "storage") {
    run_storage(config, net, m);
  } else {
    run_flows(config, net, m);
  }
  m.final_tick = net.sim().now();
  return m;
}

RoutingPhaseResult run_route_dump(const SimConfig& config) {
  Network net(build_topology(config), config.link, config.seed);
  for (const auto& tc : config.timeline) net.schedule_churn(tc.tick, tc.event);
  const Flow flow = config.route_dump ? *config.route_dump : pick_flow(config, net, 0);
  return run_routing_phase(net, flow.source, flow.dest, config.routing);
}

std::vector<std::pair<std::string, double>> Metrics::values() const {
  return {{"flows_attempted", static_cast<double>(flows_attempted)},
          {"routes_found", static_cast<double>(routes_found)},
          {"routing_success_rate", routing_success_rate},
          {"mean_hops", mean_hops},
          {"mean_path_count", mean_path_count},
          {"transfers", static_cast<double>(transfers)},
          {"transfers_delivered", static_cast<double>(transfers_delivered)},
          {"delivery_rate", delivery_rate},
          {"mean_overhead_ratio", mean_overhead_ratio},
          {"mean_ticks_to_delivery", mean_ticks_to_delivery},
          {"packets_sent_total", static_cast<double>(packets_sent_total)},
          {"storage_trials", static_cast<double>(storage_trials)},
          {"storage_recovery_rate", storage_recovery_rate},
          {"adversary_recovery_rate", adversary_recovery_rate},
          {"final_tick", static_cast<double>(final_tick)}};
}

void to_json(json& j, const Metrics& m) {
  j = json{{"scenario", m.scenario},
           {"seed", m.seed},
           {"flows_attempted", m.flows_attempted},
           {"routes_found", m.routes_found},
           {"routing_success_rate", m.routing_success_rate},
           {"mean_hops", m.mean_hops},
           {"mean_path_count", m.mean_path_count},
           {"transfers", m.transfers},
           {"transfers_delivered", m.transfers_delivered},
           {"delivery_rate", m.delivery_rate},
           {"mean_overhead_ratio", m.mean_overhead_ratio},
           {"mean_ticks_to_delivery", m.mean_ticks_to_delivery},
           {"packets_sent_total", m.packets_sent_total},
           {"storage_trials", m.storage_trials},
           {"storage_recovery_rate", m.storage_recovery_rate},
           {"adversary_recovery_rate", m.adversary_recovery_rate},
           {"final_tick", m.final_tick}};
}

std::string metrics_csv_header() {
  std::string out = "scenario,seed";
  for (const auto& [name, _] : Metrics{}.values()) out += "," + name;
  return out;
}

std::string metrics_csv_row(const Metrics& m) {
  std::string out = m.scenario + "," + std::to_string(m.seed);
  // Counters print as integers, like the JSON output.
  const json typed = m;
  char buf[64];
  for (const auto& [name, value] : m.values()) {
    if (typed.at(name).is_number_integer()) {
      std::snprintf(buf, sizeof buf, ",%.0f", value);
    } else {
      std::snprintf(buf, sizeof buf, ",%.6f", value);
    }
    out += buf;
  }
  return out;
}

}  // namespace perc
