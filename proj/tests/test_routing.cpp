#include <doctest.h>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "percolation/error.hpp"
#include "percolation/routing.hpp"
#include "percolation/routing_phase.hpp"
#include "support.hpp"

using namespace perc;
using testing::L;
using testing::letters;

namespace {

Graph line(std::uint32_t n) {
  Graph g;
  for (std::uint32_t i = 0; i < n; ++i) g.add_node(NodeId{i});
  for (std::uint32_t i = 0; i + 1 < n; ++i) g.add_edge(NodeId{i}, NodeId{i + 1}, 1);
  return g;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kLogic;
}

}  // namespace

TEST_CASE("launch_probes") {
  const auto g = testing::load("mesh21.edges");
  const auto t = init_table(L('E'), g);
  const RoutingParams params;
  const auto probes = launch_probes(L('E'), L('N'), t, params, 10);
  REQUIRE(probes.size() == 4);
  std::set<NodeId> hops;
  std::set<std::uint64_t> probe_ids;
  for (const auto& lp : probes) {
    CHECK(lp.probe.hop_counter == 0);
    CHECK(lp.probe.relays.empty());
    CHECK(lp.probe.source == L('E'));
    CHECK(lp.probe.dest == L('N'));
    hops.insert(lp.next_hop);
    probe_ids.insert(lp.probe.probe_id);
  }
  CHECK(hops == std::set<NodeId>{L('A'), L('D'), L('F'), L('T')});
  CHECK(probe_ids.size() == 4);

  Graph lonely;
  lonely.add_node(NodeId{0});
  lonely.add_node(NodeId{1});
  CHECK(code_of([&] { launch_probes(NodeId{0}, NodeId{1}, init_table(NodeId{0}, lonely), params); }) ==
        ErrorCode::kNoNeighbors);
  CHECK(code_of([&] { launch_probes(L('E'), L('E'), t, params); }) == ErrorCode::kInvalidRequest);
}

TEST_CASE("step_probe") {
  const auto g = testing::load("mesh21.edges");
  const RoutingParams params;  // Y = 6
  Rng rng(3);

  ProbePacket p{.probe_id = 1, .source = L('E'), .dest = L('N'), .hop_counter = 2, .relays = letters("FG")};
  CHECK(std::holds_alternative<Deliver>(step_probe(p, L('N'), init_table(L('N'), g), params, rng)));

  SUBCASE("hop limit") {
    ProbePacket full{.probe_id = 2, .source = L('A'), .dest = L('U'), .hop_counter = 6, .relays = letters("BCDEFG")};
    auto d = step_probe(full, L('H'), init_table(L('H'), g), params, rng);
    REQUIRE(std::holds_alternative<Drop>(d));
    CHECK(std::get<Drop>(d).reason == DropReason::kHopLimit);

    // Five relays plus this node and the destination would make a 7-hop path.
    ProbePacket five{.probe_id = 3, .source = L('A'), .dest = L('U'), .hop_counter = 5, .relays = letters("BCDEF")};
    d = step_probe(five, L('G'), init_table(L('G'), g), params, rng);
    REQUIRE(std::holds_alternative<Drop>(d));
    CHECK(std::get<Drop>(d).reason == DropReason::kHopLimit);
  }

  SUBCASE("node I drops what it cannot forward") {
    ProbePacket toward{.probe_id = 4, .source = L('E'), .dest = L('N'), .hop_counter = 2, .relays = letters("FH")};
    const auto d = step_probe(toward, L('I'), init_table(L('I'), g), params, rng);
    REQUIRE(std::holds_alternative<Drop>(d));
    CHECK(std::get<Drop>(d).reason == DropReason::kClosedLoop);
  }

  SUBCASE("forward appends the current node") {
    ProbePacket q{.probe_id = 5, .source = L('E'), .dest = L('N'), .hop_counter = 1, .relays = letters("F")};
    for (int i = 0; i < 20; ++i) {
      const auto d = step_probe(q, L('G'), init_table(L('G'), g), params, rng);
      REQUIRE(std::holds_alternative<Forward>(d));
      const auto& f = std::get<Forward>(d);
      CHECK(f.probe.hop_counter == 2);
      CHECK(f.probe.relays == letters("FG"));
      CHECK(g.has_edge(L('G'), f.next));
      CHECK(f.next != L('F'));
      CHECK(f.next != L('E'));
    }
    // K is adjacent to N, so the walk goes straight there.
    ProbePacket r{.probe_id = 6, .source = L('E'), .dest = L('N'), .hop_counter = 2, .relays = letters("FG")};
    const auto d = step_probe(r, L('K'), init_table(L('K'), g), params, rng);
    REQUIRE(std::holds_alternative<Forward>(d));
    CHECK(std::get<Forward>(d).next == L('N'));
  }

  SUBCASE("unavailable neighbors are skipped") {
    ProbePacket q{.probe_id = 7, .source = L('E'), .dest = L('N'), .hop_counter = 2, .relays = letters("FG")};
    const auto down = letters("N");
    for (int i = 0; i < 10; ++i) {
      const auto d = step_probe(q, L('K'), init_table(L('K'), g), params, rng, down);
      REQUIRE(std::holds_alternative<Forward>(d));
      CHECK(std::get<Forward>(d).next != L('N'));
    }
  }

  SUBCASE("malformed probes") {
    ProbePacket bad{.probe_id = 8, .source = L('E'), .dest = L('N'), .hop_counter = 3, .relays = letters("FG")};
    CHECK(code_of([&] { step_probe(bad, L('K'), init_table(L('K'), g), params, rng); }) == ErrorCode::kProtocol);
    ProbePacket dup{.probe_id = 9, .source = L('E'), .dest = L('N'), .hop_counter = 2, .relays = letters("FF")};
    CHECK(code_of([&] { step_probe(dup, L('G'), init_table(L('G'), g), params, rng); }) == ErrorCode::kProtocol);
  }
}

TEST_CASE("select_paths") {
  const auto g = testing::load("mesh21.edges");
  RoutingParams params;
  const auto a = make_path(g, letters("EFGKN"));
  const auto b = make_path(g, letters("ETOLN"));

  SUBCASE("mesh21 pair with a duplicate") {
    const auto route = select_paths({a, b, a}, params);
    REQUIRE(route.paths.size() == 2);
    CHECK(route.source == L('E'));
    CHECK(route.dest == L('N'));
    // Equal hops; E-T-O-L-N has the higher bottleneck (3 vs 2).
    CHECK(route.paths[0] == b);
    CHECK(route.paths[1] == a);
  }

  SUBCASE("overlapping interiors") {
    const auto c = make_path(g, letters("ETULN"));  // shares T and L with b
    const auto route = select_paths({c, b, a}, params);
    REQUIRE(route.paths.size() == 2);
    CHECK(route.paths[0] == b);
    CHECK(route.paths[1] == a);
  }

  SUBCASE("max throughput prefers the wide path") {
    const auto longer = make_path(g, letters("ETSOLN"));  // bottleneck 2
    params.rule = SelectionRule::kMaxThroughput;
    const auto route = select_paths({longer, a}, params);
    REQUIRE(route.paths.size() == 2);
    CHECK(route.paths[0] == a);  // tie on bottleneck 2, fewer hops first
    params.rule = SelectionRule::kLeastHops;
    CHECK(select_paths({longer, a}, params).paths[0] == a);
  }

  SUBCASE("at most X paths") {
    Graph wide;
    wide.add_node(NodeId{0});
    wide.add_node(NodeId{1});
    std::vector<Path> cands;
    for (std::uint32_t i = 0; i < 7; ++i) {
      wide.add_node(NodeId{10 + i});
      wide.add_edge(NodeId{0}, NodeId{10 + i}, 1 + i);
      wide.add_edge(NodeId{10 + i}, NodeId{1}, 1 + i);
      cands.push_back(make_path(wide, testing::ids({0, 10 + i, 1})));
    }
    const auto route = select_paths(cands, params);
    REQUIRE(route.paths.size() == 5);
    CHECK(route.paths.front().bottleneck == 7);  // higher bottleneck first on equal hops
  }

  CHECK(code_of([&] { select_paths({}, params); }) == ErrorCode::kNoPath);
  const auto other = make_path(g, letters("EFGK"));
  CHECK(code_of([&] { select_paths({a, other}, params); }) == ErrorCode::kConsistency);
  CHECK(code_of([&] { make_path(g, letters("EN")); }) == ErrorCode::kConsistency);
}

TEST_CASE("propagate_ack matches the scripted oracle") {
  const auto g = testing::load("mesh21.edges");
  auto tables = init_tables(g);
  const RoutingParams params;
  const auto route = select_paths({make_path(g, letters("EFGKN"))}, params);
  CHECK(propagate_ack(route, tables, g).complete());

  auto check_against = [&](int repeats) {
    const auto expected = oracle::scripted_bumps({letters("EFGKN")}, repeats);
    for (const auto& [owner, table] : tables) {
      for (NodeId via : table.neighbors()) {
        for (NodeId dest : g.nodes()) {
          auto it = expected.find({owner, via, dest});
          CHECK(table.measure(via, dest) == (it == expected.end() ? 0u : it->second));
        }
      }
    }
  };
  check_against(1);
  CHECK(tables.at(L('E')).measure(L('F'), L('N')) == 1);
  CHECK(tables.at(L('K')).measure(L('N'), L('N')) == 1);

  propagate_ack(route, tables, g);
  check_against(2);
}

TEST_CASE("single-hop ack touches only the sender") {
  const auto g = testing::load("mesh21.edges");
  auto tables = init_tables(g);
  const auto route = select_paths({make_path(g, letters("LN"))}, RoutingParams{});
  propagate_ack(route, tables, g);
  for (const auto& [owner, table] : tables) {
    CHECK(table.measure_entries().size() == (owner == L('L') ? 1u : 0u));
  }
}

TEST_CASE("ack stops at a down link and reports the path") {
  auto g = testing::load("mesh21.edges");
  auto tables = init_tables(g);
  const auto route = select_paths({make_path(g, letters("EFGKN")), make_path(g, letters("ETOLN"))}, RoutingParams{});
  apply_churn_in_place(g, ChurnEvent::link_down(L('F'), L('G')));
  const auto report = propagate_ack(route, tables, g);
  REQUIRE(report.failed_paths.size() == 1);
  CHECK(route.paths[report.failed_paths[0]].nodes == letters("EFGKN"));
  // Downstream of the break still learned; upstream did not.
  CHECK(tables.at(L('G')).measure(L('K'), L('N')) == 1);
  CHECK(tables.at(L('F')).measure(L('G'), L('N')) == 0);
  CHECK(tables.at(L('E')).measure(L('F'), L('N')) == 0);
  CHECK(tables.at(L('E')).measure(L('T'), L('N')) == 1);
}

TEST_CASE("routing phase on mesh21, E to N") {
  const auto g = testing::load("mesh21.edges");
  const auto bfs = oracle::distance(g, L('E'), L('N'));
  const RoutingParams params;
  int found = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Network net(g, LinkModel{}, seed);
    const auto result = run_routing_phase(net, L('E'), L('N'), params);
    CHECK(result.probes_launched == 4);
    CHECK(result.probes_delivered + result.probes_dropped == 4);
    CHECK(result.finished - result.started == params.window_for(1));
    if (!result.ok()) {
      CHECK(result.failure == ErrorCode::kNoPath);
      CHECK(result.probes_delivered == 0);
      continue;
    }
    ++found;
    for (const auto& p : result.route->paths) {
      CHECK(oracle::valid_path(g, p.nodes, L('E'), L('N'), p.bottleneck));
      CHECK(p.hops() <= 6);
      CHECK(static_cast<int>(p.hops()) >= bfs);
    }
  }
  // Each phase succeeds with probability around 0.7 on this fixture.
  CHECK(found >= 8);
}

TEST_CASE("routing phase: adjacent destination and unreachable hop bound") {
  {
    Network net(testing::load("mesh21.edges"), LinkModel{}, 4);
    const auto r = run_routing_phase(net, L('L'), L('N'), RoutingParams{});
    REQUIRE(r.ok());
    CHECK(r.route->paths.front().nodes == letters("LN"));
  }
  {
    Network net(line(10), LinkModel{}, 4);
    REQUIRE(oracle::distance(net.graph(), NodeId{0}, NodeId{9}) == 9);
    const auto r = run_routing_phase(net, NodeId{0}, NodeId{9}, RoutingParams{});
    CHECK_FALSE(r.ok());
    CHECK(r.failure == ErrorCode::kNoPath);
  }
  {
    // Exactly Y hops away is still reachable.
    Network net(line(7), LinkModel{}, 4);
    const auto r = run_routing_phase(net, NodeId{0}, NodeId{6}, RoutingParams{});
    REQUIRE(r.ok());
    CHECK(r.route->paths.front().hops() == 6);
  }
  {
    Graph g = line(2);
    g.add_node(NodeId{5});
    Network net(g, LinkModel{}, 4);
    const auto r = run_routing_phase(net, NodeId{5}, NodeId{0}, RoutingParams{});
    CHECK(r.failure == ErrorCode::kNoNeighbors);
    CHECK(code_of([&] { run_routing_phase(net, NodeId{0}, NodeId{0}, RoutingParams{}); }) ==
          ErrorCode::kInvalidRequest);
    CHECK(code_of([&] { run_routing_phase(net, NodeId{0}, NodeId{77}, RoutingParams{}); }) == ErrorCode::kNotFound);
  }
}

TEST_CASE("routing phase is deterministic per seed") {
  const auto g = generate_small_world({.n = 100, .k = 6, .p = 0.1, .default_bandwidth = 2, .seed = 12});
  auto run = [&](std::uint64_t seed) {
    Network net(g, LinkModel{}, seed);
    return run_routing_phase(net, NodeId{3}, NodeId{40}, RoutingParams{});
  };
  const auto a = run(8), b = run(8);
  CHECK(a.route == b.route);
  CHECK(a.candidates == b.candidates);
}

TEST_CASE("probe window validation") {
  RoutingParams p;
  CHECK(p.window_for(2) == 13);
  p.probe_window = 5;
  CHECK_THROWS_AS(p.window_for(1), Error);
  p.probe_window = 40;
  CHECK(p.window_for(1) == 40);
  RoutingParams zero;
  zero.max_hops = 0;
  CHECK_THROWS_AS(zero.validate(), Error);
}

TEST_CASE("route json round trip") {
  const auto g = testing::load("mesh21.edges");
  const auto route = select_paths({make_path(g, letters("EFGKN")), make_path(g, letters("ETOLN"))}, RoutingParams{});
  const nlohmann::json j = route;
  CHECK(j.at("rule") == "least_hops");
  CHECK(j.at("paths").at(0).at("hops") == 4);
  CHECK(j.get<Route>() == route);
}
