#include <doctest.h>

#include <set>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "percolation/storage.hpp"
#include "percolation/topology.hpp"
#include "support.hpp"

using namespace perc;

namespace {

std::vector<std::uint8_t> bytes(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng.next());
  return out;
}

Graph ws100(std::uint64_t seed) { return generate_small_world({.n = 100, .k = 6, .p = 0.1, .default_bandwidth = 2, .seed = seed}); }

std::vector<std::vector<std::uint16_t>> rows_of(const StoragePlan& plan, bool with_local) {
  const DegreeDistribution degrees(plan.k, plan.code);
  std::vector<std::vector<std::uint16_t>> rows;
  auto add = [&](const std::vector<CodedPacket>& ps) {
    for (const auto& p : ps) rows.push_back(neighbor_set(plan.frame_id, p.n, degrees));
  };
  if (with_local) add(plan.local);
  for (const auto& [_, ps] : plan.remote) add(ps);
  return rows;
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

TEST_CASE("40/80 plan over K = 100") {
  Network net(ws100(1), LinkModel{}, 1);
  const NodeId owner{0};
  const auto data = bytes(100 * 16, 9);
  const auto plan = disperse(net, owner, data, 100, 16, 40, 80);
  CHECK(plan.local.size() == 40);
  CHECK(plan.remote_count() == 80);
  CHECK(plan.placements.size() == 80);

  std::set<std::uint32_t> indices;
  for (const auto& p : plan.local) indices.insert(p.n);
  for (const auto& [holder, ps] : plan.remote) {
    CHECK(holder != owner);
    CHECK(net.graph().has_edge(owner, holder));
    for (const auto& p : ps) indices.insert(p.n);
  }
  CHECK(indices.size() == 120);

  // Packets are the encoder's, so they can be regenerated independently.
  const Encoder enc(SourceBlock::from_bytes(data, 100, 16), 0);
  for (const auto& p : plan.local) CHECK(p == enc.packet(p.n));

  const auto holders = plan.holders();
  const DegreeDistribution degrees(100, plan.code);
  CHECK(oracle::gf2_rank(rows_of(plan, false), 100) < 100);
  const auto adversary = recover(plan, holders);
  CHECK_FALSE(adversary.recovered);
  CHECK(adversary.failure == ErrorCode::kInsufficientPackets);
  CHECK(adversary.sources_recovered < 100);

  auto with_owner = holders;
  with_owner.push_back(owner);
  const auto mine = recover(plan, with_owner);
  // Peeling success implies full rank; the converse need not hold.
  if (mine.recovered) {
    CHECK(oracle::gf2_rank(rows_of(plan, true), 100) == 100);
    CHECK(mine.data == data);
  }
}

TEST_CASE("owner recovers with a generous local share, adversary never does") {
  int owner_ok = 0;
  for (std::uint32_t frame = 0; frame < 50; ++frame) {
    Network net(ws100(frame), LinkModel{}, frame);
    const auto data = bytes(32 * 4, frame);
    const auto plan = disperse(net, NodeId{5}, data, 32, 4, 60, 31, {.frame_id = frame});
    CHECK_FALSE(recover(plan, plan.holders()).recovered);
    auto all = plan.holders();
    all.push_back(NodeId{5});
    const auto r = recover(plan, all);
    owner_ok += r.recovered;
    if (r.recovered) CHECK(r.data == data);
  }
  CHECK(owner_ok >= 45);
}

TEST_CASE("split constraints") {
  Network net(ws100(1), LinkModel{}, 1);
  const auto data = bytes(100, 1);
  CHECK(code_of([&] { disperse(net, NodeId{0}, data, 10, 10, 5, 10); }) == ErrorCode::kConstraintViolation);
  CHECK(code_of([&] { disperse(net, NodeId{0}, data, 10, 10, 2, 8); }) == ErrorCode::kConstraintViolation);
  CHECK(code_of([&] { disperse(net, NodeId{0}, data, 10, 10, 5, 6, {.hop_radius = 0}); }) == ErrorCode::kParameter);
  CHECK(code_of([&] { disperse(net, NodeId{999}, data, 10, 10, 4, 7); }) == ErrorCode::kNotFound);

  Graph lonely;
  lonely.add_node(NodeId{0});
  lonely.add_node(NodeId{1});
  Network isolated(lonely, LinkModel{}, 1);
  CHECK(code_of([&] { disperse(isolated, NodeId{0}, data, 10, 10, 4, 7); }) == ErrorCode::kNoNeighbors);
}

TEST_CASE("all-local storage needs no neighbors") {
  Graph lonely;
  lonely.add_node(NodeId{0});
  Network net(lonely, LinkModel{}, 1);
  const std::vector<std::uint8_t> data{0xab, 0xcd};
  const auto plan = disperse(net, NodeId{0}, data, 1, 2, 2, 0);
  CHECK(plan.remote.empty());
  const std::vector<NodeId> owner{NodeId{0}};
  const auto r = recover(plan, owner);
  CHECK(r.recovered);
  CHECK(r.data == data);
}

TEST_CASE("hop radius places packets farther out") {
  Network net(ws100(3), LinkModel{}, 3);
  const NodeId owner{10};
  const auto plan = disperse(net, owner, bytes(200, 1), 50, 4, 30, 40, {.hop_radius = 3});
  const auto dist = oracle::bfs(net.graph(), owner);
  int beyond = 0;
  for (const auto& pl : plan.placements) {
    CHECK(pl.path.front() == owner);
    CHECK(pl.path.back() == pl.holder);
    CHECK(pl.path.size() <= 4);
    CHECK(std::set<NodeId>(pl.path.begin(), pl.path.end()).size() == pl.path.size());
    for (std::size_t i = 1; i < pl.path.size(); ++i) CHECK(net.graph().has_edge(pl.path[i - 1], pl.path[i]));
    beyond += dist.at(pl.holder) > 1;
  }
  CHECK(beyond > 0);
}

TEST_CASE("plan serialization") {
  Network net(ws100(1), LinkModel{}, 1);
  const auto plan = disperse(net, NodeId{0}, bytes(40, 1), 10, 4, 4, 7);
  const nlohmann::json j = plan;
  CHECK(j.at("S1") == 4);
  CHECK(j.at("S2") == 7);
  CHECK(j.at("local").size() == 4);
  CHECK(j.at("placements").size() == 7);
  std::size_t remote = 0;
  for (const auto& r : j.at("remote")) remote += r.at("packets").size();
  CHECK(remote == 7);
}
