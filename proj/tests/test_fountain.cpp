#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "percolation/error.hpp"
#include "percolation/fountain.hpp"
#include "percolation/random.hpp"

using namespace perc;

namespace {

SourceBlock random_block(std::uint16_t k, std::uint16_t m, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> data(std::size_t{k} * m);
  for (auto& b : data) b = static_cast<std::uint8_t>(rng.next());
  return SourceBlock(k, m, std::move(data));
}

/// First index n >= from whose neighbor set equals `want`.
std::uint32_t find_index(std::uint32_t frame, const DegreeDistribution& d, const std::vector<std::uint16_t>& want,
                         std::uint32_t from = 0) {
  for (std::uint32_t n = from; n < 1'000'000; ++n) {
    if (neighbor_set(frame, n, d) == want) return n;
  }
  FAIL("no index with the requested neighbor set");
  return 0;
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

TEST_CASE("robust soliton") {
  CHECK(robust_soliton(1) == std::vector<double>{1.0});

  const auto big = robust_soliton(100, {0.03, 0.5});
  REQUIRE(big.size() == 100);
  CHECK(std::abs(std::accumulate(big.begin(), big.end(), 0.0) - 1.0) < 1e-12);
  for (double v : big) CHECK(v >= 0.0);

  // Computed independently (rho + tau, normalized) for K=10, c=0.1, delta=0.5.
  const std::vector<double> golden{0.1465773670502644,  0.4120072829333093,  0.14922018884139987,
                                   0.08055230835251498, 0.051896713370598015, 0.03697469448645803,
                                   0.02810827147084575, 0.02235453515995182, 0.01837722966859837,
                                   0.05393140866605939};
  const auto ten = robust_soliton(10, {0.1, 0.5});
  REQUIRE(ten.size() == golden.size());
  for (std::size_t i = 0; i < golden.size(); ++i) CHECK(ten[i] == doctest::Approx(golden[i]).epsilon(1e-12));

  CHECK(code_of([] { robust_soliton(0); }) == ErrorCode::kParameter);
  CHECK(code_of([] { robust_soliton(10, {0.0, 0.5}); }) == ErrorCode::kParameter);
  CHECK(code_of([] { robust_soliton(10, {0.1, 1.0}); }) == ErrorCode::kParameter);
  CHECK(code_of([] { robust_soliton(10, {0.1, 0.0}); }) == ErrorCode::kParameter);
}

TEST_CASE("degree sampling follows the distribution") {
  const DegreeDistribution d(10, {0.1, 0.5});
  const auto pmf = robust_soliton(10, {0.1, 0.5});
  std::vector<int> counts(11, 0);
  CounterStream s(42);
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) ++counts[d.sample(s.unit())];
  CHECK(counts[0] == 0);
  for (std::size_t deg = 1; deg <= 10; ++deg) {
    CHECK(counts[deg] / double(draws) == doctest::Approx(pmf[deg - 1]).epsilon(0.05));
  }
  CHECK(d.sample(0.0) == 1);
  CHECK(d.sample(std::nextafter(1.0, 0.0)) == 10);
}

TEST_CASE("neighbor sets are sorted, distinct and in range") {
  const DegreeDistribution d(64, {});
  for (std::uint32_t n = 0; n < 2000; ++n) {
    const auto s = neighbor_set(3, n, d);
    REQUIRE_FALSE(s.empty());
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
    CHECK(s.back() < 64);
  }
  CHECK(neighbor_set(3, 17, d) == neighbor_set(3, 17, d));
}

TEST_CASE("encode_packet") {
  const auto block = random_block(8, 5, 1);
  const DegreeDistribution d(8, {});

  const auto n1 = find_index(0, d, {5});
  const auto p1 = encode_packet(block, 0, n1);
  CHECK(std::equal(p1.payload.begin(), p1.payload.end(), block.packet(5).begin()));

  const SourceBlock two(2, 1, {0x5a, 0x0f});
  const DegreeDistribution d2(2, {});
  const auto p2 = encode_packet(two, 9, find_index(9, d2, {0, 1}));
  CHECK(p2.payload == std::vector<std::uint8_t>{0x55});

  CHECK(encode_packet(block, 4, 77) == encode_packet(block, 4, 77));
  const Encoder enc(block, 4);
  CHECK(enc.packet(77) == encode_packet(block, 4, 77));
  CHECK(enc.packet(77).k == 8);
  CHECK(enc.packet(77).m == 5);
}

TEST_CASE("column reorganization") {
  const SourceBlock b(2, 3, {1, 2, 3, 4, 5, 6});
  const auto streams = reorganize(b);
  CHECK(streams == std::vector<std::vector<std::uint8_t>>{{1, 4}, {2, 5}, {3, 6}});
  CHECK(deorganize(streams) == b);

  const auto r = random_block(8, 8, 2);
  CHECK(deorganize(reorganize(r)) == r);

  const SourceBlock one(1, 4, {9, 8, 7, 6});
  CHECK(reorganize(one) == std::vector<std::vector<std::uint8_t>>{{9}, {8}, {7}, {6}});

  CHECK(code_of([] { deorganize({{1, 2}, {3}}); }) == ErrorCode::kFormat);
  CHECK(code_of([] { deorganize({}); }) == ErrorCode::kFormat);
}

TEST_CASE("column scheme equals whole-packet XOR") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto k = static_cast<std::uint16_t>(1 + seed * 3);
    const auto m = static_cast<std::uint16_t>(1 + seed * 2);
    const auto block = random_block(k, m, seed);
    for (std::uint32_t n = 0; n < 50; ++n) {
      CHECK(encode_packet(block, 7, n) == encode_packet_by_columns(block, 7, n));
    }
  }
}

TEST_CASE("decoder: degree-one cover completes") {
  const std::uint16_t k = 6;
  const auto block = random_block(k, 4, 3);
  const DegreeDistribution d(k, {});
  Decoder dec(0, k, 4);
  for (std::uint16_t i = 0; i < k; ++i) {
    const auto status = dec.push(encode_packet(block, 0, find_index(0, d, {i})));
    CHECK(status == (i + 1 == k ? DecodeStatus::kComplete : DecodeStatus::kNeedMore));
  }
  CHECK(dec.block() == block);
}

TEST_CASE("decoder: K=3 cascade {0}, {0,1}, {1,2}") {
  const auto block = random_block(3, 6, 4);
  const DegreeDistribution d(3, {});
  const std::vector<std::vector<std::uint16_t>> sets{{0}, {0, 1}, {1, 2}};
  std::vector<CodedPacket> packets;
  for (const auto& s : sets) packets.push_back(encode_packet(block, 2, find_index(2, d, s)));

  // Oracle: the system is full rank and its solution is the block.
  std::vector<std::vector<std::uint8_t>> rhs;
  for (const auto& p : packets) rhs.push_back(p.payload);
  CHECK(oracle::gf2_rank(sets, 3) == 3);
  const auto solved = oracle::gf2_solve(sets, rhs, 3);
  REQUIRE(solved.has_value());
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::equal((*solved)[i].begin(), (*solved)[i].end(), block.packet(i).begin()));

  Decoder dec(2, 3, 6);
  // Pushed in reverse so peeling has to cascade once {0} arrives.
  CHECK(dec.push(packets[2]) == DecodeStatus::kNeedMore);
  CHECK(dec.push(packets[1]) == DecodeStatus::kNeedMore);
  CHECK(dec.recovered_count() == 0);
  CHECK(dec.push(packets[0]) == DecodeStatus::kComplete);
  CHECK(dec.block() == block);
}

TEST_CASE("decoder never completes below K and agrees with the rank oracle") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto k = static_cast<std::uint16_t>(1 + seed % 40);
    const auto block = random_block(k, 3, seed);
    const Encoder enc(block, static_cast<std::uint32_t>(seed));
    Decoder dec(static_cast<std::uint32_t>(seed), k, 3);
    std::vector<std::vector<std::uint16_t>> rows;
    for (std::uint32_t n = 0; !dec.complete() && n < 10u * k; ++n) {
      const auto p = enc.packet(n);
      rows.push_back(neighbor_set(p.frame_id, n, enc.degrees()));
      dec.push(p);
      if (rows.size() < k) CHECK_FALSE(dec.complete());
    }
    REQUIRE(dec.complete());
    CHECK(dec.packets_accepted() >= k);
    CHECK(oracle::gf2_rank(rows, k) == k);
    CHECK(dec.block() == block);
  }
}

TEST_CASE("decoder round trip, duplicates, order") {
  const auto block = random_block(50, 32, 5);
  const Encoder enc(block, 11);
  std::vector<CodedPacket> stream;
  Decoder dec(11, 50, 32);
  for (std::uint32_t n = 0; n < 500 && !dec.complete(); ++n) {
    stream.push_back(enc.packet(n));
    dec.push(stream.back());
    dec.push(stream.back());  // duplicate
  }
  REQUIRE(dec.complete());
  CHECK(dec.packets_accepted() == stream.size());
  CHECK(dec.block() == block);

  auto shuffled = stream;
  Rng rng(9);
  for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
  Decoder again(11, 50, 32);
  for (const auto& p : shuffled) again.push(p);
  REQUIRE(again.complete());
  CHECK(again.block() == block);
}

TEST_CASE("decoder errors") {
  Decoder dec(1, 4, 2);
  CHECK(code_of([&] { dec.block(); }) == ErrorCode::kState);
  const auto block = random_block(4, 2, 6);
  CHECK(code_of([&] { dec.push(encode_packet(block, 2, 0)); }) == ErrorCode::kProtocol);
  const auto other = random_block(5, 2, 6);
  CHECK(code_of([&] { dec.push(encode_packet(other, 1, 0)); }) == ErrorCode::kProtocol);
  CHECK_THROWS_AS(Decoder(1, 0, 2), Error);
}

TEST_CASE("source block padding") {
  const std::vector<std::uint8_t> bytes{1, 2, 3};
  const auto b = SourceBlock::from_bytes(bytes, 2, 2);
  CHECK(std::vector<std::uint8_t>(b.bytes().begin(), b.bytes().end()) == std::vector<std::uint8_t>{1, 2, 3, 0});
  const std::vector<std::uint8_t> too_many(5, 1);
  CHECK_THROWS_AS(SourceBlock::from_bytes(too_many, 2, 2), Error);
}

TEST_CASE("wire format") {
  CodedPacket p{.frame_id = 0x01020304, .n = 0x0a0b0c0d, .k = 0x0102, .m = 3, .payload = {0xaa, 0xbb, 0xcc}};
  const auto bytes = serialize(p);
  CHECK(bytes == std::vector<std::uint8_t>{1, 2, 3, 4, 0x0a, 0x0b, 0x0c, 0x0d, 1, 2, 0, 3, 0xaa, 0xbb, 0xcc});
  std::size_t offset = 0;
  CHECK(parse_packet(bytes, offset) == p);
  CHECK(offset == bytes.size());

  std::vector<std::uint8_t> two = bytes;
  serialize_into(p, two);
  two.pop_back();
  offset = bytes.size();
  try {
    parse_packet(two, offset);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() == bytes.size() + kPacketHeaderSize);
    CHECK(std::string(e.what()).find(std::to_string(bytes.size() + kPacketHeaderSize)) != std::string::npos);
  }
  const std::vector<std::uint8_t> stub(bytes.begin(), bytes.begin() + 7);
  offset = 0;
  CHECK_THROWS_AS(parse_packet(stub, offset), FormatError);
}
