#include "percolation/fountain.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <string>

#include "percolation/error.hpp"
#include "percolation/random.hpp"

namespace perc {

void RobustSolitonParams::validate() const {
  if (!(c > 0.0)) throw Error(ErrorCode::kParameter, "robust soliton c must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::kParameter, "robust soliton delta must lie in (0, 1)");
}

std::vector<double> robust_soliton(std::size_t k, const RobustSolitonParams& params) {
  params.validate();
  if (k == 0) throw Error(ErrorCode::kParameter, "robust soliton needs k >= 1");
  if (k == 1) return {1.0};

  const double kd = static_cast<double>(k);
  const double r = params.c * std::log(kd / params.delta) * std::sqrt(kd);
  const auto pivot = std::clamp<std::size_t>(static_cast<std::size_t>(std::floor(kd / r)), 1, k);

  std::vector<double> mu(k);
  mu[0] = 1.0 / kd;
  for (std::size_t d = 2; d <= k; ++d) mu[d - 1] = 1.0 / (static_cast<double>(d) * static_cast<double>(d - 1));
  for (std::size_t d = 1; d < pivot; ++d) mu[d - 1] += r / (static_cast<double>(d) * kd);
  // The spike goes negative when r < delta (tiny k); drop it rather than emit a
  // negative probability.
  mu[pivot - 1] += std::max(0.0, r * std::log(r / params.delta) / kd);

  double total = 0.0;
  for (double x : mu) total += x;
  for (double& x : mu) x /= total;
  return mu;
}

SourceBlock::SourceBlock(std::uint16_t k, std::uint16_t m) : SourceBlock(k, m, std::vector<std::uint8_t>(std::size_t{k} * m)) {}

SourceBlock::SourceBlock(std::uint16_t k, std::uint16_t m, std::vector<std::uint8_t> data)
    : k_(k), m_(m), data_(std::move(data)) {
  if (k == 0 || m == 0) throw Error(ErrorCode::kParameter, "source block needs K >= 1 and M >= 1");
  if (data_.size() != std::size_t{k} * m) throw Error(ErrorCode::kParameter, "source block data is not K*M bytes");
}

SourceBlock SourceBlock::from_bytes(std::span<const std::uint8_t> bytes, std::uint16_t k, std::uint16_t m) {
  if (bytes.size() > std::size_t{k} * m) {
    throw Error(ErrorCode::kParameter, std::to_string(bytes.size()) + " bytes do not fit a " + std::to_string(k) +
                                           "x" + std::to_string(m) + " block");
  }
  std::vector<std::uint8_t> data(std::size_t{k} * m, 0);
  std::copy(bytes.begin(), bytes.end(), data.begin());
  return SourceBlock(k, m, std::move(data));
}

std::span<const std::uint8_t> SourceBlock::packet(std::size_t index) const {
  return std::span<const std::uint8_t>(data_).subspan(index * m_, m_);
}

std::span<std::uint8_t> SourceBlock::packet(std::size_t index) {
  return std::span<std::uint8_t>(data_).subspan(index * m_, m_);
}

std::vector<std::vector<std::uint8_t>> reorganize(const SourceBlock& block) {
  std::vector<std::vector<std::uint8_t>> streams(block.m(), std::vector<std::uint8_t>(block.k()));
  for (std::size_t k = 0; k < block.k(); ++k) {
    const auto row = block.packet(k);
    for (std::size_t i = 0; i < block.m(); ++i) streams[i][k] = row[i];
  }
  return streams;
}

SourceBlock deorganize(const std::vector<std::vector<std::uint8_t>>& streams) {
  if (streams.empty() || streams.front().empty() || streams.size() > UINT16_MAX ||
      streams.front().size() > UINT16_MAX) {
    throw Error(ErrorCode::kFormat, "deorganize needs 1..65535 non-empty streams");
  }
  const auto m = static_cast<std::uint16_t>(streams.size());
  const auto k = static_cast<std::uint16_t>(streams.front().size());
  SourceBlock block(k, m);
  for (std::size_t i = 0; i < m; ++i) {
    if (streams[i].size() != k) throw Error(ErrorCode::kFormat, "symbol streams have unequal lengths");
    for (std::size_t j = 0; j < k; ++j) block.packet(j)[i] = streams[i][j];
  }
  return block;
}

DegreeDistribution::DegreeDistribution(std::size_t k, const RobustSolitonParams& params) {
  const auto pmf = robust_soliton(k, params);
  cdf_.resize(pmf.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) cdf_[i] = acc += pmf[i];
  cdf_.back() = 1.0;
}

std::size_t DegreeDistribution::sample(double u) const {
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto index = static_cast<std::size_t>(it - cdf_.begin());
  return std::min(index, cdf_.size() - 1) + 1;
}

std::vector<std::uint16_t> neighbor_set(std::uint32_t frame_id, std::uint32_t n, const DegreeDistribution& degrees) {
  CounterStream stream(hash_words({0x4c54ULL, frame_id, n}));
  const std::size_t k = degrees.k();
  const std::size_t d = degrees.sample(stream.unit());
  // Floyd's sampling of d distinct values from [0, k).
  std::set<std::uint16_t> chosen;
  for (std::size_t j = k - d; j < k; ++j) {
    const auto t = static_cast<std::uint16_t>(stream.below(j + 1));
    if (!chosen.insert(t).second) chosen.insert(static_cast<std::uint16_t>(j));
  }
  return {chosen.begin(), chosen.end()};
}

Encoder::Encoder(SourceBlock block, std::uint32_t frame_id, const RobustSolitonParams& params)
    : block_(std::move(block)), frame_id_(frame_id), degrees_(block_.k(), params) {}

CodedPacket Encoder::packet(std::uint32_t n) const {
  CodedPacket out{frame_id_, n, block_.k(), block_.m(), std::vector<std::uint8_t>(block_.m(), 0)};
  for (auto index : neighbor_set(frame_id_, n, degrees_)) {
    const auto row = block_.packet(index);
    for (std::size_t i = 0; i < row.size(); ++i) out.payload[i] ^= row[i];
  }
  return out;
}

CodedPacket encode_packet(const SourceBlock& block, std::uint32_t frame_id, std::uint32_t n,
                          const RobustSolitonParams& params) {
  return Encoder(block, frame_id, params).packet(n);
}

CodedPacket encode_packet_by_columns(const SourceBlock& block, std::uint32_t frame_id, std::uint32_t n,
                                     const RobustSolitonParams& params) {
  const DegreeDistribution degrees(block.k(), params);
  const auto neighbors = neighbor_set(frame_id, n, degrees);
  const auto streams = reorganize(block);

  // Coded symbol A_i^(n) of stream i, then read the M coded symbols out in column order.
  CodedPacket out{frame_id, n, block.k(), block.m(), {}};
  out.payload.reserve(block.m());
  for (const auto& stream : streams) {
    std::uint8_t symbol = 0;
    for (auto index : neighbors) symbol ^= stream[index];
    out.payload.push_back(symbol);
  }
  return out;
}

Decoder::Decoder(std::uint32_t frame_id, std::uint16_t k, std::uint16_t m, const RobustSolitonParams& params)
    : frame_id_(frame_id),
      k_(k),
      m_(m),
      degrees_(std::max<std::size_t>(k, 1), params),
      waiting_on_(k),
      data_(std::size_t{k} * m, 0),
      recovered_(k, false) {
  if (k == 0 || m == 0) throw Error(ErrorCode::kParameter, "decoder needs K >= 1 and M >= 1");
}

void Decoder::strip_recovered(Pending& p) const {
  std::erase_if(p.neighbors, [&](std::uint16_t index) {
    if (!recovered_[index]) return false;
    const auto* row = data_.data() + std::size_t{index} * m_;
    for (std::size_t i = 0; i < m_; ++i) p.payload[i] ^= row[i];
    return true;
  });
}

void Decoder::recover(std::uint16_t index, std::span<const std::uint8_t> payload) {
  std::copy(payload.begin(), payload.end(), data_.begin() + std::size_t{index} * m_);
  recovered_[index] = true;
  ++recovered_count_;
}

DecodeStatus Decoder::push(const CodedPacket& packet) {
  if (packet.frame_id != frame_id_) {
    throw Error(ErrorCode::kProtocol, "packet for frame " + std::to_string(packet.frame_id) +
                                          " pushed into decoder for frame " + std::to_string(frame_id_));
  }
  if (packet.k != k_ || packet.m != m_ || packet.payload.size() != m_) {
    throw Error(ErrorCode::kProtocol, "packet shape does not match the decoder's K x M");
  }
  if (complete() || !seen_.insert(packet.n).second) return complete() ? DecodeStatus::kComplete : DecodeStatus::kNeedMore;

  Pending fresh{neighbor_set(frame_id_, packet.n, degrees_), packet.payload, true};
  strip_recovered(fresh);
  if (fresh.neighbors.empty()) return DecodeStatus::kNeedMore;

  std::deque<std::pair<std::uint16_t, std::vector<std::uint8_t>>> ripple;
  if (fresh.neighbors.size() == 1) {
    ripple.emplace_back(fresh.neighbors.front(), std::move(fresh.payload));
  } else {
    const std::size_t slot = pending_.size();
    for (auto index : fresh.neighbors) waiting_on_[index].push_back(slot);
    pending_.push_back(std::move(fresh));
  }

  while (!ripple.empty()) {
    auto [index, payload] = std::move(ripple.front());
    ripple.pop_front();
    if (recovered_[index]) continue;
    recover(index, payload);
    for (std::size_t slot : std::exchange(waiting_on_[index], {})) {
      Pending& p = pending_[slot];
      if (!p.live) continue;
      for (std::size_t i = 0; i < m_; ++i) p.payload[i] ^= payload[i];
      std::erase(p.neighbors, index);
      if (p.neighbors.size() <= 1) {
        p.live = false;
        if (p.neighbors.size() == 1) ripple.emplace_back(p.neighbors.front(), std::move(p.payload));
      }
    }
  }
  return complete() ? DecodeStatus::kComplete : DecodeStatus::kNeedMore;
}

SourceBlock Decoder::block() const {
  if (!complete()) {
    throw Error(ErrorCode::kState, "frame " + std::to_string(frame_id_) + " not decoded: " +
                                       std::to_string(recovered_count_) + "/" + std::to_string(k_) + " recovered");
  }
  return SourceBlock(k_, m_, data_);
}

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  put_u16(out, static_cast<std::uint16_t>(v >> 16));
  put_u16(out, static_cast<std::uint16_t>(v));
}

std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>((p[0] << 8) | p[1]); }

std::uint32_t get_u32(const std::uint8_t* p) {
  return (std::uint32_t{get_u16(p)} << 16) | get_u16(p + 2);
}

}  // namespace

void serialize_into(const CodedPacket& packet, std::vector<std::uint8_t>& out) {
  if (packet.payload.size() != packet.m) throw Error(ErrorCode::kProtocol, "payload length differs from M");
  put_u32(out, packet.frame_id);
  put_u32(out, packet.n);
  put_u16(out, packet.k);
  put_u16(out, packet.m);
  out.insert(out.end(), packet.payload.begin(), packet.payload.end());
}

std::vector<std::uint8_t> serialize(const CodedPacket& packet) {
  std::vector<std::uint8_t> out;
  out.reserve(kPacketHeaderSize + packet.payload.size());
  serialize_into(packet, out);
  return out;
}

CodedPacket parse_packet(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  if (bytes.size() < offset + kPacketHeaderSize) {
    throw FormatError("truncated packet header at byte offset " + std::to_string(offset), offset);
  }
  const auto* p = bytes.data() + offset;
  CodedPacket out;
  out.frame_id = get_u32(p);
  out.n = get_u32(p + 4);
  out.k = get_u16(p + 8);
  out.m = get_u16(p + 10);
  if (out.k == 0 || out.m == 0) {
    throw FormatError("packet at byte offset " + std::to_string(offset) + " declares K or M of zero", offset);
  }
  if (bytes.size() < offset + kPacketHeaderSize + out.m) {
    throw FormatError("truncated packet payload at byte offset " + std::to_string(offset + kPacketHeaderSize) +
                          " (packet starts at " + std::to_string(offset) + ")",
                      offset + kPacketHeaderSize);
  }
  out.payload.assign(p + kPacketHeaderSize, p + kPacketHeaderSize + out.m);
  offset += kPacketHeaderSize + out.m;
  return out;
}

}  // namespace perc
