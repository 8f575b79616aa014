#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

namespace perc {

struct RobustSolitonParams {
  double c = 0.03;
  double delta = 0.5;

  void validate() const;
};

/// Robust soliton distribution over degrees 1..k; element d-1 is P(degree = d).
std::vector<double> robust_soliton(std::size_t k, const RobustSolitonParams& params = {});

/// K source packets of M symbols each, row-major.
class SourceBlock {
 public:
  SourceBlock(std::uint16_t k, std::uint16_t m);
  SourceBlock(std::uint16_t k, std::uint16_t m, std::vector<std::uint8_t> data);

  /// Zero-pads `bytes` up to k * m. Throws when bytes do not fit.
  static SourceBlock from_bytes(std::span<const std::uint8_t> bytes, std::uint16_t k, std::uint16_t m);

  std::uint16_t k() const { return k_; }
  std::uint16_t m() const { return m_; }
  std::span<const std::uint8_t> packet(std::size_t index) const;
  std::span<std::uint8_t> packet(std::size_t index);
  std::span<const std::uint8_t> bytes() const { return data_; }

  friend bool operator==(const SourceBlock&, const SourceBlock&) = default;

 private:
  std::uint16_t k_;
  std::uint16_t m_;
  std::vector<std::uint8_t> data_;
};

/// Column reorganization: stream i holds symbol i of every source packet.
std::vector<std::vector<std::uint8_t>> reorganize(const SourceBlock& block);
SourceBlock deorganize(const std::vector<std::vector<std::uint8_t>>& streams);

struct CodedPacket {
  std::uint32_t frame_id = 0;
  std::uint32_t n = 0;
  std::uint16_t k = 0;
  std::uint16_t m = 0;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const CodedPacket&, const CodedPacket&) = default;
};

/// Inverse-CDF sampler for the robust soliton degree.
class DegreeDistribution {
 public:
  DegreeDistribution(std::size_t k, const RobustSolitonParams& params);

  std::size_t k() const { return cdf_.size(); }
  /// Degree for a uniform draw u in [0, 1).
  std::size_t sample(double u) const;

 private:
  std::vector<double> cdf_;
};

/// Sorted, distinct source indices combined into coded packet n of frame_id. Pure
/// function of its arguments, so encoder and decoder agree without a side channel.
std::vector<std::uint16_t> neighbor_set(std::uint32_t frame_id, std::uint32_t n, const DegreeDistribution& degrees);

class Encoder {
 public:
  Encoder(SourceBlock block, std::uint32_t frame_id, const RobustSolitonParams& params = {});

  CodedPacket packet(std::uint32_t n) const;

  const SourceBlock& block() const { return block_; }
  std::uint32_t frame_id() const { return frame_id_; }
  const DegreeDistribution& degrees() const { return degrees_; }

 private:
  SourceBlock block_;
  std::uint32_t frame_id_;
  DegreeDistribution degrees_;
};

/// Whole-packet encoding: payload[i] is the XOR of symbol i of every neighbor packet.
CodedPacket encode_packet(const SourceBlock& block, std::uint32_t frame_id, std::uint32_t n,
                          const RobustSolitonParams& params = {});

/// The same packet produced the long way: reorganize into M symbol streams, LT-encode
/// each stream at index n with the shared neighbor set, read the symbols back out.
CodedPacket encode_packet_by_columns(const SourceBlock& block, std::uint32_t frame_id, std::uint32_t n,
                                     const RobustSolitonParams& params = {});

enum class DecodeStatus { kNeedMore, kComplete };

/// Peeling decoder for one frame.
class Decoder {
 public:
  Decoder(std::uint32_t frame_id, std::uint16_t k, std::uint16_t m, const RobustSolitonParams& params = {});

  DecodeStatus push(const CodedPacket& packet);

  bool complete() const { return recovered_count_ == k_; }
  std::size_t recovered_count() const { return recovered_count_; }
  bool recovered(std::size_t index) const { return recovered_[index]; }
  /// Distinct packet indices accepted so far.
  std::size_t packets_accepted() const { return seen_.size(); }

  /// The reconstructed block. Throws kState before completion.
  SourceBlock block() const;

  std::uint32_t frame_id() const { return frame_id_; }
  std::uint16_t k() const { return k_; }
  std::uint16_t m() const { return m_; }

 private:
  struct Pending {
    std::vector<std::uint16_t> neighbors;
    std::vector<std::uint8_t> payload;
    bool live = true;
  };

  void strip_recovered(Pending& p) const;
  void recover(std::uint16_t index, std::span<const std::uint8_t> payload);

  std::uint32_t frame_id_;
  std::uint16_t k_;
  std::uint16_t m_;
  DegreeDistribution degrees_;
  std::unordered_set<std::uint32_t> seen_;
  std::vector<Pending> pending_;
  std::vector<std::vector<std::size_t>> waiting_on_;  // source index -> pending slots
  std::vector<std::uint8_t> data_;
  std::vector<bool> recovered_;
  std::size_t recovered_count_ = 0;
};

/// Wire layout, big-endian: frame_id u32 | n u32 | K u16 | M u16 | payload (M bytes).
inline constexpr std::size_t kPacketHeaderSize = 12;

std::vector<std::uint8_t> serialize(const CodedPacket& packet);
void serialize_into(const CodedPacket& packet, std::vector<std::uint8_t>& out);

/// Parses one packet at `offset`; on success advances offset past it. Throws
/// FormatError naming the byte offset of a truncated or malformed packet.
CodedPacket parse_packet(std::span<const std::uint8_t> bytes, std::size_t& offset);

}  // namespace perc
