#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "percolation/fountain.hpp"

namespace percsim {

/// Coded file layout, big-endian:
///   "PRCF" | version u8 | K u16 | M u16 | c f64 | delta f64 | length u64
/// followed by wire packets of every frame. Frame f covers bytes [f*K*M, (f+1)*K*M).
inline constexpr std::uint8_t kCodedFileVersion = 1;
inline constexpr std::size_t kCodedFileHeaderSize = 33;

struct CodecSettings {
  std::uint16_t k = 64;
  std::uint16_t m = 64;
  perc::RobustSolitonParams code;
  /// Packets emitted per frame after a local decoder has already completed.
  std::uint32_t extra_packets = 0;
};

std::vector<std::uint8_t> encode_file(std::span<const std::uint8_t> data, const CodecSettings& settings);

struct DecodedFile {
  std::vector<std::uint8_t> data;  // empty unless every frame decoded
  std::size_t frames = 0;
  std::size_t frames_complete = 0;
  std::size_t packets = 0;

  bool complete() const { return frames_complete == frames; }
};

/// Throws perc::FormatError (with byte offset) on a malformed or truncated file.
DecodedFile decode_file(std::span<const std::uint8_t> bytes);

}  // namespace percsim
