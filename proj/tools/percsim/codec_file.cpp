#include "codec_file.hpp"

#include <bit>
#include <cstring>
#include <memory>
#include <string>

#include "percolation/error.hpp"

namespace percsim {

namespace {

constexpr char kMagic[4] = {'P', 'R', 'C', 'F'};

void put_be(std::vector<std::uint8_t>& out, std::uint64_t value, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

std::uint64_t get_be(const std::uint8_t* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v = (v << 8) | p[i];
  return v;
}

std::size_t frame_count(std::uint64_t length, std::size_t frame_size) {
  return static_cast<std::size_t>((length + frame_size - 1) / frame_size);
}

}  // namespace

std::vector<std::uint8_t> encode_file(std::span<const std::uint8_t> data, const CodecSettings& settings) {
  if (settings.k == 0 || settings.m == 0) throw perc::Error(perc::ErrorCode::kParameter, "K and M must be positive");
  settings.code.validate();

  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.push_back(kCodedFileVersion);
  put_be(out, settings.k, 2);
  put_be(out, settings.m, 2);
  put_be(out, std::bit_cast<std::uint64_t>(settings.code.c), 8);
  put_be(out, std::bit_cast<std::uint64_t>(settings.code.delta), 8);
  put_be(out, data.size(), 8);

  const std::size_t frame_size = std::size_t{settings.k} * settings.m;
  const std::size_t frames = frame_count(data.size(), frame_size);
  for (std::size_t f = 0; f < frames; ++f) {
    const auto chunk = data.subspan(f * frame_size, std::min(frame_size, data.size() - f * frame_size));
    const auto frame_id = static_cast<std::uint32_t>(f);
    perc::Encoder encoder(perc::SourceBlock::from_bytes(chunk, settings.k, settings.m), frame_id, settings.code);
    perc::Decoder shadow(frame_id, settings.k, settings.m, settings.code);
    const std::uint32_t cap = 100u * settings.k + 100u;
    std::uint32_t n = 0;
    for (; !shadow.complete(); ++n) {
      if (n == cap) throw perc::Error(perc::ErrorCode::kLogic, "encoder failed to complete frame " + std::to_string(f));
      const auto packet = encoder.packet(n);
      shadow.push(packet);
      perc::serialize_into(packet, out);
    }
    for (std::uint32_t i = 0; i < settings.extra_packets; ++i) perc::serialize_into(encoder.packet(n + i), out);
  }
  return out;
}

DecodedFile decode_file(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kCodedFileHeaderSize) {
    throw perc::FormatError("truncated coded file header at byte offset " + std::to_string(bytes.size()), bytes.size());
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw perc::FormatError("bad magic at byte offset 0", 0);
  if (bytes[4] != kCodedFileVersion) {
    throw perc::FormatError("unsupported coded file version " + std::to_string(bytes[4]) + " at byte offset 4", 4);
  }
  const auto k = static_cast<std::uint16_t>(get_be(bytes.data() + 5, 2));
  const auto m = static_cast<std::uint16_t>(get_be(bytes.data() + 7, 2));
  perc::RobustSolitonParams code;
  code.c = std::bit_cast<double>(get_be(bytes.data() + 9, 8));
  code.delta = std::bit_cast<double>(get_be(bytes.data() + 17, 8));
  const std::uint64_t length = get_be(bytes.data() + 25, 8);
  if (k == 0 || m == 0) throw perc::FormatError("header declares K or M of zero at byte offset 5", 5);
  try {
    code.validate();
  } catch (const perc::Error& e) {
    throw perc::FormatError(std::string("bad code parameters at byte offset 9: ") + e.what(), 9);
  }

  const std::size_t frame_size = std::size_t{k} * m;
  DecodedFile result;
  result.frames = frame_count(length, frame_size);
  std::vector<std::unique_ptr<perc::Decoder>> decoders(result.frames);

  std::size_t offset = kCodedFileHeaderSize;
  while (offset < bytes.size()) {
    const std::size_t at = offset;
    const auto packet = perc::parse_packet(bytes, offset);
    if (packet.k != k || packet.m != m) {
      throw perc::FormatError("packet at byte offset " + std::to_string(at) + " disagrees with the file's K/M", at);
    }
    if (packet.frame_id >= result.frames) {
      throw perc::FormatError("packet at byte offset " + std::to_string(at) + " names frame " +
                                  std::to_string(packet.frame_id) + " beyond the file length",
                              at);
    }
    auto& decoder = decoders[packet.frame_id];
    if (!decoder) decoder = std::make_unique<perc::Decoder>(packet.frame_id, k, m, code);
    decoder->push(packet);
    ++result.packets;
  }

  for (const auto& d : decoders) {
    if (d && d->complete()) ++result.frames_complete;
  }
  if (!result.complete()) return result;

  result.data.reserve(length);
  for (std::size_t f = 0; f < result.frames; ++f) {
    const auto block = decoders[f]->block();
    const auto frame = block.bytes();
    const std::size_t take = std::min<std::uint64_t>(frame_size, length - f * frame_size);
    result.data.insert(result.data.end(), frame.begin(), frame.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return result;
}

}  // namespace percsim
