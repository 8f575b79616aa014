#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "percolation/error.hpp"
#include "percolation/fountain.hpp"
#include "percolation/routing.hpp"
#include "percolation/sim.hpp"

namespace perc {

struct LoadAssignment {
  std::vector<Bandwidth> rates;  // packets per tick, one per route path

  Bandwidth total() const;
};

/// Integer shares of `budget` proportional to `weights`, rounded by largest
/// remainder with ties to the lower index. Shares always sum to `budget`.
std::vector<std::uint64_t> largest_remainder_split(std::span<const Bandwidth> weights, Bandwidth budget);

/// Splits `budget` across the route's paths in proportion to their bottlenecks with
/// largest-remainder rounding (ties to the lower index), capping each at its bottleneck.
LoadAssignment assign_loads(const Route& route, Bandwidth budget);

enum class TransferMode { kFeedback, kFec };

std::string_view to_string(TransferMode mode) noexcept;
TransferMode transfer_mode_from_string(std::string_view name);

/// Metadata the destination needs to strip padding; travels with every data packet.
struct FrameHeader {
  std::uint32_t frame_id = 0;
  std::uint16_t k = 0;
  std::uint16_t m = 0;
  std::uint32_t length = 0;
};

struct TransferOptions {
  std::uint16_t k = 32;
  std::uint16_t m = 64;
  TransferMode mode = TransferMode::kFeedback;
  /// FEC mode sends exactly ceil(fec_overhead * K) packets.
  double fec_overhead = 2.0;
  RobustSolitonParams code;
  std::uint32_t frame_id = 0;
  /// Defaults to the sum of usable path bottlenecks.
  std::optional<Bandwidth> budget;
  /// Feedback mode gives up after give_up_factor * K emissions without an ACK.
  double give_up_factor = 50.0;

  void validate() const;
};

struct TransmissionResult {
  std::uint32_t frame_id = 0;
  TransferMode mode = TransferMode::kFeedback;
  std::uint16_t k = 0;
  std::uint16_t m = 0;
  std::size_t paths = 0;

  bool delivered = false;  // destination decoded the frame and the bytes match
  bool acked = false;      // the source received the frame ACK
  std::optional<ErrorCode> failure;

  std::vector<std::uint64_t> packets_sent;  // per path
  std::uint64_t packets_received = 0;       // arrivals at the destination, late ones included
  std::uint64_t packets_received_at_complete = 0;
  double overhead_ratio = 0.0;              // packets_received / K

  Tick started = 0;
  Tick ticks = 0;            // completion tick - start, when delivered
  std::optional<Tick> ack_tick;
  std::optional<Tick> stop_tick;  // first stop/ACK the source processed
  Tick last_send_tick = 0;
  Bandwidth max_sent_per_tick = 0;

  std::vector<std::uint8_t> data;  // decoded bytes, padding stripped

  std::uint64_t packets_sent_total() const;
};

/// Sends one frame over `route`: coded packets leave the source every tick at the
/// assigned rates, relays forward them along their path, the destination decodes.
/// Feedback mode: on completion the destination sends a stop signal and one tick
/// later the frame ACK; the source halts on the first it receives. FEC mode: the
/// source sends a fixed packet budget and nothing comes back.
TransmissionResult transmit_file(Network& net, const Route& route, std::span<const std::uint8_t> data,
                                 const TransferOptions& options);

/// Sends frames strictly in sequence, frame_id = options.frame_id + index. In
/// feedback mode the next frame starts only after the previous ACK; the first
/// unacknowledged frame ends the sequence.
std::vector<TransmissionResult> transmit_frames(Network& net, const Route& route,
                                                const std::vector<std::vector<std::uint8_t>>& frames,
                                                const TransferOptions& options);

void to_json(nlohmann::json& j, const TransmissionResult& r);

/// Column order: scenario, seed, mode, K, M, paths, delivered, packets_sent_total, overhead_ratio, ticks.
std::string transmission_csv_header();
std::string transmission_csv_row(std::string_view scenario, std::uint64_t seed, const TransmissionResult& r);

}  // namespace perc
