#include "percolation/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

namespace perc {

namespace {

constexpr std::uint64_t kDataTag = 0x44415441ULL;
constexpr std::uint64_t kControlTag = 0x4354524cULL;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

bool links_up(const Graph& g, const Path& p) {
  for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i) {
    if (!g.link_up(p.nodes[i], p.nodes[i + 1])) return false;
  }
  return true;
}

}  // namespace

Bandwidth LoadAssignment::total() const { return std::accumulate(rates.begin(), rates.end(), Bandwidth{0}); }

std::vector<std::uint64_t> largest_remainder_split(std::span<const Bandwidth> weights, Bandwidth budget) {
  std::uint64_t sum = 0;
  for (auto w : weights) sum += w;
  if (sum == 0) throw Error(ErrorCode::kNoCapacity, "cannot split a budget over zero total weight");

  const std::size_t n = weights.size();
  std::vector<std::uint64_t> shares(n);
  std::vector<std::uint64_t> remainders(n);
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t share = std::uint64_t{budget} * weights[i];
    shares[i] = share / sum;
    remainders[i] = share % sum;
    assigned += shares[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t i = 0; assigned < budget && i < n; ++i, ++assigned) ++shares[order[i]];
  return shares;
}

LoadAssignment assign_loads(const Route& route, Bandwidth budget) {
  if (route.paths.empty()) throw Error(ErrorCode::kNoPath, "cannot assign loads over an empty route");
  std::vector<Bandwidth> bottlenecks;
  for (const auto& p : route.paths) bottlenecks.push_back(p.bottleneck);
  if (std::all_of(bottlenecks.begin(), bottlenecks.end(), [](Bandwidth b) { return b == 0; })) {
    throw Error(ErrorCode::kNoCapacity, "every path of the route has zero capacity");
  }
  const auto shares = largest_remainder_split(bottlenecks, budget);
  LoadAssignment out;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    out.rates.push_back(static_cast<Bandwidth>(std::min<std::uint64_t>(shares[i], bottlenecks[i])));
  }
  return out;
}

std::string_view to_string(TransferMode mode) noexcept { return mode == TransferMode::kFeedback ? "feedback" : "fec"; }

TransferMode transfer_mode_from_string(std::string_view name) {
  if (name == "feedback") return TransferMode::kFeedback;
  if (name == "fec") return TransferMode::kFec;
  throw Error(ErrorCode::kParameter, "unknown transfer mode `" + std::string(name) + "`");
}

void TransferOptions::validate() const {
  if (k == 0 || m == 0) throw Error(ErrorCode::kParameter, "K and M must be positive");
  if (!(fec_overhead > 0.0)) throw Error(ErrorCode::kParameter, "fec_overhead must be positive");
  if (!(give_up_factor > 0.0)) throw Error(ErrorCode::kParameter, "give_up_factor must be positive");
  code.validate();
}

std::uint64_t TransmissionResult::packets_sent_total() const {
  return std::accumulate(packets_sent.begin(), packets_sent.end(), std::uint64_t{0});
}

namespace {

class Transfer : public std::enable_shared_from_this<Transfer> {
 public:
  Transfer(Network& net, const Route& route, std::span<const std::uint8_t> data, const TransferOptions& opt)
      : net_(net),
        route_(route),
        opt_(opt),
        input_(data.begin(), data.end()),
        header_{opt.frame_id, opt.k, opt.m, static_cast<std::uint32_t>(data.size())},
        encoder_(SourceBlock::from_bytes(data, opt.k, opt.m), opt.frame_id, opt.code),
        decoder_(opt.frame_id, opt.k, opt.m, opt.code) {
    // Paths already broken at the start get no load.
    Route usable = route_;
    for (auto& p : usable.paths) {
      if (!links_up(net_.graph(), p)) p.bottleneck = 0;
    }
    Bandwidth capacity = 0;
    for (const auto& p : usable.paths) capacity += p.bottleneck;
    loads_ = assign_loads(usable, opt_.budget.value_or(capacity));
    if (loads_.total() == 0) throw Error(ErrorCode::kNoCapacity, "load assignment leaves every path idle");

    limit_ = opt_.mode == TransferMode::kFec
                 ? static_cast<std::uint64_t>(std::ceil(opt_.fec_overhead * opt_.k))
                 : static_cast<std::uint64_t>(std::ceil(opt_.give_up_factor * opt_.k));
    std::size_t longest = 0;
    for (const auto& p : route_.paths) longest = std::max(longest, p.hops());
    round_trip_ = 2 * static_cast<Tick>(longest) * net_.link().latency + 2;

    result_.frame_id = opt_.frame_id;
    result_.mode = opt_.mode;
    result_.k = opt_.k;
    result_.m = opt_.m;
    result_.paths = route_.paths.size();
    result_.packets_sent.assign(route_.paths.size(), 0);
  }

  TransmissionResult run() {
    Simulator& sim = net_.sim();
    result_.started = sim.now();
    schedule_source(sim.now());
    const Tick bound = result_.started + static_cast<Tick>(limit_ + 1) * (round_trip_ + 2) + 16;
    while (!(source_done_ && inflight_ == 0)) {
      if (sim.now() > bound) throw Error(ErrorCode::kLogic, "transfer failed to terminate");
      sim.run_until(sim.now() + 1);
    }
    if (!result_.delivered) {
      result_.failure = opt_.mode == TransferMode::kFeedback ? ErrorCode::kAllPathsDown : ErrorCode::kInsufficientPackets;
    }
    result_.overhead_ratio = static_cast<double>(result_.packets_received) / opt_.k;
    return std::move(result_);
  }

 private:
  void schedule_source(Tick at) {
    ++inflight_;
    net_.sim().schedule(at, EventKind::kTimer, [self = shared_from_this()] {
      --self->inflight_;
      self->source_tick();
    });
  }

  void source_tick() {
    if (source_done_) return;
    const Tick now = net_.sim().now();
    Bandwidth this_tick = 0;
    for (std::size_t i = 0; i < route_.paths.size(); ++i) {
      for (Bandwidth r = 0; r < loads_.rates[i] && emitted_ < limit_; ++r) {
        auto packet = std::make_shared<const CodedPacket>(encoder_.packet(next_n_++));
        ++emitted_;
        ++result_.packets_sent[i];
        ++this_tick;
        forward(i, 0, std::move(packet));
      }
    }
    if (this_tick > 0) {
      result_.last_send_tick = now;
      result_.max_sent_per_tick = std::max(result_.max_sent_per_tick, this_tick);
    }
    if (emitted_ >= limit_) {
      source_done_ = true;
    } else {
      schedule_source(now + 1);
    }
  }

  void forward(std::size_t path, std::size_t pos, std::shared_ptr<const CodedPacket> packet) {
    const auto& nodes = route_.paths[path].nodes;
    const std::uint64_t key = hash_words({kDataTag, packet->frame_id, packet->n});
    auto self = shared_from_this();
    const bool left = net_.send(
        nodes[pos], nodes[pos + 1], key,
        [self, path, pos, packet](NodeId) {
          --self->inflight_;
          if (pos + 2 == self->route_.paths[path].nodes.size()) {
            self->at_destination(*packet);
          } else {
            self->forward(path, pos + 1, packet);
          }
        },
        [self] { --self->inflight_; });
    if (left) ++inflight_;
  }

  void at_destination(const CodedPacket& packet) {
    ++result_.packets_received;
    if (complete_) {
      if (opt_.mode == TransferMode::kFeedback && net_.sim().now() != last_feedback_) send_feedback();
      return;
    }
    if (decoder_.push(packet) != DecodeStatus::kComplete) return;

    complete_ = true;
    result_.packets_received_at_complete = result_.packets_received;
    result_.ticks = net_.sim().now() - result_.started;
    const auto block = decoder_.block();
    const auto bytes = block.bytes();
    result_.data.assign(bytes.begin(), bytes.begin() + header_.length);
    if (result_.data != input_) throw Error(ErrorCode::kLogic, "decoded frame differs from the input");
    result_.delivered = true;
    if (opt_.mode == TransferMode::kFeedback) send_feedback();
  }

  // Stop signal now, frame ACK one tick later, both on the reverse of the best-ranked
  // path that is still intact.
  void send_feedback() {
    last_feedback_ = net_.sim().now();
    const Path* chosen = &route_.paths.front();
    for (const auto& p : route_.paths) {
      if (links_up(net_.graph(), p)) {
        chosen = &p;
        break;
      }
    }
    auto reverse = std::make_shared<const std::vector<NodeId>>(chosen->nodes.rbegin(), chosen->nodes.rend());
    control(reverse, 0, false, hash_words({kControlTag, header_.frame_id, control_seq_++}));
    ++inflight_;
    net_.sim().schedule(net_.sim().now() + 1, EventKind::kTimer, [self = shared_from_this(), reverse] {
      --self->inflight_;
      self->control(reverse, 0, true, hash_words({kControlTag, self->header_.frame_id, self->control_seq_++}));
    });
  }

  void control(std::shared_ptr<const std::vector<NodeId>> reverse, std::size_t pos, bool is_ack, std::uint64_t key) {
    auto self = shared_from_this();
    const bool left = net_.send(
        (*reverse)[pos], (*reverse)[pos + 1], key,
        [self, reverse, pos, is_ack, key](NodeId) {
          --self->inflight_;
          if (pos + 2 < reverse->size()) return self->control(reverse, pos + 1, is_ack, key);
          is_ack ? self->on_ack() : self->on_stop();
        },
        [self] { --self->inflight_; });
    if (left) ++inflight_;
  }

  // The source never sends again after a stop. The ACK scheduled behind it is still
  // in flight, so run() keeps going until it lands or is lost.
  void on_stop() {
    if (!result_.stop_tick) result_.stop_tick = net_.sim().now();
    source_done_ = true;
  }

  void on_ack() {
    const Tick now = net_.sim().now();
    if (!result_.stop_tick) result_.stop_tick = now;
    if (!result_.acked) {
      result_.acked = true;
      result_.ack_tick = now;
    }
    source_done_ = true;
  }

  Network& net_;
  Route route_;
  TransferOptions opt_;
  std::vector<std::uint8_t> input_;
  FrameHeader header_;
  Encoder encoder_;
  Decoder decoder_;
  LoadAssignment loads_;
  TransmissionResult result_;

  std::uint64_t limit_ = 0;
  std::uint64_t emitted_ = 0;
  std::uint32_t next_n_ = 0;
  Tick round_trip_ = 0;
  bool source_done_ = false;
  bool complete_ = false;
  Tick last_feedback_ = -1;
  std::uint64_t control_seq_ = 0;
  std::int64_t inflight_ = 0;
};

}  // namespace

TransmissionResult transmit_file(Network& net, const Route& route, std::span<const std::uint8_t> data,
                                 const TransferOptions& options) {
  options.validate();
  if (route.paths.empty()) throw Error(ErrorCode::kNoPath, "cannot transmit over an empty route");
  if (data.size() > std::size_t{options.k} * options.m) {
    throw Error(ErrorCode::kParameter, "frame of " + std::to_string(data.size()) + " bytes exceeds K*M");
  }
  return std::make_shared<Transfer>(net, route, data, options)->run();
}

std::vector<TransmissionResult> transmit_frames(Network& net, const Route& route,
                                                const std::vector<std::vector<std::uint8_t>>& frames,
                                                const TransferOptions& options) {
  std::vector<TransmissionResult> out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    TransferOptions frame_opts = options;
    frame_opts.frame_id = options.frame_id + static_cast<std::uint32_t>(i);
    out.push_back(transmit_file(net, route, frames[i], frame_opts));
    if (options.mode == TransferMode::kFeedback && !out.back().acked) break;
  }
  return out;
}

void to_json(nlohmann::json& j, const TransmissionResult& r) {
  j = {{"frame_id", r.frame_id},
       {"mode", to_string(r.mode)},
       {"K", r.k},
       {"M", r.m},
       {"paths", r.paths},
       {"delivered", r.delivered},
       {"acked", r.acked},
       {"failure", r.failure ? nlohmann::json(to_string(*r.failure)) : nlohmann::json(nullptr)},
       {"packets_sent", r.packets_sent},
       {"packets_sent_total", r.packets_sent_total()},
       {"packets_received", r.packets_received},
       {"packets_received_at_complete", r.packets_received_at_complete},
       {"overhead_ratio", r.overhead_ratio},
       {"ticks", r.ticks}};
}

std::string transmission_csv_header() {
  return "scenario,seed,mode,K,M,paths,delivered,packets_sent_total,overhead_ratio,ticks";
}

std::string transmission_csv_row(std::string_view scenario, std::uint64_t seed, const TransmissionResult& r) {
  std::string row(scenario);
  row += ',' + std::to_string(seed);
  row += ',' + std::string(to_string(r.mode));
  row += ',' + std::to_string(r.k);
  row += ',' + std::to_string(r.m);
  row += ',' + std::to_string(r.paths);
  row += r.delivered ? ",true" : ",false";
  row += ',' + std::to_string(r.packets_sent_total());
  row += ',' + format_double(r.overhead_ratio);
  row += ',' + std::to_string(r.ticks);
  return row;
}

}  // namespace perc
