#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "codec_file.hpp"
#include "percolation/error.hpp"
#include "percolation/scenario.hpp"

namespace percsim {

namespace {

using nlohmann::json;

enum class Format { kJson, kCsv };

Format pick_format(const std::string& requested, const std::string& out_path) {
  if (requested == "json") return Format::kJson;
  if (requested == "csv") return Format::kCsv;
  if (!requested.empty()) throw perc::Error(perc::ErrorCode::kConfig, "unknown --format `" + requested + "`");
  return out_path.ends_with(".csv") ? Format::kCsv : Format::kJson;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw perc::Error(perc::ErrorCode::kConfig, "cannot write " + path);
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw perc::Error(perc::ErrorCode::kConfig, "cannot open " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw perc::Error(perc::ErrorCode::kConfig, "cannot write " + path);
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw perc::Error(perc::ErrorCode::kConfig, "cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw perc::Error(perc::ErrorCode::kConfig, path + ": " + e.what());
  }
}

perc::SimConfig config_with_seed(const json& base, const std::string& path, std::optional<std::uint64_t> seed) {
  json j = base;
  if (seed) j["seed"] = *seed;
  return perc::parse_config(j, std::filesystem::path(path).parent_path());
}

/// A run fails when nothing it set out to do worked: no flow found a route, or no
/// storage trial recovered.
bool failed(const perc::Metrics& m) {
  if (m.scenario == "storage") return m.storage_trials > 0 && m.storage_recovery_rate == 0.0;
  return m.flows_attempted > 0 && m.routes_found == 0;
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text) {
  const auto dots = text.find("..");
  auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
      throw perc::Error(perc::ErrorCode::kConfig, "bad --seeds `" + text + "`, expected A..B");
    }
    return v;
  };
  if (dots == std::string::npos) {
    const auto v = number(text);
    return {v, v};
  }
  const auto lo = number(std::string_view(text).substr(0, dots));
  const auto hi = number(std::string_view(text).substr(dots + 2));
  if (hi < lo) throw perc::Error(perc::ErrorCode::kConfig, "bad --seeds `" + text + "`: upper bound below lower");
  return {lo, hi};
}

std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
};

int cmd_run(const RunArgs& a, std::ostream& out) {
  const auto config = config_with_seed(read_json(a.config), a.config, a.seed);
  const auto format = pick_format(a.format, a.out);
  const auto metrics = perc::run_scenario(config);
  if (format == Format::kCsv) {
    write_text(a.out, perc::metrics_csv_header() + "\n" + perc::metrics_csv_row(metrics) + "\n", out);
  } else {
    write_text(a.out, json(metrics).dump(2) + "\n", out);
  }
  return failed(metrics) ? kExitScenarioFailure : kExitOk;
}

struct SweepArgs {
  std::string config;
  std::string seeds;
  unsigned jobs = 1;
  std::string out;
  std::string format;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  const auto [lo, hi] = parse_seed_range(a.seeds);
  const auto base = read_json(a.config);
  const auto format = pick_format(a.format, a.out);

  // Parse every config up front so config errors surface before any work starts.
  std::vector<perc::SimConfig> configs;
  for (std::uint64_t s = lo;; ++s) {
    configs.push_back(config_with_seed(base, a.config, s));
    if (s == hi) break;
  }

  std::vector<perc::Metrics> results(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < configs.size();) {
      try {
        results[i] = perc::run_scenario(configs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned jobs = std::clamp<unsigned>(a.jobs, 1, static_cast<unsigned>(configs.size()));
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  struct Agg {
    double sum = 0, min = std::numeric_limits<double>::infinity(), max = -std::numeric_limits<double>::infinity();
  };
  const auto names = perc::Metrics{}.values();
  std::vector<Agg> agg(names.size());
  for (const auto& m : results) {
    const auto vals = m.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      agg[i].sum += vals[i].second;
      agg[i].min = std::min(agg[i].min, vals[i].second);
      agg[i].max = std::max(agg[i].max, vals[i].second);
    }
  }
  const double count = static_cast<double>(results.size());

  if (format == Format::kCsv) {
    std::string text = perc::metrics_csv_header() + "\n";
    for (const auto& m : results) text += perc::metrics_csv_row(m) + "\n";
    for (const char* stat : {"mean", "min", "max"}) {
      text += configs.front().scenario + ":" + stat + "," + std::to_string(results.size());
      for (const auto& g : agg) {
        const std::string_view s = stat;
        text += "," + csv_number(s == "mean" ? g.sum / count : s == "min" ? g.min : g.max);
      }
      text += "\n";
    }
    write_text(a.out, text, out);
  } else {
    json j;
    j["scenario"] = configs.front().scenario;
    j["seeds"] = {lo, hi};
    j["runs"] = results;
    json aggregate = json::object();
    for (std::size_t i = 0; i < names.size(); ++i) {
      aggregate[names[i].first] = {{"mean", agg[i].sum / count}, {"min", agg[i].min}, {"max", agg[i].max},
                                   {"count", results.size()}};
    }
    j["aggregate"] = std::move(aggregate);
    write_text(a.out, j.dump(2) + "\n", out);
  }
  return std::any_of(results.begin(), results.end(), failed) ? kExitScenarioFailure : kExitOk;
}

struct EncodeArgs {
  std::string in;
  std::string out;
  std::string config;
  std::optional<std::uint16_t> k, m;
  std::optional<double> c, delta;
  std::uint32_t extra = 0;
};

int cmd_encode(const EncodeArgs& a, std::ostream& err) {
  CodecSettings s;
  if (!a.config.empty()) {
    const auto j = read_json(a.config);
    if (j.contains("code")) {
      const auto& code = j.at("code");
      try {
        s.k = code.value("K", s.k);
        s.m = code.value("M", s.m);
        s.code.c = code.value("c", s.code.c);
        s.code.delta = code.value("delta", s.code.delta);
      } catch (const json::exception& e) {
        throw perc::Error(perc::ErrorCode::kConfig, "config field `code`: " + std::string(e.what()));
      }
    }
  }
  if (a.k) s.k = *a.k;
  if (a.m) s.m = *a.m;
  if (a.c) s.code.c = *a.c;
  if (a.delta) s.code.delta = *a.delta;
  s.extra_packets = a.extra;
  try {
    s.code.validate();
  } catch (const perc::Error& e) {
    throw perc::Error(perc::ErrorCode::kConfig, e.what());
  }
  if (s.k == 0 || s.m == 0) throw perc::Error(perc::ErrorCode::kConfig, "K and M must be positive");

  const auto data = read_bytes(a.in);
  const auto coded = encode_file(data, s);
  write_bytes(a.out, coded);
  err << "encoded " << data.size() << " bytes into " << coded.size() << " bytes (K=" << s.k << ", M=" << s.m
      << ")\n";
  return kExitOk;
}

int cmd_decode(const std::string& in, const std::string& out_path, std::ostream& err) {
  const auto decoded = decode_file(read_bytes(in));
  if (!decoded.complete()) {
    err << "error: only " << decoded.frames_complete << " of " << decoded.frames << " frames decodable from "
        << decoded.packets << " packets\n";
    return kExitScenarioFailure;
  }
  write_bytes(out_path, decoded.data);
  return kExitOk;
}

struct RouteDumpArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> source, dest;
  std::string out;
};

int cmd_route_dump(const RouteDumpArgs& a, std::ostream& out, std::ostream& err) {
  auto config = config_with_seed(read_json(a.config), a.config, a.seed);
  if (a.source || a.dest) {
    if (!a.source || !a.dest) throw perc::Error(perc::ErrorCode::kConfig, "--source and --dest go together");
    config.route_dump = perc::Flow{perc::NodeId{*a.source}, perc::NodeId{*a.dest}};
  }
  const auto result = perc::run_route_dump(config);
  if (!result.ok()) {
    err << "error: routing failed: " << perc::to_string(*result.failure) << "\n";
    return kExitScenarioFailure;
  }
  json j = *result.route;
  j["probes"] = {{"launched", result.probes_launched},
                 {"delivered", result.probes_delivered},
                 {"dropped", result.probes_dropped}};
  j["ack_complete"] = result.ack.complete();
  write_text(a.out, j.dump(2) + "\n", out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Percolation routing and fountain-coded transport simulator", "percsim"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run one scenario and write its metrics");
  run_cmd->add_option("-c,--config", run.config, "Scenario config (JSON)")->required();
  run_cmd->add_option("--seed", run.seed, "Override the config seed");
  run_cmd->add_option("-o,--out", run.out, "Metrics file (stdout when omitted)");
  run_cmd->add_option("--format", run.format, "json or csv (default: from --out extension)");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a scenario over a seed range and aggregate");
  sweep_cmd->add_option("-c,--config", sweep.config, "Scenario config (JSON)")->required();
  sweep_cmd->add_option("--seeds", sweep.seeds, "Inclusive seed range A..B")->required();
  sweep_cmd->add_option("-j,--jobs", sweep.jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("-o,--out", sweep.out, "Output file (stdout when omitted)");
  sweep_cmd->add_option("--format", sweep.format, "json or csv (default: from --out extension)");

  EncodeArgs enc;
  auto* enc_cmd = app.add_subcommand("encode", "Fountain-encode a file");
  enc_cmd->add_option("-i,--in", enc.in, "Input file")->required();
  enc_cmd->add_option("-o,--out", enc.out, "Coded output file")->required();
  enc_cmd->add_option("-c,--config", enc.config, "Take K, M, c and delta from a config's code section");
  enc_cmd->add_option("-K", enc.k, "Source packets per frame (default 64)");
  enc_cmd->add_option("-M", enc.m, "Bytes per packet (default 64)");
  enc_cmd->add_option("--soliton-c", enc.c, "Robust soliton c");
  enc_cmd->add_option("--soliton-delta", enc.delta, "Robust soliton delta");
  enc_cmd->add_option("--extra", enc.extra, "Extra packets per frame beyond the decodable minimum");

  std::string dec_in, dec_out;
  auto* dec_cmd = app.add_subcommand("decode", "Decode a fountain-coded file");
  dec_cmd->add_option("-i,--in", dec_in, "Coded input file")->required();
  dec_cmd->add_option("-o,--out", dec_out, "Decoded output file")->required();

  RouteDumpArgs dump;
  auto* dump_cmd = app.add_subcommand("route-dump", "Run only the routing phase and print the route");
  dump_cmd->add_option("-c,--config", dump.config, "Scenario config (JSON)")->required();
  dump_cmd->add_option("--seed", dump.seed, "Override the config seed");
  dump_cmd->add_option("--source", dump.source, "Source node id");
  dump_cmd->add_option("--dest", dump.dest, "Destination node id");
  dump_cmd->add_option("-o,--out", dump.out, "Output file (stdout when omitted)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n" << app.help();
    return kExitConfigError;
  }

  try {
    if (*run_cmd) return cmd_run(run, out);
    if (*sweep_cmd) return cmd_sweep(sweep, out);
    if (*enc_cmd) return cmd_encode(enc, err);
    if (*dec_cmd) return cmd_decode(dec_in, dec_out, err);
    if (*dump_cmd) return cmd_route_dump(dump, out, err);
  } catch (const perc::Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.code()) {
      case perc::ErrorCode::kConfig:
      case perc::ErrorCode::kFormat:
      case perc::ErrorCode::kParameter:
      case perc::ErrorCode::kConstraintViolation:
        return kExitConfigError;
      default:
        return kExitScenarioFailure;
    }
  }
  return kExitConfigError;
}

}  // namespace percsim
