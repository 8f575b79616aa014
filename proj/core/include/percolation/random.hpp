#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace perc {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_words(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  for (auto w : words) h = mix64(h ^ mix64(w));
  return h;
}

/// Maps 64 random bits onto [0, 1) using the top 53 bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Sequential seeded stream. The engine is std::mt19937_64 (output is fixed by the
/// standard); the range reductions below are ours so results are identical across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  double unit() { return to_unit(engine_()); }

  bool bernoulli(double p) { return p > 0.0 && unit() < p; }

 private:
  std::mt19937_64 engine_;
};

/// Counter-based stream: value i is a pure function of (key, i), so two parties
/// holding the same key regenerate the same sequence without shared state.
class CounterStream {
 public:
  explicit CounterStream(std::uint64_t key) : key_(mix64(key)) {}

  std::uint64_t next() noexcept { return mix64(key_ ^ mix64(++counter_)); }

  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % bound;
  }

  double unit() noexcept { return to_unit(next()); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace perc
