#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>

namespace perc {

/// Node identity. Name and address are the same value.
struct NodeId {
  std::uint32_t value = 0;

  constexpr NodeId() = default;
  constexpr explicit NodeId(std::uint32_t v) : value(v) {}

  friend constexpr auto operator<=>(NodeId, NodeId) = default;
  friend std::ostream& operator<<(std::ostream& os, NodeId id) { return os << id.value; }
};

/// Link capacity in packets per tick.
using Bandwidth = std::uint32_t;

/// Simulation clock.
using Tick = std::int64_t;

}  // namespace perc

template <>
struct std::hash<perc::NodeId> {
  std::size_t operator()(perc::NodeId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
