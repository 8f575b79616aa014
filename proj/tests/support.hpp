#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "percolation/topology.hpp"

namespace testing {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(PERC_FIXTURE_DIR) / name; }
inline std::filesystem::path scenario(const std::string& name) { return std::filesystem::path(PERC_SCENARIO_DIR) / name; }

/// Letter names used by the lettered fixtures: A=0 ... U=20.
inline perc::NodeId L(char c) { return perc::NodeId{static_cast<std::uint32_t>(c - 'A')}; }

inline std::vector<perc::NodeId> letters(const std::string& s) {
  std::vector<perc::NodeId> out;
  for (char c : s) {
    if (c != '-') out.push_back(L(c));
  }
  return out;
}

inline std::vector<perc::NodeId> ids(std::initializer_list<std::uint32_t> values) {
  std::vector<perc::NodeId> out;
  for (auto v : values) out.push_back(perc::NodeId{v});
  return out;
}

inline perc::Graph load(const std::string& name) { return perc::load_edge_list_file(fixture(name)); }

}  // namespace testing
