#pragma once

#include <vector>

#include "capcon/graph.hpp"
#include "capcon/scheduler.hpp"

// Experiment grid constants, kept in one place so every command and test
// draws the same defaults. All of them can be overridden by flags.
namespace capcon::defaults {

inline constexpr double kEpsilon = 1e-5;
inline constexpr long kMaxIterations = 4000;

inline const std::vector<int> kSweepNodeSizes = {20, 50, 100, 200, 300, 600};
inline const std::vector<int> kSweepTauBars = {1, 5, 10, 15, 20, 30};
inline constexpr int kSweepTrials = 10;
inline constexpr double kSweepDensity = 0.2;

inline const std::vector<int> kDcNodeSizes = {20, 200, 500, 1000, 5000};
inline constexpr int kDcHugeNodeSize = 10000;  // opt-in, see --include-huge
inline const std::vector<int> kDcTauBars = {1, 2, 3, 4, 5};
inline constexpr int kDcTrials = 5;
inline constexpr int kDcTargetDiameter = 2;

// Scan points for the strict-ordering breach study: (nodes, diameter,
// tau_bar). The 50-node case is scanned at both reported delays.
struct ViolationScanPoint {
  int nodes;
  int diameter;
  int tau_bar;
};
inline const std::vector<ViolationScanPoint> kViolationScanPoints = {
    {20, 5, 20}, {50, 4, 10}, {50, 4, 20}};
inline constexpr int kViolationSeeds = 50;
inline constexpr double kViolationDensity = 0.12;

inline constexpr std::uint64_t kMasterSeed = 1;

// Canonical small example: a directed 5-ring, the smallest strongly
// connected five-node digraph with diameter 4.
inline Digraph five_node_ring() {
  std::vector<std::pair<int, int>> edges;  // (receiver, sender)
  for (int i = 1; i <= 5; ++i) edges.emplace_back(i % 5 + 1, i);
  return Digraph(5, edges);
}

// Matching workload: unit capacities, no occupancy, arrivals 1..5.
inline std::vector<NodeResources> five_node_problem() {
  std::vector<NodeResources> resources(5);
  for (int i = 0; i < 5; ++i) {
    resources[static_cast<std::size_t>(i)].clock_sum = 1.0;
    resources[static_cast<std::size_t>(i)].horizon = 1.0;
    resources[static_cast<std::size_t>(i)].occupied = 0.0;
    resources[static_cast<std::size_t>(i)].incoming = static_cast<double>(i + 1);
  }
  return resources;
}

}  // namespace capcon::defaults
