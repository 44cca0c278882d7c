#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "capcon/state.hpp"

namespace capcon {

// Network state at the start of one tick, after any round-boundary
// processing. mass_y/mass_z add the payload still in transit, so they stay
// constant over the whole run.
struct TickSnapshot {
  long tick = 0;
  std::vector<NodeState> states;
  double mass_y = 0.0;
  double mass_z = 0.0;
};

// Extremum registers observed at a round boundary, before the re-seed.
// These are the values the termination certificate is computed from.
struct BoundaryRecord {
  long tick = 0;
  std::vector<std::optional<double>> ratio_max_pre;
  std::vector<std::optional<double>> ratio_min_pre;
  std::vector<double> mu;
  std::vector<bool> passed;
};

struct ConvergeStats {
  bool valid = false;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double window = 0.0;
};

struct SimTrace {
  int node_count = 0;
  int tau_bar = 0;
  int diameter = 0;
  long round_length = 0;

  bool converged = false;
  long termination_tick = -1;
  long rounds = 0;
  long ticks_run = 0;

  bool dense = true;               // false when downsampled to round boundaries
  bool downsample_forced = false;  // memory guard tripped during the run
  std::vector<TickSnapshot> snapshots;
  std::vector<BoundaryRecord> boundaries;

  // First round boundary at which each node's certificate passed; -1 if never.
  std::vector<long> node_converge_tick;
  std::vector<double> final_ratios;

  // Message accounting for the delivery-completeness invariant.
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_delivered = 0;
  std::uint64_t pending_at_end = 0;
  long max_pending_deliver_tick = -1;
};

enum class ViolationDirection { kAboveMax, kBelowMin };

// One breach of the strict-ordering claim: a value that was strictly inside
// the delayed-horizon envelope later crossed it.
struct ViolationRecord {
  int node = 0;  // 1-based
  long tick = 0;
  int tau_bar = 0;
  double observed = 0.0;
  double window_extremum = 0.0;
  ViolationDirection direction = ViolationDirection::kAboveMax;
};

}  // namespace capcon
