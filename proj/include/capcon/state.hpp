#pragma once

#include <optional>
#include <stdexcept>

namespace capcon {

// Fold helpers for the extremum registers. nullopt stands for the +inf/-inf
// sentinels used before the first re-seed, so no floating infinity ever
// enters the arithmetic.
inline void fold_max(std::optional<double>& acc, const std::optional<double>& v) {
  if (v && (!acc || *v > *acc)) acc = v;
}

inline void fold_min(std::optional<double>& acc, const std::optional<double>& v) {
  if (v && (!acc || *v < *acc)) acc = v;
}

// Per-node protocol state. y carries workload units, z capacity units;
// ratio_max / ratio_min are the max-/min-consensus registers (M and m in the
// trace schema).
struct NodeState {
  double y = 0.0;
  double z = 0.0;
  std::optional<double> ratio_max;  // M
  std::optional<double> ratio_min;  // m
  bool flag = false;

  double mu() const { return y / z; }
};

// A weight-scaled protocol message in flight. payload_y/payload_z already
// include the sender's column weight. Extremum payloads carry the sender's
// round index so receivers can drop values that were re-seeded away; data
// payloads are never filtered because mass must be conserved.
struct InTransitMessage {
  int sender = 0;    // 1-based
  int receiver = 0;  // 1-based
  double payload_y = 0.0;
  double payload_z = 0.0;
  std::optional<double> payload_ratio_max;
  std::optional<double> payload_ratio_min;
  long sent_tick = 0;
  long deliver_tick = 0;
  long round = 0;
};

// Termination parameters: round_length is D for the synchronous algorithm
// and (1 + tau_bar) * D for the asynchronous one.
struct TerminationConfig {
  double epsilon = 1e-5;
  long round_length = 1;
  long max_iterations = 4000;

  void validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("TerminationConfig: epsilon must be > 0");
    if (round_length < 1)
      throw std::invalid_argument("TerminationConfig: round_length must be >= 1");
    if (max_iterations < 1)
      throw std::invalid_argument("TerminationConfig: max_iterations must be >= 1");
  }
};

}  // namespace capcon
