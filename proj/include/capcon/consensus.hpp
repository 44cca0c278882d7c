#pragma once

#include <cmath>
#include <cstdlib>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "capcon/graph.hpp"
#include "capcon/state.hpp"
#include "capcon/trace.hpp"

namespace capcon {

inline TerminationConfig make_sync_config(const Digraph& g, double epsilon,
                                          long max_iterations) {
  TerminationConfig cfg;
  cfg.epsilon = epsilon;
  cfg.round_length = diameter(g);
  cfg.round_length = cfg.round_length < 1 ? 1 : cfg.round_length;
  cfg.max_iterations = max_iterations;
  cfg.validate();
  return cfg;
}

inline TerminationConfig make_async_config(const Digraph& g, int tau_bar,
                                           double epsilon, long max_iterations) {
  TerminationConfig cfg;
  cfg.epsilon = epsilon;
  long d = diameter(g);
  d = d < 1 ? 1 : d;
  cfg.round_length = (1 + static_cast<long>(tau_bar)) * d;
  cfg.max_iterations = max_iterations;
  cfg.validate();
  return cfg;
}

// One synchronous push-sum step over the whole network: y <- P y, z <- P z.
// The self term is applied first and in-flows are accumulated in ascending
// sender order, the same order the asynchronous engine folds deliveries, so
// a zero-delay run reproduces this bit for bit.
inline void sync_ratio_step(std::vector<NodeState>& states, const WeightMatrix& w) {
  const int n = w.size();
  if (static_cast<int>(states.size()) != n)
    throw std::invalid_argument("sync_ratio_step: state/weight dimension mismatch");
  std::vector<double> new_y(states.size());
  std::vector<double> new_z(states.size());
  for (int j = 0; j < n; ++j) {
    const double wj = w.column_value(j);
    new_y[static_cast<std::size_t>(j)] = wj * states[static_cast<std::size_t>(j)].y;
    new_z[static_cast<std::size_t>(j)] = wj * states[static_cast<std::size_t>(j)].z;
  }
  for (int j = 0; j < n; ++j) {
    const double wj = w.column_value(j);
    for (int l : w.column_rows(j)) {
      if (l == j) continue;
      new_y[static_cast<std::size_t>(l)] += wj * states[static_cast<std::size_t>(j)].y;
      new_z[static_cast<std::size_t>(l)] += wj * states[static_cast<std::size_t>(j)].z;
    }
  }
  for (int j = 0; j < n; ++j) {
    states[static_cast<std::size_t>(j)].y = new_y[static_cast<std::size_t>(j)];
    states[static_cast<std::size_t>(j)].z = new_z[static_cast<std::size_t>(j)];
  }
}

// One synchronous max-/min-consensus step: each node folds the registers of
// its in-neighbors and itself.
inline void sync_minmax_step(std::vector<NodeState>& states, const Digraph& g) {
  const int n = g.node_count();
  if (static_cast<int>(states.size()) != n)
    throw std::invalid_argument("sync_minmax_step: state/graph dimension mismatch");
  std::vector<std::optional<double>> new_max(states.size());
  std::vector<std::optional<double>> new_min(states.size());
  for (int j = 0; j < n; ++j) {
    std::optional<double> hi = states[static_cast<std::size_t>(j)].ratio_max;
    std::optional<double> lo = states[static_cast<std::size_t>(j)].ratio_min;
    for (int i : g.in_adj(j)) {
      fold_max(hi, states[static_cast<std::size_t>(i)].ratio_max);
      fold_min(lo, states[static_cast<std::size_t>(i)].ratio_min);
    }
    new_max[static_cast<std::size_t>(j)] = hi;
    new_min[static_cast<std::size_t>(j)] = lo;
  }
  for (int j = 0; j < n; ++j) {
    states[static_cast<std::size_t>(j)].ratio_max = new_max[static_cast<std::size_t>(j)];
    states[static_cast<std::size_t>(j)].ratio_min = new_min[static_cast<std::size_t>(j)];
  }
}

enum class BoundaryDecision { kContinue, kTerminate };

// Round-boundary certificate check for one node. Terminates iff
// |M - m| < epsilon with both registers seeded; otherwise re-seeds both to
// the current ratio and continues. Only valid at a positive multiple of the
// round length. Unseeded registers are tolerated at the first boundary
// (nothing has been folded yet) and are an internal-state error afterwards.
inline BoundaryDecision round_boundary_check(NodeState& state,
                                             const TerminationConfig& cfg, long tick) {
  if (tick <= 0 || tick % cfg.round_length != 0)
    throw std::logic_error("round_boundary_check: not a round boundary tick");
  const bool seeded = state.ratio_max.has_value() && state.ratio_min.has_value();
  if (!seeded && tick > cfg.round_length)
    throw std::logic_error("round_boundary_check: unseeded extremum register past the first boundary");
  if (seeded && std::abs(*state.ratio_max - *state.ratio_min) < cfg.epsilon) {
    state.flag = true;
    return BoundaryDecision::kTerminate;
  }
  const double mu = state.mu();
  state.ratio_max = mu;
  state.ratio_min = mu;
  return BoundaryDecision::kContinue;
}

// Fold delivered extremum payloads into a node's registers. Order- and
// duplicate-insensitive; callers decide which messages are eligible.
inline void async_minmax_update(NodeState& state,
                                std::span<const InTransitMessage> delivered) {
  for (const InTransitMessage& msg : delivered) {
    fold_max(state.ratio_max, msg.payload_ratio_max);
    fold_min(state.ratio_min, msg.payload_ratio_min);
  }
}

// One asynchronous update for node `node` (0-based). Outbound messages are
// computed from the pre-update state, exactly as the protocol broadcasts
// before it folds. The caller must have materialized every delivery for this
// tick beforehand (including zero-delay sends) and stamps deliver ticks on
// the returned messages. Extremum payloads from earlier rounds are dropped;
// data payloads are always folded.
inline std::vector<InTransitMessage> async_ratio_step(
    int node, std::span<const InTransitMessage> delivered, NodeState& state,
    const Digraph& g, const WeightMatrix& w, long tick, long current_round) {
  for (const InTransitMessage& msg : delivered) {
    if (msg.receiver != node + 1 || msg.deliver_tick != tick)
      throw std::invalid_argument(
          "async_ratio_step: delivered message violates the simulator contract");
  }
  const double wj = w.column_value(node);
  std::vector<InTransitMessage> outbound;
  outbound.reserve(g.out_adj(node).size());
  for (int l : g.out_adj(node)) {
    InTransitMessage msg;
    msg.sender = node + 1;
    msg.receiver = l + 1;
    msg.payload_y = wj * state.y;
    msg.payload_z = wj * state.z;
    msg.payload_ratio_max = state.ratio_max;
    msg.payload_ratio_min = state.ratio_min;
    msg.sent_tick = tick;
    msg.deliver_tick = tick;
    msg.round = current_round;
    outbound.push_back(msg);
  }
  state.y *= wj;
  state.z *= wj;
  for (const InTransitMessage& msg : delivered) {
    state.y += msg.payload_y;
    state.z += msg.payload_z;
    if (msg.round == current_round) {
      fold_max(state.ratio_max, msg.payload_ratio_max);
      fold_min(state.ratio_min, msg.payload_ratio_min);
    }
  }
  return outbound;
}

// Synchronous finite-time ratio consensus (round length = diameter).
// Runs until every node's certificate passes at the same boundary or the
// iteration budget is exhausted; a non-converged trace is returned rather
// than thrown.
inline SimTrace run_sync_finite_time(const Digraph& g,
                                     const std::vector<double>& init_y,
                                     const std::vector<double>& init_z,
                                     const TerminationConfig& cfg) {
  const int n = g.node_count();
  cfg.validate();
  if (static_cast<int>(init_y.size()) != n || static_cast<int>(init_z.size()) != n)
    throw std::invalid_argument("run_sync_finite_time: initial condition size mismatch");
  if (!is_strongly_connected(g))
    throw std::invalid_argument("run_sync_finite_time: digraph must be strongly connected");
  for (double z : init_z)
    if (!(z > 0.0))
      throw std::invalid_argument("run_sync_finite_time: init_z entries must be > 0");
  {
    long d = diameter(g);
    d = d < 1 ? 1 : d;
    if (cfg.round_length != d)
      throw std::invalid_argument("run_sync_finite_time: round_length must equal the diameter");
  }

  const WeightMatrix w = build_weights(g);
  SimTrace trace;
  trace.node_count = n;
  trace.tau_bar = 0;
  trace.diameter = static_cast<int>(cfg.round_length);
  trace.round_length = cfg.round_length;
  trace.node_converge_tick.assign(static_cast<std::size_t>(n), -1);

  std::vector<NodeState> states(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    states[static_cast<std::size_t>(j)].y = init_y[static_cast<std::size_t>(j)];
    states[static_cast<std::size_t>(j)].z = init_z[static_cast<std::size_t>(j)];
  }

  auto snapshot = [&](long tick) {
    TickSnapshot snap;
    snap.tick = tick;
    snap.states = states;
    double mass_y = 0.0, mass_z = 0.0;
    for (const NodeState& s : states) {
      mass_y += s.y;
      mass_z += s.z;
    }
    snap.mass_y = mass_y;
    snap.mass_z = mass_z;
    trace.snapshots.push_back(std::move(snap));
  };

  long k = 0;
  while (true) {
    if (k > 0 && k % cfg.round_length == 0) {
      BoundaryRecord rec;
      rec.tick = k;
      rec.mu.reserve(static_cast<std::size_t>(n));
      bool all_pass = true;
      for (int j = 0; j < n; ++j) {
        NodeState& s = states[static_cast<std::size_t>(j)];
        rec.ratio_max_pre.push_back(s.ratio_max);
        rec.ratio_min_pre.push_back(s.ratio_min);
        rec.mu.push_back(s.mu());
        bool passed = false;
        if (!s.flag) {
          passed = round_boundary_check(s, cfg, k) == BoundaryDecision::kTerminate;
          if (passed && trace.node_converge_tick[static_cast<std::size_t>(j)] < 0)
            trace.node_converge_tick[static_cast<std::size_t>(j)] = k;
        } else {
          passed = true;
        }
        rec.passed.push_back(passed);
        all_pass = all_pass && passed;
      }
      trace.boundaries.push_back(std::move(rec));
      if (all_pass) {
        trace.converged = true;
        trace.termination_tick = k;
        trace.rounds = k / cfg.round_length;
        trace.ticks_run = k;
        snapshot(k);
        break;
      }
    }
    if (k >= cfg.max_iterations) {
      trace.ticks_run = k;
      trace.rounds = k / cfg.round_length;
      snapshot(k);
      break;
    }
    snapshot(k);
    sync_ratio_step(states, w);
    sync_minmax_step(states, g);
    ++k;
  }

  trace.final_ratios.reserve(static_cast<std::size_t>(n));
  for (const NodeState& s : states) trace.final_ratios.push_back(s.mu());
  return trace;
}

}  // namespace capcon
