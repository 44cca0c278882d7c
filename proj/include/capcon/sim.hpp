#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <utility>
#include <vector>

#include "capcon/consensus.hpp"
#include "capcon/delay_model.hpp"
#include "capcon/graph.hpp"
#include "capcon/state.hpp"
#include "capcon/trace.hpp"

namespace capcon {

struct TraceOptions {
  bool dense = true;
  // When dense snapshots would exceed this budget the run degrades to
  // round-boundary snapshots and flags the trace.
  std::size_t memory_guard_bytes = 512ull << 20;
};

// Asynchronous finite-time ratio consensus on a shared integer tick axis.
// Per tick: round-boundary bookkeeping, then every unflagged node broadcasts
// weight-scaled payloads with per-link sampled delays, then all messages due
// this tick are materialized and folded. Deterministic for fixed
// (graph, initial conditions, delay model, config).
inline SimTrace run_trial(const Digraph& g, const std::vector<double>& init_y,
                          const std::vector<double>& init_z, const DelayModel& delays,
                          const TerminationConfig& cfg, const TraceOptions& opts = {}) {
  const int n = g.node_count();
  cfg.validate();
  if (static_cast<int>(init_y.size()) != n || static_cast<int>(init_z.size()) != n)
    throw std::invalid_argument("run_trial: initial condition size mismatch");
  if (!is_strongly_connected(g))
    throw std::invalid_argument("run_trial: digraph must be strongly connected");
  for (double z : init_z)
    if (!(z > 0.0)) throw std::invalid_argument("run_trial: init_z entries must be > 0");

  const int tau_bar = delays.tau_bar;
  long d = diameter(g);
  d = d < 1 ? 1 : d;
  if (cfg.round_length != (1 + static_cast<long>(tau_bar)) * d)
    throw std::invalid_argument(
        "run_trial: round_length must equal (1 + tau_bar) * diameter");

  const WeightMatrix w = build_weights(g);
  SimTrace trace;
  trace.node_count = n;
  trace.tau_bar = tau_bar;
  trace.diameter = static_cast<int>(d);
  trace.round_length = cfg.round_length;
  trace.dense = opts.dense;
  trace.node_converge_tick.assign(static_cast<std::size_t>(n), -1);

  std::vector<NodeState> states(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    states[static_cast<std::size_t>(j)].y = init_y[static_cast<std::size_t>(j)];
    states[static_cast<std::size_t>(j)].z = init_z[static_cast<std::size_t>(j)];
  }

  // Ring of delivery buckets: a message sent at tick k with delay t lands in
  // bucket (k + t) mod (tau_bar + 1); slots never collide because delays are
  // capped at tau_bar.
  std::vector<std::vector<InTransitMessage>> buckets(static_cast<std::size_t>(tau_bar) + 1);
  double pending_y = 0.0, pending_z = 0.0;
  std::uint64_t pending_count = 0;

  std::size_t snapshot_bytes = 0;
  const std::size_t bytes_per_snapshot =
      sizeof(TickSnapshot) + static_cast<std::size_t>(n) * sizeof(NodeState);

  auto snapshot = [&](long tick, bool boundary) {
    if (!trace.dense && !boundary && tick != 0) return;
    if (trace.dense && snapshot_bytes + bytes_per_snapshot > opts.memory_guard_bytes) {
      std::vector<TickSnapshot> kept;
      for (TickSnapshot& s : trace.snapshots)
        if (s.tick == 0 || s.tick % cfg.round_length == 0) kept.push_back(std::move(s));
      trace.snapshots = std::move(kept);
      snapshot_bytes = trace.snapshots.size() * bytes_per_snapshot;
      trace.dense = false;
      trace.downsample_forced = true;
      if (!boundary && tick != 0) return;
    }
    TickSnapshot snap;
    snap.tick = tick;
    snap.states = states;
    double mass_y = pending_y, mass_z = pending_z;
    for (const NodeState& s : states) {
      mass_y += s.y;
      mass_z += s.z;
    }
    snap.mass_y = mass_y;
    snap.mass_z = mass_z;
    trace.snapshots.push_back(std::move(snap));
    snapshot_bytes += bytes_per_snapshot;
  };

  long k = 0;
  while (true) {
    const long round = k / cfg.round_length;
    if (k > 0 && k % cfg.round_length == 0) {
      BoundaryRecord rec;
      rec.tick = k;
      bool all_pass = true;
      for (int j = 0; j < n; ++j) {
        NodeState& s = states[static_cast<std::size_t>(j)];
        rec.ratio_max_pre.push_back(s.ratio_max);
        rec.ratio_min_pre.push_back(s.ratio_min);
        rec.mu.push_back(s.mu());
        bool passed = s.flag;
        if (!s.flag) {
          passed = round_boundary_check(s, cfg, k) == BoundaryDecision::kTerminate;
          if (passed && trace.node_converge_tick[static_cast<std::size_t>(j)] < 0)
            trace.node_converge_tick[static_cast<std::size_t>(j)] = k;
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
        snapshot(k, true);
        break;
      }
    }
    if (k >= cfg.max_iterations) {
      trace.ticks_run = k;
      trace.rounds = k / cfg.round_length;
      snapshot(k, k % cfg.round_length == 0);
      break;
    }
    snapshot(k, k % cfg.round_length == 0);

    // Broadcast phase: payloads use the pre-update state, then the sender
    // keeps only its diagonal share.
    for (int j = 0; j < n; ++j) {
      NodeState& s = states[static_cast<std::size_t>(j)];
      if (s.flag) continue;
      const double wj = w.column_value(j);
      for (int l : g.out_adj(j)) {
        const int delay = sample_delay(delays, l + 1, j + 1, k);
        const long deliver = k + delay;
        InTransitMessage msg;
        msg.sender = j + 1;
        msg.receiver = l + 1;
        msg.payload_y = wj * s.y;
        msg.payload_z = wj * s.z;
        msg.payload_ratio_max = s.ratio_max;
        msg.payload_ratio_min = s.ratio_min;
        msg.sent_tick = k;
        msg.deliver_tick = deliver;
        msg.round = round;
        pending_y += msg.payload_y;
        pending_z += msg.payload_z;
        ++pending_count;
        ++trace.messages_sent;
        buckets[static_cast<std::size_t>(deliver % (tau_bar + 1))].push_back(msg);
      }
      s.y *= wj;
      s.z *= wj;
    }

    // Delivery phase: fold everything due this tick. Flagged nodes still
    // absorb data mass but their registers stay frozen.
    std::vector<InTransitMessage>& due = buckets[static_cast<std::size_t>(k % (tau_bar + 1))];
    for (const InTransitMessage& msg : due) {
      NodeState& s = states[static_cast<std::size_t>(msg.receiver - 1)];
      s.y += msg.payload_y;
      s.z += msg.payload_z;
      pending_y -= msg.payload_y;
      pending_z -= msg.payload_z;
      --pending_count;
      ++trace.messages_delivered;
      if (!s.flag && msg.round == round) {
        fold_max(s.ratio_max, msg.payload_ratio_max);
        fold_min(s.ratio_min, msg.payload_ratio_min);
      }
    }
    due.clear();
    ++k;
  }

  trace.pending_at_end = pending_count;
  for (const auto& bucket : buckets)
    for (const InTransitMessage& msg : bucket)
      trace.max_pending_deliver_tick = std::max(trace.max_pending_deliver_tick, msg.deliver_tick);

  trace.final_ratios.reserve(static_cast<std::size_t>(n));
  for (const NodeState& s : states) trace.final_ratios.push_back(s.mu());
  return trace;
}

// Asynchronous finite-time termination run with a dense trace.
inline SimTrace run_async_finite_time(const Digraph& g, const std::vector<double>& init_y,
                                      const std::vector<double>& init_z,
                                      const DelayModel& delays, const TerminationConfig& cfg) {
  return run_trial(g, init_y, init_z, delays, cfg, TraceOptions{});
}

// Per-node first-success statistics over round boundaries.
inline ConvergeStats converge_stats(const SimTrace& trace) {
  ConvergeStats stats;
  if (!trace.converged) return stats;
  stats.valid = true;
  double lo = 0.0, hi = 0.0, sum = 0.0;
  bool first = true;
  for (long tick : trace.node_converge_tick) {
    const double t = static_cast<double>(tick);
    if (first) {
      lo = hi = t;
      first = false;
    } else {
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    sum += t;
  }
  stats.min = lo;
  stats.max = hi;
  stats.mean = sum / static_cast<double>(trace.node_converge_tick.size());
  stats.window = hi - lo;
  return stats;
}

// Breach detector for the strict-ordering claim over per-node series.
// values[t][i] is node i's value at tick t. A node strictly inside the
// horizon-[t - tau_bar, t] envelope arms at that envelope level; a later
// value strictly beyond an armed level is a breach and emits one record at
// the crossing tick.
inline std::vector<ViolationRecord> detect_violations_series(
    const std::vector<std::vector<double>>& values, int tau_bar) {
  std::vector<ViolationRecord> records;
  const std::size_t ticks = values.size();
  if (ticks == 0) return records;
  const std::size_t n = values[0].size();
  for (const auto& row : values)
    if (row.size() != n)
      throw std::invalid_argument("detect_violations_series: ragged value matrix");

  std::vector<double> tick_max(ticks), tick_min(ticks);
  for (std::size_t t = 0; t < ticks; ++t) {
    double hi = values[t][0], lo = values[t][0];
    for (double v : values[t]) {
      hi = std::max(hi, v);
      lo = std::min(lo, v);
    }
    tick_max[t] = hi;
    tick_min[t] = lo;
  }

  // Sliding max/min of the per-tick extrema over the trailing horizon.
  std::vector<double> horizon_max(ticks), horizon_min(ticks);
  std::deque<std::size_t> qmax, qmin;
  for (std::size_t t = 0; t < ticks; ++t) {
    while (!qmax.empty() && tick_max[qmax.back()] <= tick_max[t]) qmax.pop_back();
    qmax.push_back(t);
    while (!qmin.empty() && tick_min[qmin.back()] >= tick_min[t]) qmin.pop_back();
    qmin.push_back(t);
    if (t >= static_cast<std::size_t>(tau_bar) + 1) {
      const std::size_t expired = t - static_cast<std::size_t>(tau_bar) - 1;
      if (qmax.front() == expired) qmax.pop_front();
      if (qmin.front() == expired) qmin.pop_front();
    }
    horizon_max[t] = tick_max[qmax.front()];
    horizon_min[t] = tick_min[qmin.front()];
  }

  std::vector<char> armed_above(n, 0), armed_below(n, 0);
  std::vector<double> level_above(n, 0.0), level_below(n, 0.0);
  for (std::size_t t = 0; t < ticks; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double v = values[t][i];
      if (armed_above[i] && v > level_above[i]) {
        ViolationRecord rec;
        rec.node = static_cast<int>(i) + 1;
        rec.tick = static_cast<long>(t);
        rec.tau_bar = tau_bar;
        rec.observed = v;
        rec.window_extremum = level_above[i];
        rec.direction = ViolationDirection::kAboveMax;
        records.push_back(rec);
        armed_above[i] = 0;
      }
      if (armed_below[i] && v < level_below[i]) {
        ViolationRecord rec;
        rec.node = static_cast<int>(i) + 1;
        rec.tick = static_cast<long>(t);
        rec.tau_bar = tau_bar;
        rec.observed = v;
        rec.window_extremum = level_below[i];
        rec.direction = ViolationDirection::kBelowMin;
        records.push_back(rec);
        armed_below[i] = 0;
      }
      if (v < horizon_max[t]) {
        level_above[i] = armed_above[i] ? std::min(level_above[i], horizon_max[t])
                                        : horizon_max[t];
        armed_above[i] = 1;
      }
      if (v > horizon_min[t]) {
        level_below[i] = armed_below[i] ? std::max(level_below[i], horizon_min[t])
                                        : horizon_min[t];
        armed_below[i] = 1;
      }
    }
  }
  return records;
}

// Runs the breach detector over the ratio series of a dense trace.
inline std::vector<ViolationRecord> detect_violations(const SimTrace& trace, int tau_bar) {
  if (!trace.dense)
    throw std::invalid_argument("detect_violations: a dense trace is required");
  std::vector<std::vector<double>> values;
  values.reserve(trace.snapshots.size());
  for (const TickSnapshot& snap : trace.snapshots) {
    std::vector<double> row;
    row.reserve(snap.states.size());
    for (const NodeState& s : snap.states) row.push_back(s.mu());
    values.push_back(std::move(row));
  }
  return detect_violations_series(values, tau_bar);
}

}  // namespace capcon
