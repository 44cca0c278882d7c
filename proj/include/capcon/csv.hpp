#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "capcon/scheduler.hpp"
#include "capcon/trace.hpp"

namespace capcon {

inline constexpr const char* kTraceCsvHeader = "tick,node,y,z,mu,M,m,flag";
inline constexpr const char* kStatsCsvHeader =
    "trial_id,n,tau_bar,diameter,rounds,ticks,wall_time,min,max,mean,window";
inline constexpr const char* kViolationCsvHeader = "node,tick,direction,value,window_extremum";
inline constexpr const char* kSolutionCsvHeader = "node,capacity,u,w_star,utilization_fraction";
inline constexpr const char* kSweepPairCsvHeader =
    "n,tau_bar,trials,diameter,mean_ticks,mean_rounds,mean_wall_time,mean_window,all_converged";

namespace detail {

// Locale-independent, round-trippable double rendering.
inline void append_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

inline void append_extremum(std::string& out, const std::optional<double>& v,
                            const char* sentinel) {
  if (v)
    append_double(out, *v);
  else
    out += sentinel;
}

}  // namespace detail

// Per-tick trace rows. Unseeded extremum registers serialize as the literal
// sentinels "+inf" (M) and "-inf" (m).
inline std::string trace_csv(const SimTrace& trace) {
  std::string out = kTraceCsvHeader;
  out += '\n';
  for (const TickSnapshot& snap : trace.snapshots) {
    for (std::size_t i = 0; i < snap.states.size(); ++i) {
      const NodeState& s = snap.states[i];
      out += std::to_string(snap.tick);
      out += ',';
      out += std::to_string(i + 1);
      out += ',';
      detail::append_double(out, s.y);
      out += ',';
      detail::append_double(out, s.z);
      out += ',';
      detail::append_double(out, s.mu());
      out += ',';
      detail::append_extremum(out, s.ratio_max, "+inf");
      out += ',';
      detail::append_extremum(out, s.ratio_min, "-inf");
      out += ',';
      out += s.flag ? '1' : '0';
      out += '\n';
    }
  }
  return out;
}

struct TrialStats {
  long trial_id = 0;
  int n = 0;
  int tau_bar = 0;
  int diameter = 0;
  long rounds = 0;
  long ticks = 0;
  double wall_time = 0.0;
  ConvergeStats converge;
  bool converged = false;
};

inline std::string stats_csv_row(const TrialStats& s) {
  std::string out;
  out += std::to_string(s.trial_id);
  out += ',';
  out += std::to_string(s.n);
  out += ',';
  out += std::to_string(s.tau_bar);
  out += ',';
  out += std::to_string(s.diameter);
  out += ',';
  out += std::to_string(s.rounds);
  out += ',';
  out += std::to_string(s.ticks);
  out += ',';
  detail::append_double(out, s.wall_time);
  out += ',';
  if (s.converge.valid) {
    detail::append_double(out, s.converge.min);
    out += ',';
    detail::append_double(out, s.converge.max);
    out += ',';
    detail::append_double(out, s.converge.mean);
    out += ',';
    detail::append_double(out, s.converge.window);
  } else {
    out += ",,,";  // stats absent on a non-converged trial
  }
  out += '\n';
  return out;
}

inline std::string stats_csv(std::span<const TrialStats> rows) {
  std::string out = kStatsCsvHeader;
  out += '\n';
  for (const TrialStats& s : rows) out += stats_csv_row(s);
  return out;
}

inline std::string violations_csv(std::span<const ViolationRecord> records) {
  std::string out = kViolationCsvHeader;
  out += '\n';
  for (const ViolationRecord& rec : records) {
    out += std::to_string(rec.node);
    out += ',';
    out += std::to_string(rec.tick);
    out += ',';
    out += rec.direction == ViolationDirection::kAboveMax ? "above-max" : "below-min";
    out += ',';
    detail::append_double(out, rec.observed);
    out += ',';
    detail::append_double(out, rec.window_extremum);
    out += '\n';
  }
  return out;
}

inline std::string solution_csv(std::span<const NodeResources> resources,
                                const ScheduleSolution& sol) {
  if (resources.size() != sol.workloads.size())
    throw std::invalid_argument("solution_csv: resource/workload size mismatch");
  std::string out = kSolutionCsvHeader;
  out += '\n';
  for (std::size_t i = 0; i < resources.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',';
    detail::append_double(out, resources[i].capacity());
    out += ',';
    detail::append_double(out, resources[i].occupied);
    out += ',';
    detail::append_double(out, sol.workloads[i]);
    out += ',';
    detail::append_double(out, (sol.workloads[i] + resources[i].occupied) /
                                   resources[i].capacity());
    out += '\n';
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_text_file: cannot open " + path);
  out << content;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_text_file: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace capcon
