#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace capcon {

// Per-node compute budget over one optimization horizon. Capacity is derived
// from the clock sum so the pi = c * T_h invariant holds by construction.
struct NodeResources {
  double clock_sum = 0.0;  // cycles/second, summed over cores
  double horizon = 1.0;    // seconds
  double occupied = 0.0;   // cycles already committed in this horizon
  double incoming = 0.0;   // cycles arriving at this node before balancing

  double capacity() const { return clock_sum * horizon; }

  void validate() const {
    if (!(clock_sum > 0.0)) throw std::invalid_argument("NodeResources: clock_sum must be > 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("NodeResources: horizon must be > 0");
    if (occupied < 0.0 || occupied > capacity())
      throw std::invalid_argument("NodeResources: occupied outside [0, capacity]");
    if (incoming < 0.0) throw std::invalid_argument("NodeResources: incoming must be >= 0");
  }
};

struct JobSpec {
  double demand = 0.0;  // cycles
  int arrival_order = 0;
};

struct RejectedJob {
  JobSpec job;
  std::string reason;
};

struct AdmissionResult {
  std::vector<JobSpec> admitted;
  std::vector<RejectedJob> rejected;
  double admitted_total = 0.0;
};

inline double availability(const NodeResources& r) {
  r.validate();
  return r.capacity() - r.occupied;
}

// First-come, first-scheduled admission: each job is taken iff its demand
// fits in the remaining availability. Later, smaller jobs may still fit
// after a rejection.
inline AdmissionResult admit_jobs(const std::vector<JobSpec>& jobs_in_order,
                                  double total_available) {
  AdmissionResult result;
  double remaining = total_available;
  for (const JobSpec& job : jobs_in_order) {
    if (!(job.demand > 0.0))
      throw std::invalid_argument("admit_jobs: job demand must be > 0");
    if (job.demand <= remaining) {
      result.admitted.push_back(job);
      result.admitted_total += job.demand;
      remaining -= job.demand;
    } else {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "demand %.17g exceeds remaining availability %.17g", job.demand,
                    remaining);
      result.rejected.push_back({job, buf});
    }
  }
  return result;
}

// Quadratic cost of running node i at utilization fraction z:
// (1/2) * pi * (z - (rho_i + u_i) / pi)^2. Zero exactly at the vertex.
inline double local_cost(double z, const NodeResources& r, double rho_i) {
  const double pi = r.capacity();
  if (!(pi > 0.0)) throw std::invalid_argument("local_cost: capacity must be > 0");
  const double vertex = (rho_i + r.occupied) / pi;
  const double d = z - vertex;
  return 0.5 * pi * d * d;
}

// Closed-form minimizer of the summed cost:
// z* = (total admitted demand + total occupied) / total capacity.
inline double optimal_fraction(std::span<const NodeResources> resources,
                               std::span<const double> admitted_demand) {
  if (resources.size() != admitted_demand.size())
    throw std::invalid_argument("optimal_fraction: one demand entry per node required");
  double rho = 0.0, u_tot = 0.0, pi_max = 0.0;
  for (std::size_t i = 0; i < resources.size(); ++i) {
    resources[i].validate();
    if (admitted_demand[i] < 0.0)
      throw std::invalid_argument("optimal_fraction: demand must be >= 0");
    rho += admitted_demand[i];
    u_tot += resources[i].occupied;
    pi_max += resources[i].capacity();
  }
  if (!(pi_max > 0.0)) throw std::invalid_argument("optimal_fraction: zero total capacity");
  return (rho + u_tot) / pi_max;
}

// Workload assignment for the common utilization fraction z*.
struct ScheduleSolution {
  double z_star = 0.0;
  std::vector<double> workloads;
  // Nodes whose raw assignment came out negative (already above the balanced
  // utilization). When non-empty the exact balance condition is infeasible;
  // the reported workloads clamp these nodes to zero and re-balance the rest.
  // This clamping is an extension beyond the closed-form model.
  std::vector<int> clamped_nodes;  // 1-based
  bool balanced = true;
  double assigned_total = 0.0;
};

inline ScheduleSolution optimal_workloads(double z_star,
                                          std::span<const NodeResources> resources) {
  const std::size_t n = resources.size();
  ScheduleSolution sol;
  sol.z_star = z_star;
  sol.workloads.assign(n, 0.0);

  double pi_total = 0.0, u_total = 0.0;
  for (const NodeResources& r : resources) {
    r.validate();
    pi_total += r.capacity();
    u_total += r.occupied;
  }
  const double rho = z_star * pi_total - u_total;  // total demand implied by z*

  std::vector<char> active(n, 1);
  double z_active = z_star;
  for (std::size_t pass = 0; pass < n + 1; ++pass) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      const double w = z_active * resources[i].capacity() - resources[i].occupied;
      if (w < 0.0) {
        active[i] = 0;
        sol.clamped_nodes.push_back(static_cast<int>(i) + 1);
        changed = true;
      }
    }
    if (!changed) break;
    double pi_a = 0.0, u_a = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      pi_a += resources[i].capacity();
      u_a += resources[i].occupied;
    }
    if (!(pi_a > 0.0))
      throw std::invalid_argument("optimal_workloads: every node already above target utilization");
    z_active = (rho + u_a) / pi_a;
  }

  sol.balanced = sol.clamped_nodes.empty();
  for (std::size_t i = 0; i < n; ++i) {
    sol.workloads[i] = active[i] ? z_active * resources[i].capacity() - resources[i].occupied
                                 : 0.0;
    sol.assigned_total += sol.workloads[i];
  }
  std::sort(sol.clamped_nodes.begin(), sol.clamped_nodes.end());
  return sol;
}

// Protocol initial conditions: y carries arrivals plus occupancy, z carries
// capacity, so the consensus fixed point equals the optimal fraction.
inline std::pair<std::vector<double>, std::vector<double>> consensus_initial_conditions(
    std::span<const NodeResources> resources) {
  std::vector<double> init_y, init_z;
  init_y.reserve(resources.size());
  init_z.reserve(resources.size());
  for (const NodeResources& r : resources) {
    r.validate();
    init_y.push_back(r.incoming + r.occupied);
    init_z.push_back(r.capacity());
  }
  return {std::move(init_y), std::move(init_z)};
}

}  // namespace capcon
