#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "capcon/csv.hpp"
#include "capcon/defaults.hpp"
#include "capcon/delay_model.hpp"
#include "capcon/graph.hpp"
#include "capcon/io.hpp"
#include "capcon/scheduler.hpp"
#include "capcon/sim.hpp"

namespace capcon {

enum class Mode { kSingle, kSweep, kDcScale, kViolations };

struct GraphParams {
  double density = defaults::kSweepDensity;
  std::optional<int> target_diameter_max;
};

struct ExperimentConfig {
  Mode mode = Mode::kSingle;
  std::vector<int> node_sizes;
  std::vector<int> tau_bars;
  int trials_per_pair = 1;
  double epsilon = defaults::kEpsilon;
  long max_iterations = defaults::kMaxIterations;
  std::uint64_t master_seed = defaults::kMasterSeed;
  std::string out_dir = "out";
  GraphParams graph;
  bool downsample = false;
  bool include_huge = false;
  int threads = 0;  // 0 picks a small pool automatically
  std::string problem_file;
  std::string graph_file;

  void validate() const {
    if (node_sizes.empty()) throw std::invalid_argument("config field 'nodes' must be non-empty");
    if (tau_bars.empty()) throw std::invalid_argument("config field 'tau-bar' must be non-empty");
    for (int n : node_sizes)
      if (n < 1) throw std::invalid_argument("config field 'nodes' entries must be >= 1");
    for (int t : tau_bars)
      if (t < 0) throw std::invalid_argument("config field 'tau-bar' entries must be >= 0");
    if (trials_per_pair < 1) throw std::invalid_argument("config field 'trials' must be >= 1");
    if (!(epsilon > 0.0)) throw std::invalid_argument("config field 'epsilon' must be > 0");
    if (max_iterations < 1) throw std::invalid_argument("config field 'max-iters' must be >= 1");
    if (!(graph.density > 0.0) || graph.density > 1.0)
      throw std::invalid_argument("config field 'density' must be in (0, 1]");
    if (out_dir.empty()) throw std::invalid_argument("config field 'out' must be non-empty");
  }
};

// Per-trial seed derivation: reproducible per grid cell and re-runnable in
// isolation.
inline std::uint64_t trial_seed(std::uint64_t master, int n, int tau_bar, int trial_index) {
  return mix_seed(master, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(tau_bar),
                           static_cast<std::uint64_t>(trial_index)});
}

// Random workload instance: heterogeneous clocks, partial occupancy, and a
// total demand well inside the available headroom, split unevenly across
// nodes so the initial ratios disagree.
inline std::vector<NodeResources> make_random_problem(int n, std::uint64_t seed) {
  SplitMix rng(mix_seed(seed, {0x70726f62ULL}));
  std::vector<NodeResources> resources(static_cast<std::size_t>(n));
  double avail = 0.0;
  for (NodeResources& r : resources) {
    r.clock_sum = rng.next_in(1.0e9, 4.0e9);
    r.horizon = 1.0;
    r.occupied = r.capacity() * rng.next_in(0.0, 0.5);
    avail += r.capacity() - r.occupied;
  }
  const double demand_total = avail * rng.next_in(0.2, 0.6);
  std::vector<double> share(static_cast<std::size_t>(n));
  double share_sum = 0.0;
  for (double& s : share) {
    s = rng.next_unit();
    share_sum += s;
  }
  for (int i = 0; i < n; ++i)
    resources[static_cast<std::size_t>(i)].incoming =
        demand_total * share[static_cast<std::size_t>(i)] / share_sum;
  return resources;
}

struct TrialOutcome {
  SimTrace trace;
  TrialStats stats;
};

inline TrialOutcome run_problem_trial(const Digraph& g,
                                      const std::vector<NodeResources>& resources,
                                      int tau_bar, double epsilon, long max_iterations,
                                      std::uint64_t delay_seed, bool dense) {
  auto [init_y, init_z] = consensus_initial_conditions(resources);
  const DelayModel delays = DelayModel::uniform(tau_bar, delay_seed);
  const TerminationConfig cfg = make_async_config(g, tau_bar, epsilon, max_iterations);
  TraceOptions opts;
  opts.dense = dense;
  const auto t0 = std::chrono::steady_clock::now();
  TrialOutcome out{run_trial(g, init_y, init_z, delays, cfg, opts), {}};
  const auto t1 = std::chrono::steady_clock::now();
  out.stats.n = out.trace.node_count;
  out.stats.tau_bar = tau_bar;
  out.stats.diameter = out.trace.diameter;
  out.stats.rounds = out.trace.rounds;
  out.stats.ticks = out.trace.converged ? out.trace.termination_tick : out.trace.ticks_run;
  out.stats.wall_time = std::chrono::duration<double>(t1 - t0).count();
  out.stats.converged = out.trace.converged;
  out.stats.converge = converge_stats(out.trace);
  return out;
}

namespace detail {

inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  int pool = threads;
  if (pool <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    pool = static_cast<int>(hw == 0 ? 2 : std::min(hw, 8u));
  }
  pool = std::min<int>(pool, static_cast<int>(count));
  if (pool <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(pool));
  for (int t = 0; t < pool; ++t) {
    workers.emplace_back([&]() {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (std::thread& w : workers) w.join();
}

inline double dc_density(int n) {
  const double d = 1.5 * std::sqrt(std::log(static_cast<double>(n)) / static_cast<double>(n));
  return std::min(0.5, std::max(d, 2.0 / static_cast<double>(n)));
}

}  // namespace detail

struct PairSummary {
  int n = 0;
  int tau_bar = 0;
  int trials = 0;
  double mean_diameter = 0.0;
  double mean_ticks = 0.0;
  double mean_rounds = 0.0;
  double mean_wall_time = 0.0;
  double mean_window = 0.0;
  bool all_converged = true;
};

struct SweepResult {
  std::vector<TrialStats> trials;
  std::vector<PairSummary> pairs;
  std::vector<std::string> skipped;  // "<n>/<tau>: reason"
  bool any_cap_hit = false;
};

inline std::string sweep_pairs_csv(std::span<const PairSummary> pairs) {
  std::string out = kSweepPairCsvHeader;
  out += '\n';
  for (const PairSummary& p : pairs) {
    out += std::to_string(p.n);
    out += ',';
    out += std::to_string(p.tau_bar);
    out += ',';
    out += std::to_string(p.trials);
    out += ',';
    detail::append_double(out, p.mean_diameter);
    out += ',';
    detail::append_double(out, p.mean_ticks);
    out += ',';
    detail::append_double(out, p.mean_rounds);
    out += ',';
    detail::append_double(out, p.mean_wall_time);
    out += ',';
    detail::append_double(out, p.mean_window);
    out += ',';
    out += p.all_converged ? '1' : '0';
    out += '\n';
  }
  return out;
}

// Grid execution shared by sweep and dc-scale. One fresh random graph and
// workload per (pair, trial); per-pair generation failures skip the pair.
inline SweepResult run_grid(const ExperimentConfig& config,
                            const std::function<GraphParams(int)>& params_for_n,
                            bool dense_traces) {
  struct Task {
    int pair;
    int n;
    int tau_bar;
    int trial;
  };
  std::vector<Task> tasks;
  const int pair_count = static_cast<int>(config.node_sizes.size() * config.tau_bars.size());
  int pair = 0;
  for (int n : config.node_sizes) {
    for (int tau : config.tau_bars) {
      for (int t = 0; t < config.trials_per_pair; ++t) tasks.push_back({pair, n, tau, t});
      ++pair;
    }
  }

  std::vector<std::optional<TrialStats>> slots(tasks.size());
  std::vector<std::string> errors(static_cast<std::size_t>(pair_count));
  detail::parallel_for(tasks.size(), config.threads, [&](std::size_t i) {
    const Task& task = tasks[i];
    try {
      const std::uint64_t base = trial_seed(config.master_seed, task.n, task.tau_bar, task.trial);
      const GraphParams gp = params_for_n(task.n);
      const Digraph g = generate_random_digraph(task.n, gp.density, gp.target_diameter_max,
                                                mix_seed(base, {0x67ULL}));
      const auto resources = make_random_problem(task.n, mix_seed(base, {0x70ULL}));
      TrialOutcome outcome =
          run_problem_trial(g, resources, task.tau_bar, config.epsilon, config.max_iterations,
                            mix_seed(base, {0x64ULL}), dense_traces);
      outcome.stats.trial_id = task.trial;
      slots[i] = outcome.stats;
    } catch (const GraphGenerationError& e) {
      errors[static_cast<std::size_t>(task.pair)] = e.what();
    }
  });

  SweepResult result;
  pair = 0;
  std::size_t cursor = 0;
  for (int n : config.node_sizes) {
    for (int tau : config.tau_bars) {
      if (!errors[static_cast<std::size_t>(pair)].empty()) {
        result.skipped.push_back(std::to_string(n) + "/" + std::to_string(tau) + ": " +
                                 errors[static_cast<std::size_t>(pair)]);
        cursor += static_cast<std::size_t>(config.trials_per_pair);
        ++pair;
        continue;
      }
      PairSummary summary;
      summary.n = n;
      summary.tau_bar = tau;
      summary.trials = config.trials_per_pair;
      for (int t = 0; t < config.trials_per_pair; ++t, ++cursor) {
        const TrialStats& stats = *slots[cursor];
        result.trials.push_back(stats);
        summary.mean_diameter += static_cast<double>(stats.diameter);
        summary.mean_ticks += static_cast<double>(stats.ticks);
        summary.mean_rounds += static_cast<double>(stats.rounds);
        summary.mean_wall_time += stats.wall_time;
        summary.mean_window += stats.converge.valid ? stats.converge.window : 0.0;
        summary.all_converged = summary.all_converged && stats.converged;
        result.any_cap_hit = result.any_cap_hit || !stats.converged;
      }
      const double denom = static_cast<double>(config.trials_per_pair);
      summary.mean_diameter /= denom;
      summary.mean_ticks /= denom;
      summary.mean_rounds /= denom;
      summary.mean_wall_time /= denom;
      summary.mean_window /= denom;
      result.pairs.push_back(summary);
      ++pair;
    }
  }
  return result;
}

namespace detail {

inline nlohmann::json config_manifest(const ExperimentConfig& config, const char* mode) {
  nlohmann::json m;
  m["mode"] = mode;
  m["nodes"] = config.node_sizes;
  m["tau_bars"] = config.tau_bars;
  m["trials"] = config.trials_per_pair;
  m["epsilon"] = config.epsilon;
  m["max_iterations"] = config.max_iterations;
  m["seed"] = config.master_seed;
  m["density"] = config.graph.density;
  if (config.graph.target_diameter_max) m["max_diameter"] = *config.graph.target_diameter_max;
  m["downsample"] = config.downsample;
  return m;
}

inline void write_manifest(const std::string& out_dir, const nlohmann::json& manifest) {
  write_text_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

}  // namespace detail

// One trial on a fixed topology and workload; emits trace.csv, stats.csv,
// graph.dot, solution.csv and manifest.json under the output directory.
// Returns 0 on convergence, 2 when the iteration cap was hit.
inline int cmd_single(const ExperimentConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.out_dir);

  Digraph g = defaults::five_node_ring();
  std::vector<NodeResources> resources = defaults::five_node_problem();
  nlohmann::json manifest = detail::config_manifest(config, "single");

  const int tau_bar = config.tau_bars.front();
  const std::uint64_t base =
      trial_seed(config.master_seed, config.node_sizes.front(), tau_bar, 0);

  if (!config.problem_file.empty()) {
    ProblemInstance prob = parse_problem_file(config.problem_file);
    AdmissionResult admission = apply_arrivals(prob);
    resources = prob.resources;
    manifest["problem_file"] = config.problem_file;
    manifest["admitted_jobs"] = admission.admitted.size();
    manifest["rejected_jobs"] = admission.rejected.size();
    nlohmann::json rejected = nlohmann::json::array();
    for (const RejectedJob& r : admission.rejected)
      rejected.push_back({{"demand", r.job.demand},
                          {"arrival_order", r.job.arrival_order},
                          {"reason", r.reason}});
    manifest["rejected"] = rejected;
    // Rejected jobs are not dropped for good: they re-enter the queue at the
    // next optimization step.
    manifest["rejected_policy"] = "re-queued at next optimization step";
    if (config.graph_file.empty())
      g = generate_random_digraph(static_cast<int>(resources.size()), config.graph.density,
                                  config.graph.target_diameter_max, mix_seed(base, {0x67ULL}));
  }
  if (!config.graph_file.empty()) {
    g = read_edge_list_file(config.graph_file, static_cast<int>(resources.size()));
    manifest["graph_file"] = config.graph_file;
  }
  if (config.problem_file.empty() &&
      (g.node_count() != 5 || config.node_sizes.front() != 5)) {
    const int n = config.graph_file.empty() ? config.node_sizes.front() : g.node_count();
    if (config.graph_file.empty())
      g = generate_random_digraph(n, config.graph.density, config.graph.target_diameter_max,
                                  mix_seed(base, {0x67ULL}));
    resources = make_random_problem(g.node_count(), mix_seed(base, {0x70ULL}));
  }
  if (static_cast<int>(resources.size()) != g.node_count())
    throw std::invalid_argument("config: problem node count does not match the graph");

  TrialOutcome outcome = run_problem_trial(g, resources, tau_bar, config.epsilon,
                                           config.max_iterations, mix_seed(base, {0x64ULL}),
                                           !config.downsample);
  outcome.stats.trial_id = 0;

  std::vector<double> demand(resources.size());
  for (std::size_t i = 0; i < resources.size(); ++i) demand[i] = resources[i].incoming;
  const double z_star = optimal_fraction(resources, demand);
  const ScheduleSolution solution = optimal_workloads(z_star, resources);

  write_text_file(config.out_dir + "/trace.csv", trace_csv(outcome.trace));
  write_text_file(config.out_dir + "/stats.csv",
                  stats_csv(std::span<const TrialStats>(&outcome.stats, 1)));
  write_dot(config.out_dir + "/graph.dot", g);
  write_text_file(config.out_dir + "/solution.csv", solution_csv(resources, solution));
  manifest["diameter"] = outcome.trace.diameter;
  manifest["z_star"] = z_star;
  manifest["converged"] = outcome.trace.converged;
  detail::write_manifest(config.out_dir, manifest);
  return outcome.trace.converged ? 0 : 2;
}

inline int write_sweep_outputs(const ExperimentConfig& config, const SweepResult& result,
                               const char* mode) {
  std::filesystem::create_directories(config.out_dir);
  write_text_file(config.out_dir + "/trials.csv", stats_csv(result.trials));
  write_text_file(config.out_dir + "/pairs.csv", sweep_pairs_csv(result.pairs));
  nlohmann::json manifest = detail::config_manifest(config, mode);
  manifest["pairs"] = result.pairs.size();
  manifest["skipped"] = result.skipped;
  detail::write_manifest(config.out_dir, manifest);
  return result.any_cap_hit ? 2 : 0;
}

// Full grid over node sizes and delay bounds, a fresh random graph per
// trial, averaged per pair.
inline int cmd_sweep(const ExperimentConfig& config) {
  config.validate();
  const GraphParams gp = config.graph;
  SweepResult result = run_grid(config, [gp](int) { return gp; }, !config.downsample);
  return write_sweep_outputs(config, result, "sweep");
}

// Data-center grid: small-diameter graphs whose density scales down with n.
inline int cmd_dc_scale(const ExperimentConfig& config) {
  config.validate();
  ExperimentConfig effective = config;
  if (config.include_huge) effective.node_sizes.push_back(defaults::kDcHugeNodeSize);
  const std::optional<int> bound =
      config.graph.target_diameter_max.has_value() ? config.graph.target_diameter_max
                                                   : std::optional<int>(defaults::kDcTargetDiameter);
  SweepResult result = run_grid(
      effective,
      [bound](int n) {
        GraphParams p;
        p.density = detail::dc_density(n);
        p.target_diameter_max = bound;
        return p;
      },
      !config.downsample);
  return write_sweep_outputs(effective, result, "dc-scale");
}

// Digraph with an exact diameter, found by seed search; falls back to any
// graph within the bound when no exact match shows up.
inline Digraph generate_digraph_with_diameter(int n, double density, int target, std::uint64_t seed,
                                              int attempts, int* achieved) {
  for (int a = 0; a < attempts; ++a) {
    try {
      Digraph g = generate_random_digraph(n, density, std::nullopt, mix_seed(seed, {static_cast<std::uint64_t>(a)}));
      const int d = diameter(g);
      if (d == target) {
        if (achieved) *achieved = d;
        return g;
      }
    } catch (const GraphGenerationError&) {
    }
  }
  Digraph g = generate_random_digraph(n, density, target, mix_seed(seed, {0xfa11ULL}));
  if (achieved) *achieved = diameter(g);
  return g;
}

// Seeded scan for strict-ordering breaches. Counts per seed go to
// summary.csv; per-seed record files are written only when non-empty.
inline int cmd_violations(const ExperimentConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.out_dir);

  std::vector<defaults::ViolationScanPoint> points;
  if (config.graph.target_diameter_max) {
    for (int n : config.node_sizes)
      for (int tau : config.tau_bars) points.push_back({n, *config.graph.target_diameter_max, tau});
  } else {
    points = defaults::kViolationScanPoints;
  }

  std::string summary = "n,tau_bar,diameter,seed,above_max,below_min,ticks,converged\n";
  bool cap_hit = false;
  for (const auto& point : points) {
    for (int s = 0; s < config.trials_per_pair; ++s) {
      const std::uint64_t base = trial_seed(config.master_seed, point.nodes, point.tau_bar, s);
      int achieved = 0;
      const Digraph g = generate_digraph_with_diameter(
          point.nodes, config.graph.density, point.diameter, mix_seed(base, {0x67ULL}), 200,
          &achieved);
      const auto resources = make_random_problem(point.nodes, mix_seed(base, {0x70ULL}));
      TrialOutcome outcome =
          run_problem_trial(g, resources, point.tau_bar, config.epsilon, config.max_iterations,
                            mix_seed(base, {0x64ULL}), true);
      const auto records = detect_violations(outcome.trace, point.tau_bar);
      std::size_t above = 0, below = 0;
      for (const ViolationRecord& rec : records)
        (rec.direction == ViolationDirection::kAboveMax ? above : below) += 1;
      summary += std::to_string(point.nodes) + "," + std::to_string(point.tau_bar) + "," +
                 std::to_string(achieved) + "," + std::to_string(s) + "," +
                 std::to_string(above) + "," + std::to_string(below) + "," +
                 std::to_string(outcome.stats.ticks) + "," +
                 (outcome.stats.converged ? "1" : "0") + "\n";
      cap_hit = cap_hit || !outcome.stats.converged;
      if (!records.empty()) {
        const std::string name = config.out_dir + "/violations_" + std::to_string(point.nodes) +
                                 "_" + std::to_string(point.tau_bar) + "_" + std::to_string(s) +
                                 ".csv";
        write_text_file(name, violations_csv(records));
      }
    }
  }
  write_text_file(config.out_dir + "/summary.csv", summary);
  nlohmann::json manifest = detail::config_manifest(config, "violations");
  manifest["scan_points"] = points.size();
  detail::write_manifest(config.out_dir, manifest);
  return cap_hit ? 2 : 0;
}

}  // namespace capcon
