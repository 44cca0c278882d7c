#pragma once

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "capcon/graph.hpp"
#include "capcon/scheduler.hpp"

namespace capcon {

// DOT rendering of a digraph. Each stored edge (j, i) is written literally
// as "j -> i", which is the reverse of the transmission direction (node i
// transmits to node j); see the README note on edge orientation.
inline std::string to_dot(const Digraph& g) {
  std::ostringstream out;
  out << "digraph g {\n";
  for (int v = 1; v <= g.node_count(); ++v) out << "  " << v << ";\n";
  for (const auto& [recv, send] : g.edges()) out << "  " << recv << " -> " << send << ";\n";
  out << "}\n";
  return out.str();
}

inline void write_dot(const std::string& path, const Digraph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_dot: cannot open " + path);
  out << to_dot(g);
}

// Edge-list text: one "i j" pair per line meaning node i transmits to node j.
// Lines starting with '#' and blank lines are skipped. The node count is the
// largest id seen unless a larger count is forced.
inline Digraph read_edge_list(std::istream& in, int node_count_hint = 0) {
  std::vector<std::pair<int, int>> edges;  // (receiver, sender)
  int max_id = node_count_hint;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    int sender = 0, receiver = 0;
    if (!(fields >> sender >> receiver))
      throw std::runtime_error("read_edge_list: malformed line " + std::to_string(line_no));
    edges.emplace_back(receiver, sender);
    max_id = std::max({max_id, sender, receiver});
  }
  if (max_id < 1) throw std::runtime_error("read_edge_list: no edges found");
  return Digraph(max_id, std::move(edges));
}

inline Digraph read_edge_list_file(const std::string& path, int node_count_hint = 0) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_edge_list_file: cannot open " + path);
  return read_edge_list(in, node_count_hint);
}

inline std::string to_edge_list(const Digraph& g) {
  std::ostringstream out;
  out << "# sender receiver (sender transmits to receiver)\n";
  for (const auto& [recv, send] : g.edges()) out << send << " " << recv << "\n";
  return out.str();
}

// A scheduling problem: per-node resources plus the arrival-ordered job list
// with the node each job arrives at.
struct ProblemInstance {
  std::vector<NodeResources> resources;
  std::vector<JobSpec> jobs;
  std::vector<int> job_node;  // 1-based arrival node per job
};

// Problem-instance text format, one directive per line:
//   horizon <seconds>
//   nodes <count>
//   node <id> clock <cycles/s> occupied <cycles>
//   job <cycles> [at <node>]
// Jobs arrive in file order; a job without "at" lands on node 1.
inline ProblemInstance parse_problem(std::istream& in) {
  ProblemInstance prob;
  double horizon = 1.0;
  int node_count = 0;
  std::vector<bool> node_seen;
  std::string line;
  int line_no = 0;
  int arrivals = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("parse_problem: line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string directive;
    fields >> directive;
    if (directive == "horizon") {
      if (!(fields >> horizon) || !(horizon > 0.0)) fail("horizon must be a positive number");
      for (NodeResources& r : prob.resources) r.horizon = horizon;
    } else if (directive == "nodes") {
      if (node_count != 0) fail("duplicate nodes directive");
      if (!(fields >> node_count) || node_count < 1) fail("nodes must be a positive count");
      prob.resources.assign(static_cast<std::size_t>(node_count), NodeResources{});
      for (NodeResources& r : prob.resources) r.horizon = horizon;
      node_seen.assign(static_cast<std::size_t>(node_count), false);
    } else if (directive == "node") {
      if (node_count == 0) fail("node before nodes directive");
      int id = 0;
      std::string k1, k2;
      double clock = 0.0, occupied = 0.0;
      if (!(fields >> id >> k1 >> clock >> k2 >> occupied) || k1 != "clock" || k2 != "occupied")
        fail("expected: node <id> clock <cycles/s> occupied <cycles>");
      if (id < 1 || id > node_count) fail("node id out of range");
      NodeResources& r = prob.resources[static_cast<std::size_t>(id - 1)];
      r.clock_sum = clock;
      r.occupied = occupied;
      r.validate();
      node_seen[static_cast<std::size_t>(id - 1)] = true;
    } else if (directive == "job") {
      if (node_count == 0) fail("job before nodes directive");
      double demand = 0.0;
      if (!(fields >> demand) || !(demand > 0.0)) fail("job demand must be > 0");
      int at = 1;
      std::string kw;
      if (fields >> kw) {
        if (kw != "at" || !(fields >> at) || at < 1 || at > node_count)
          fail("expected: job <cycles> [at <node>]");
      }
      prob.jobs.push_back({demand, arrivals++});
      prob.job_node.push_back(at);
    } else {
      fail("unknown directive '" + directive + "'");
    }
  }
  if (node_count == 0) throw std::runtime_error("parse_problem: missing nodes directive");
  for (int i = 0; i < node_count; ++i)
    if (!node_seen[static_cast<std::size_t>(i)])
      throw std::runtime_error("parse_problem: node " + std::to_string(i + 1) + " not described");
  return prob;
}

inline ProblemInstance parse_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_problem_file: cannot open " + path);
  return parse_problem(in);
}

// Total availability admission, then per-node arrival sums for the admitted
// jobs. Rejected jobs do not contribute to any node's incoming load.
inline AdmissionResult apply_arrivals(ProblemInstance& prob) {
  double avail = 0.0;
  for (const NodeResources& r : prob.resources) avail += availability(r);
  AdmissionResult admission = admit_jobs(prob.jobs, avail);
  for (NodeResources& r : prob.resources) r.incoming = 0.0;
  std::size_t next = 0;
  for (std::size_t i = 0; i < prob.jobs.size() && next < admission.admitted.size(); ++i) {
    if (prob.jobs[i].arrival_order == admission.admitted[next].arrival_order) {
      prob.resources[static_cast<std::size_t>(prob.job_node[i] - 1)].incoming +=
          prob.jobs[i].demand;
      ++next;
    }
  }
  return admission;
}

}  // namespace capcon
