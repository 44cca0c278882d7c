#pragma once

#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "capcon/graph.hpp"
#include "capcon/rng.hpp"

namespace capcon {

// Bounded time-varying per-link delay generator. Every sampled delay lies in
// [0, tau_bar]; self-links are always delay 0. Sampling is a pure function of
// (seed, edge, tick), so trials never depend on query order.
struct DelayModel {
  enum class Kind { kUniform, kConstant, kPerEdgeBound };

  Kind kind = Kind::kUniform;
  int tau_bar = 0;
  std::uint64_t seed = 0;
  // kPerEdgeBound: per-link delay cap, keyed by (receiver, sender) 1-based.
  std::unordered_map<std::uint64_t, int> edge_bound;

  static DelayModel uniform(int tau_bar, std::uint64_t seed) {
    if (tau_bar < 0) throw std::invalid_argument("DelayModel: tau_bar must be >= 0");
    DelayModel m;
    m.kind = Kind::kUniform;
    m.tau_bar = tau_bar;
    m.seed = seed;
    return m;
  }

  static DelayModel constant(int tau_bar) {
    if (tau_bar < 0) throw std::invalid_argument("DelayModel: tau_bar must be >= 0");
    DelayModel m;
    m.kind = Kind::kConstant;
    m.tau_bar = tau_bar;
    return m;
  }

  // Bounds are given in the graph's edge order; each bound must be <= tau_bar.
  static DelayModel per_edge(const Digraph& g, const std::vector<int>& bounds,
                             int tau_bar, std::uint64_t seed) {
    if (tau_bar < 0) throw std::invalid_argument("DelayModel: tau_bar must be >= 0");
    if (bounds.size() != g.edges().size())
      throw std::invalid_argument("DelayModel: one bound per edge required");
    DelayModel m;
    m.kind = Kind::kPerEdgeBound;
    m.tau_bar = tau_bar;
    m.seed = seed;
    for (std::size_t i = 0; i < bounds.size(); ++i) {
      if (bounds[i] < 0 || bounds[i] > tau_bar)
        throw std::invalid_argument("DelayModel: per-edge bound outside [0, tau_bar]");
      const auto& [recv, send] = g.edges()[i];
      m.edge_bound[edge_key(recv, send)] = bounds[i];
    }
    return m;
  }

  static std::uint64_t edge_key(int recv, int send) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(recv)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(send));
  }
};

// Delay of the message sent from `send` to `recv` (1-based ids) at `tick`.
inline int sample_delay(const DelayModel& model, int recv, int send, long tick) {
  if (recv == send) return 0;
  if (model.tau_bar == 0) return 0;
  int bound = model.tau_bar;
  switch (model.kind) {
    case DelayModel::Kind::kConstant:
      return model.tau_bar;
    case DelayModel::Kind::kPerEdgeBound: {
      auto it = model.edge_bound.find(DelayModel::edge_key(recv, send));
      if (it == model.edge_bound.end())
        throw std::invalid_argument("sample_delay: edge not present in bound table");
      bound = it->second;
      if (bound == 0) return 0;
      break;
    }
    case DelayModel::Kind::kUniform:
      break;
  }
  const std::uint64_t h = mix_seed(model.seed, {static_cast<std::uint64_t>(recv),
                                                static_cast<std::uint64_t>(send),
                                                static_cast<std::uint64_t>(tick)});
  return static_cast<int>((static_cast<unsigned __int128>(h) *
                           static_cast<std::uint64_t>(bound + 1)) >> 64);
}

}  // namespace capcon
