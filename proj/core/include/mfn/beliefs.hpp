#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mfn/graph.hpp"
#include "mfn/types.hpp"

namespace mfn {

// Variational edge-existence probabilities, aligned with a graph's
// ordered_pairs(). Values are kept inside [kBeliefClamp, 1 - kBeliefClamp].
struct EdgeBeliefs {
  std::vector<double> alpha;
  int layer = 0;
};

inline EdgeBeliefs uniform_beliefs(const CandidateGraph& g, double a0 = 0.5) {
  EdgeBeliefs b;
  b.alpha.assign(static_cast<std::size_t>(g.pair_count()), clamp_belief(a0));
  return b;
}

inline void check_keyed(const EdgeBeliefs& b, const CandidateGraph& g, const char* who) {
  if (static_cast<int>(b.alpha.size()) != g.pair_count())
    throw Error(std::string("structural: ") + who + ": beliefs not keyed by this graph's candidate pairs");
}

// Hard adjacency decision: directed bits over ordered pairs plus the
// undirected edge set (present iff both directions are on).
struct AdjacencyEstimate {
  std::vector<std::uint8_t> s;
  std::vector<std::pair<int, int>> undirected_edges;  // stored i < j, sorted
};

inline void check_keyed(const AdjacencyEstimate& a, const CandidateGraph& g, const char* who) {
  if (static_cast<int>(a.s.size()) != g.pair_count())
    throw Error(std::string("structural: ") + who + ": adjacency not keyed by this graph's candidate pairs");
}

// Ground truth as an AdjacencyEstimate over the graph's candidate pairs.
inline AdjacencyEstimate gt_estimate(const CandidateGraph& g) {
  AdjacencyEstimate est;
  est.s = g.gt_directed();
  for (const auto& e : g.gt_edges)
    if (g.pair_index(e.first, e.second) >= 0 && g.pair_index(e.second, e.first) >= 0)
      est.undirected_edges.push_back(e);
  return est;
}

}  // namespace mfn
