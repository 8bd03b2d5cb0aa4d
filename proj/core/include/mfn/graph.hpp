#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfn/types.hpp"

namespace mfn {

struct OrderedPair {
  int from = 0;
  int to = 0;
  friend bool operator==(const OrderedPair&, const OrderedPair&) = default;
};

// Over-complete candidate graph: node features plus symmetrized L-nearest
// neighbourhoods. Directed edge variables live on the ordered pairs (k, l)
// with l in N_k; the pair list is sorted ascending by (k, l).
struct CandidateGraph {
  std::vector<NodeFeatures> nodes;
  std::vector<std::vector<int>> neighborhoods;        // each sorted ascending
  std::vector<std::pair<int, int>> gt_edges;          // unordered, stored i < j
  int knn_L = 0;                                      // L used at construction
  int fold = -1;                                      // cross-validation label

  int node_count() const { return static_cast<int>(nodes.size()); }
  int pair_count() const { return static_cast<int>(pairs_.size()); }
  const std::vector<OrderedPair>& ordered_pairs() const { return pairs_; }

  std::span<const int> neighbors(int k) const {
    return neighborhoods[static_cast<std::size_t>(k)];
  }

  // Ordered pairs are laid out node-major: pairs (k, *) occupy the
  // contiguous index range [row_begin(k), row_begin(k) + row_size(k)).
  int row_begin(int k) const { return pair_offset_[static_cast<std::size_t>(k)]; }
  int row_size(int k) const {
    return pair_offset_[static_cast<std::size_t>(k) + 1] - pair_offset_[static_cast<std::size_t>(k)];
  }

  // Rebuilds the ordered-pair index; call after neighborhoods change.
  void rebuild_pair_index();

  // Index of (k, l) in ordered_pairs(), -1 if (k, l) is not a candidate.
  int pair_index(int k, int l) const;
  // Index of the opposite direction of pair p; always valid after symmetrization.
  int reverse_index(int p) const { return reverse_[static_cast<std::size_t>(p)]; }

  // Directed ground-truth bits over ordered_pairs(): 1 iff {k,l} is a gt edge.
  std::vector<std::uint8_t> gt_directed() const;

  // Number of gt edges present in the candidate set / total gt edges.
  double gt_coverage() const;

 private:
  std::vector<OrderedPair> pairs_;
  std::vector<int> pair_offset_;  // node_count()+1 offsets into pairs_
  std::vector<int> reverse_;
};

// L nearest neighbours of every node by Euclidean distance on mean positions,
// ties broken by lower node index. Neighborhood lists are sorted by index.
std::vector<std::vector<int>> build_knn_neighborhoods(const std::vector<NodeFeatures>& nodes,
                                                      int L);

// Union closure: if l in N_k then k in N_l. Idempotent.
std::vector<std::vector<int>> symmetrize_neighborhoods(std::vector<std::vector<int>> nbh);

struct ValidationIssue {
  std::string code;    // "self-pair" | "asymmetric" | "uncovered-gt" | "radius" | "variance" | "non-finite" | "gt-range"
  std::string detail;
};

// Reports violated invariants; an empty report means the graph is valid.
std::vector<ValidationIssue> validate_graph(const CandidateGraph& g);

// Convenience builder: k-NN, symmetrize, normalize gt pairs, index.
CandidateGraph make_candidate_graph(std::vector<NodeFeatures> nodes, int L,
                                    std::vector<std::pair<int, int>> gt_edges = {});

}  // namespace mfn
