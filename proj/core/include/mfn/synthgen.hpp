#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mfn/graph.hpp"
#include "mfn/types.hpp"

namespace mfn {

// Airway-like binary-branching tree generator. Branch lengths are in spatial
// units; node spacing scales with the local radius, so deep (thin) branches
// are sampled more densely than thick ones.
struct TreeConfig {
  int depth = 4;                      // branching generations below the root branch
  double branch_length_min = 8.0;     // spatial units
  double branch_length_max = 12.0;
  double root_radius = 2.0;
  double radius_decay = 0.7;          // child radius = parent radius * decay, in (0,1)
  double node_spacing = 2.0;          // arc step as a multiple of the local radius
  double branching_angle_min = 0.35;  // radians off the parent direction
  double branching_angle_max = 0.70;
  double clutter_fraction = 0.15;     // spurious nodes added per true node
  double position_noise = 0.05;       // sigma as a fraction of the local radius
  double radius_noise = 0.03;         // sigma as a fraction of the local radius
  double orientation_noise = 0.05;    // angular sigma, radians
  std::array<double, kMeanDim> variance_min{0.005, 0.005, 0.005, 0.001, 0.002, 0.002, 0.002};
  std::array<double, kMeanDim> variance_max{0.02, 0.02, 0.02, 0.01, 0.01, 0.01, 0.01};
  int knn_L = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

// Grows a rooted 3D tree and returns the clean candidate graph: features are
// noise-free, gt_adjacency is the spanning tree of consecutive/junction
// pairs, neighborhoods are the symmetrized L-NN sets.
CandidateGraph generate_tree(const TreeConfig& config);

struct CorruptResult {
  CandidateGraph graph;
  double gt_coverage = 0.0;  // fraction of gt edges present in the candidate set
};

// Adds clutter nodes drawn from the true nodes' marginal feature ranges,
// perturbs true-node feature means, and rebuilds the L-NN neighborhoods.
// gt adjacency is unchanged; clutter nodes have no gt edges.
CorruptResult corrupt(const CandidateGraph& g, const TreeConfig& config);

struct Dataset {
  std::vector<CandidateGraph> graphs;   // fold labels 0..3 assigned round-robin
  std::vector<double> gt_coverage;      // per graph
};

// n_trees independent corrupted trees with per-tree seeds derived from seed.
Dataset make_dataset(int n_trees, const TreeConfig& config, std::uint64_t seed);

}  // namespace mfn
