#pragma once

#include <cstdint>
#include <span>

#include "mfn/beliefs.hpp"
#include "mfn/graph.hpp"
#include "mfn/types.hpp"

namespace mfn {

// Symmetric pair features: componentwise |x_i - x_j| with the positional
// entries normalised by (r_i + r_j), and the elementwise product x_i * x_j.
struct PairFeature {
  FeatureVec absdiff{};
  FeatureVec prod{};
};

PairFeature pair_feature(const NodeFeatures& xi, const NodeFeatures& xj);

// eta . absdiff + nu . prod
inline double data_term(const PairFeature& pf, const ModelParams& theta) {
  return dot(theta.eta, pf.absdiff) + dot(theta.nu, pf.prod);
}

// Unary potential: degree prior beta_v for degrees 0..2 (0 beyond) plus the
// linear data term a.x_i scaled by the node degree.
double node_potential(std::span<const std::uint8_t> s_row, const NodeFeatures& xi,
                      const ModelParams& theta);

// Pairwise potential on the two directed bits of one node pair:
// lambda (1 - 2|s_ij - s_ji|) + (2 s_ij s_ji - 1)(eta.|dx| + nu.(x x')).
double pairwise_potential(int s_ij, int s_ji, const PairFeature& pf, const ModelParams& theta);

// Unnormalised joint log-density: sum of node potentials plus pairwise
// potentials over all ordered candidate pairs (each unordered pair counted
// in both directions).
double joint_log_density_unnorm(std::span<const std::uint8_t> s, const CandidateGraph& g,
                                const ModelParams& theta);

inline double joint_log_density_unnorm(const AdjacencyEstimate& s, const CandidateGraph& g,
                                       const ModelParams& theta) {
  check_keyed(s, g, "joint_log_density_unnorm");
  return joint_log_density_unnorm(std::span<const std::uint8_t>(s.s), g, theta);
}

// Pair features for every ordered candidate pair of g, aligned with
// ordered_pairs(); reverse pairs share the same values.
std::vector<PairFeature> all_pair_features(const CandidateGraph& g);

}  // namespace mfn
