#include "mfn/potentials.hpp"

#include <cmath>

namespace mfn {

PairFeature pair_feature(const NodeFeatures& xi, const NodeFeatures& xj) {
  const double rsum = xi.radius() + xj.radius();
  if (rsum <= 0.0) throw Error("degenerate-radius: r_i + r_j must be positive");
  PairFeature pf;
  for (int c = 0; c < kFeatureDim; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    double ad = std::abs(xi.x[cc] - xj.x[cc]);
    if (c < 3) ad /= rsum;  // positions are relative to the pair's scale
    pf.absdiff[cc] = ad;
    pf.prod[cc] = xi.x[cc] * xj.x[cc];
  }
  return pf;
}

double node_potential(std::span<const std::uint8_t> s_row, const NodeFeatures& xi,
                      const ModelParams& theta) {
  int deg = 0;
  for (std::uint8_t b : s_row) deg += b;
  double phi = (deg <= kDegreeCap) ? theta.beta[static_cast<std::size_t>(deg)] : 0.0;
  phi += dot(theta.a, xi.x) * static_cast<double>(deg);
  return phi;
}

double pairwise_potential(int s_ij, int s_ji, const PairFeature& pf, const ModelParams& theta) {
  const int diff = s_ij - s_ji;
  const double sym = theta.lambda * (1.0 - 2.0 * std::abs(diff));
  const double data = (2.0 * s_ij * s_ji - 1.0) * data_term(pf, theta);
  return sym + data;
}

double joint_log_density_unnorm(std::span<const std::uint8_t> s, const CandidateGraph& g,
                                const ModelParams& theta) {
  if (static_cast<int>(s.size()) != g.pair_count())
    throw Error("structural: joint_log_density_unnorm: configuration not keyed by candidate pairs");

  double total = 0.0;
  int p = 0;
  for (int k = 0; k < g.node_count(); ++k) {
    const auto nbh = g.neighbors(k);
    total += node_potential(s.subspan(static_cast<std::size_t>(p), nbh.size()),
                            g.nodes[static_cast<std::size_t>(k)], theta);
    p += static_cast<int>(nbh.size());
  }
  const auto& pairs = g.ordered_pairs();
  for (int q = 0; q < g.pair_count(); ++q) {
    const auto [k, l] = pairs[static_cast<std::size_t>(q)];
    const PairFeature pf = pair_feature(g.nodes[static_cast<std::size_t>(k)],
                                        g.nodes[static_cast<std::size_t>(l)]);
    const int rev = g.reverse_index(q);
    // a direction that is not a candidate pair is structurally absent (s = 0)
    const int s_ji = rev >= 0 ? s[static_cast<std::size_t>(rev)] : 0;
    total += pairwise_potential(s[static_cast<std::size_t>(q)], s_ji, pf, theta);
  }
  return total;
}

std::vector<PairFeature> all_pair_features(const CandidateGraph& g) {
  std::vector<PairFeature> pfs(static_cast<std::size_t>(g.pair_count()));
  const auto& pairs = g.ordered_pairs();
  for (int q = 0; q < g.pair_count(); ++q) {
    const auto [k, l] = pairs[static_cast<std::size_t>(q)];
    const int rev = g.reverse_index(q);
    if (rev >= 0 && rev < q) {
      pfs[static_cast<std::size_t>(q)] = pfs[static_cast<std::size_t>(rev)];
      continue;
    }
    pfs[static_cast<std::size_t>(q)] = pair_feature(g.nodes[static_cast<std::size_t>(k)],
                                                    g.nodes[static_cast<std::size_t>(l)]);
  }
  return pfs;
}

}  // namespace mfn
