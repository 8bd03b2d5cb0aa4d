#include "mfn/mfa.hpp"

#include <algorithm>
#include <cmath>

namespace mfn {

namespace {

// pmf over {0, 1, 2} of a sum of independent Bernoullis; mass at >= 3 is
// dropped (not needed anywhere).
struct DegreeTriple {
  double p0 = 1.0, p1 = 0.0, p2 = 0.0;
};

inline DegreeTriple combine(const DegreeTriple& a, const DegreeTriple& b) {
  return {a.p0 * b.p0, a.p0 * b.p1 + a.p1 * b.p0, a.p0 * b.p2 + a.p1 * b.p1 + a.p2 * b.p0};
}

inline DegreeTriple bernoulli(double alpha) { return {1.0 - alpha, alpha, 0.0}; }

// out[i] = degree pmf of row with position i left out. O(d) via prefix/suffix.
void exclusion_triples(std::span<const double> row, std::vector<DegreeTriple>& pre,
                       std::vector<DegreeTriple>& suf, std::vector<DegreeTriple>& out) {
  const std::size_t d = row.size();
  pre.assign(d + 1, {});
  suf.assign(d + 1, {});
  for (std::size_t i = 0; i < d; ++i) pre[i + 1] = combine(pre[i], bernoulli(row[i]));
  for (std::size_t i = d; i-- > 0;) suf[i] = combine(bernoulli(row[i]), suf[i + 1]);
  out.assign(d, {});
  for (std::size_t i = 0; i < d; ++i) out[i] = combine(pre[i], suf[i + 1]);
}

inline double degree_prior_slope(const DegreeTriple& q, const ModelParams& theta) {
  return (theta.beta[1] - theta.beta[0]) * q.p0 + (theta.beta[2] - theta.beta[1]) * q.p1 -
         theta.beta[2] * q.p2;
}

inline double binary_entropy(double a) { return -(a * std::log(a) + (1.0 - a) * std::log(1.0 - a)); }

}  // namespace

double degree_expectation(std::span<const double> alpha_row, int v) {
  if (v < 0 || v > 2) throw Error("domain: degree_expectation supports v in {0, 1, 2}");
  double p0 = 1.0;
  for (double a : alpha_row) p0 *= (1.0 - a);
  if (v == 0) return p0;
  if (v == 1) {
    double e1 = 0.0;
    for (double a : alpha_row) e1 += a / (1.0 - a);
    return p0 * e1;
  }
  double e2 = 0.0, run = 0.0;
  for (double a : alpha_row) {
    const double r = a / (1.0 - a);
    e2 += run * r;
    run += r;
  }
  return p0 * e2;
}

std::vector<double> all_pair_data(const CandidateGraph& g, const ModelParams& theta) {
  const auto pfs = all_pair_features(g);
  std::vector<double> d(pfs.size());
  for (std::size_t q = 0; q < pfs.size(); ++q) d[q] = data_term(pfs[q], theta);
  return d;
}

ElboBreakdown elbo(const EdgeBeliefs& b, const CandidateGraph& g, const ModelParams& theta) {
  check_keyed(b, g, "elbo");
  ElboBreakdown out;

  for (int k = 0; k < g.node_count(); ++k) {
    const std::span<const double> row(b.alpha.data() + g.row_begin(k),
                                      static_cast<std::size_t>(g.row_size(k)));
    double node = 0.0;
    for (int v = 0; v <= 2; ++v) node += theta.beta[static_cast<std::size_t>(v)] * degree_expectation(row, v);
    double asum = 0.0;
    for (double a : row) asum += a;
    node += dot(theta.a, g.nodes[static_cast<std::size_t>(k)].x) * asum;
    out.node_term += node;
  }

  const auto data = all_pair_data(g, theta);
  for (int q = 0; q < g.pair_count(); ++q) {
    const double a_kl = b.alpha[static_cast<std::size_t>(q)];
    const int rev = g.reverse_index(q);
    const double a_lk = rev >= 0 ? b.alpha[static_cast<std::size_t>(rev)] : 0.0;
    out.pairwise_term += theta.lambda * (1.0 - 2.0 * (a_kl + a_lk) + 4.0 * a_kl * a_lk);
    out.pairwise_term += (2.0 * a_kl * a_lk - 1.0) * data[static_cast<std::size_t>(q)];
    out.entropy_term += binary_entropy(a_kl);
  }

  out.total = out.node_term + out.pairwise_term + out.entropy_term;
  return out;
}

double gamma(int k, int l, const EdgeBeliefs& b, const CandidateGraph& g,
             const ModelParams& theta) {
  check_keyed(b, g, "gamma");
  const int p = g.pair_index(k, l);
  if (p < 0) throw Error("domain: gamma: node " + std::to_string(l) + " not in N_" + std::to_string(k));

  DegreeTriple q;
  const int begin = g.row_begin(k);
  for (int i = 0; i < g.row_size(k); ++i) {
    if (begin + i == p) continue;
    q = combine(q, bernoulli(b.alpha[static_cast<std::size_t>(begin + i)]));
  }

  const int rev = g.reverse_index(p);
  const double a_lk = rev >= 0 ? b.alpha[static_cast<std::size_t>(rev)] : 0.0;
  const PairFeature pf = pair_feature(g.nodes[static_cast<std::size_t>(k)],
                                      g.nodes[static_cast<std::size_t>(l)]);
  return degree_prior_slope(q, theta) + dot(theta.a, g.nodes[static_cast<std::size_t>(k)].x) +
         2.0 * theta.lambda * (4.0 * a_lk - 2.0) + 4.0 * a_lk * data_term(pf, theta);
}

void compute_gamma_all(const CandidateGraph& g, std::span<const double> alpha,
                       const ModelParams& theta, std::span<const double> pair_data,
                       std::span<double> out) {
  std::vector<DegreeTriple> pre, suf, excl;
  for (int k = 0; k < g.node_count(); ++k) {
    const int begin = g.row_begin(k);
    const int d = g.row_size(k);
    const std::span<const double> row(alpha.data() + begin, static_cast<std::size_t>(d));
    exclusion_triples(row, pre, suf, excl);
    const double ax = dot(theta.a, g.nodes[static_cast<std::size_t>(k)].x);
    for (int i = 0; i < d; ++i) {
      const int p = begin + i;
      const int rev = g.reverse_index(p);
      const double a_lk = rev >= 0 ? alpha[static_cast<std::size_t>(rev)] : 0.0;
      out[static_cast<std::size_t>(p)] = degree_prior_slope(excl[static_cast<std::size_t>(i)], theta) +
                                         ax + 2.0 * theta.lambda * (4.0 * a_lk - 2.0) +
                                         4.0 * a_lk * pair_data[static_cast<std::size_t>(p)];
    }
  }
}

EdgeBeliefs mfa_step_parallel(const EdgeBeliefs& b, const CandidateGraph& g,
                              const ModelParams& theta, double damping) {
  check_keyed(b, g, "mfa_step_parallel");
  EdgeBeliefs next;
  next.layer = b.layer + 1;
  next.alpha.resize(b.alpha.size());
  const auto data = all_pair_data(g, theta);
  std::vector<double> gam(b.alpha.size());
  compute_gamma_all(g, b.alpha, theta, data, gam);
  for (std::size_t q = 0; q < gam.size(); ++q)
    next.alpha[q] = clamp_belief((1.0 - damping) * sigmoid(gam[q]) + damping * b.alpha[q]);
  return next;
}

EdgeBeliefs mfa_sweep_sequential(EdgeBeliefs b, const CandidateGraph& g,
                                 const ModelParams& theta) {
  check_keyed(b, g, "mfa_sweep_sequential");
  const auto data = all_pair_data(g, theta);
  const auto& pairs = g.ordered_pairs();
  DegreeTriple q;
  for (int p = 0; p < g.pair_count(); ++p) {
    const int k = pairs[static_cast<std::size_t>(p)].from;
    q = {};
    const int begin = g.row_begin(k);
    for (int i = 0; i < g.row_size(k); ++i) {
      if (begin + i == p) continue;
      q = combine(q, bernoulli(b.alpha[static_cast<std::size_t>(begin + i)]));
    }
    const int rev = g.reverse_index(p);
    const double a_lk = rev >= 0 ? b.alpha[static_cast<std::size_t>(rev)] : 0.0;
    const double gam = degree_prior_slope(q, theta) +
                       dot(theta.a, g.nodes[static_cast<std::size_t>(k)].x) +
                       2.0 * theta.lambda * (4.0 * a_lk - 2.0) +
                       4.0 * a_lk * data[static_cast<std::size_t>(p)];
    b.alpha[static_cast<std::size_t>(p)] = clamp_belief(sigmoid(gam));
  }
  b.layer += 1;
  return b;
}

std::vector<MfaLayer> run_mfa(const EdgeBeliefs& init, const CandidateGraph& g,
                              const ModelParams& theta, const MfaSchedule& schedule) {
  check_keyed(init, g, "run_mfa");
  std::vector<MfaLayer> traj;
  traj.push_back({init, elbo(init, g, theta)});
  for (int t = 1; t <= schedule.max_iters; ++t) {
    EdgeBeliefs next = (schedule.mode == MfaMode::kParallel)
                           ? mfa_step_parallel(traj.back().beliefs, g, theta, schedule.damping)
                           : mfa_sweep_sequential(traj.back().beliefs, g, theta);
    next.layer = t;
    ElboBreakdown e = elbo(next, g, theta);
    const double delta = e.total - traj.back().elbo.total;
    traj.push_back({std::move(next), e});
    if (std::abs(delta) < schedule.elbo_tolerance) break;
  }
  return traj;
}

AdjacencyEstimate threshold(const EdgeBeliefs& b, const CandidateGraph& g, double tau) {
  check_keyed(b, g, "threshold");
  if (tau <= 0.0 || tau >= 1.0) throw Error("domain: threshold tau must lie in (0, 1)");
  AdjacencyEstimate est;
  est.s.resize(b.alpha.size());
  for (std::size_t q = 0; q < b.alpha.size(); ++q) est.s[q] = b.alpha[q] > tau ? 1 : 0;
  const auto& pairs = g.ordered_pairs();
  for (int p = 0; p < g.pair_count(); ++p) {
    const auto [k, l] = pairs[static_cast<std::size_t>(p)];
    const int rev = g.reverse_index(p);
    if (k < l && rev >= 0 && est.s[static_cast<std::size_t>(p)] &&
        est.s[static_cast<std::size_t>(rev)])
      est.undirected_edges.emplace_back(k, l);
  }
  return est;
}

}  // namespace mfn
