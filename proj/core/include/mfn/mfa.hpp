#pragma once

#include <span>
#include <vector>

#include "mfn/beliefs.hpp"
#include "mfn/graph.hpp"
#include "mfn/potentials.hpp"
#include "mfn/types.hpp"

namespace mfn {

// Evidence lower bound split by source. total excludes the (unknown)
// log-partition constant.
struct ElboBreakdown {
  double node_term = 0.0;
  double pairwise_term = 0.0;
  double entropy_term = 0.0;
  double total = 0.0;
};

enum class MfaMode { kParallel, kSequentialSweep };

struct MfaSchedule {
  MfaMode mode = MfaMode::kParallel;
  int max_iters = 10;
  double elbo_tolerance = 1e-6;
  double damping = 0.0;

  MfaSchedule() = default;
  MfaSchedule(MfaMode m, int T, double tol = 1e-6, double damp = 0.0)
      : mode(m), max_iters(T), elbo_tolerance(tol), damping(damp) {
    if (T < 0) throw Error("schedule: max_iters must be >= 0");
    if (tol < 0.0) throw Error("schedule: elbo_tolerance must be >= 0");
    if (damp < 0.0 || damp >= 1.0) throw Error("schedule: damping must lie in [0, 1)");
  }
};

// P(sum of independent Bernoulli(alpha_j) = v) for v in {0, 1, 2}:
// prod_j (1 - alpha_j) * e_v(r) with odds r_j = alpha_j / (1 - alpha_j) and
// e_v the elementary symmetric polynomial (e_2 over unordered index pairs,
// so the result is a true probability).
double degree_expectation(std::span<const double> alpha_row, int v);

ElboBreakdown elbo(const EdgeBeliefs& b, const CandidateGraph& g, const ModelParams& theta);

// Argument of the sigmoid in the MFA update: dF/d(alpha_kl) + logit(alpha_kl),
// the exact coordinate derivative of elbo() above. Each unordered pair enters
// the ELBO through both ordered terms, so the symmetry and data contributions
// carry a factor 2 relative to a single-count convention.
double gamma(int k, int l, const EdgeBeliefs& b, const CandidateGraph& g,
             const ModelParams& theta);

// gamma for every ordered pair, written into out (size pair_count).
// pair_features/data terms may be supplied to avoid recomputation.
void compute_gamma_all(const CandidateGraph& g, std::span<const double> alpha,
                       const ModelParams& theta, std::span<const double> pair_data,
                       std::span<double> out);

// Per-pair data term eta.|dx| + nu.(x x') for every ordered pair.
std::vector<double> all_pair_data(const CandidateGraph& g, const ModelParams& theta);

// Simultaneous update alpha' = (1 - damping) sigmoid(gamma) + damping alpha,
// clamped. The layer semantics of the unrolled network.
EdgeBeliefs mfa_step_parallel(const EdgeBeliefs& b, const CandidateGraph& g,
                              const ModelParams& theta, double damping = 0.0);

// In-place coordinate ascent in ascending (k, l) order using fresh values;
// never decreases the ELBO.
EdgeBeliefs mfa_sweep_sequential(EdgeBeliefs b, const CandidateGraph& g,
                                 const ModelParams& theta);

struct MfaLayer {
  EdgeBeliefs beliefs;
  ElboBreakdown elbo;
};

// Iterates until max_iters or |delta ELBO| < elbo_tolerance; returns the whole
// trajectory including the initial state.
std::vector<MfaLayer> run_mfa(const EdgeBeliefs& init, const CandidateGraph& g,
                              const ModelParams& theta, const MfaSchedule& schedule);

// s_kl = 1 iff alpha_kl > tau (strict); an undirected edge {k, l} is emitted
// iff both directions are on.
AdjacencyEstimate threshold(const EdgeBeliefs& b, const CandidateGraph& g, double tau = 0.5);

}  // namespace mfn
