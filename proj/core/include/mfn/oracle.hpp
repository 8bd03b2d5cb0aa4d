#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mfn/beliefs.hpp"
#include "mfn/graph.hpp"
#include "mfn/mfa.hpp"
#include "mfn/types.hpp"

namespace mfn {

// Exact enumeration result on a small instance.
struct ExactPosterior {
  double log_partition = 0.0;
  std::vector<double> marginals;     // P(s_kl = 1 | X) per ordered pair
  std::vector<double> config_probs;  // all 2^m configuration probabilities; filled iff m <= 12
};

inline constexpr int kMaxEnumPairs = 20;  // 2^20 configurations

// Enumerates all 2^m configurations of the m ordered candidate pairs;
// log-partition via max-shifted log-sum-exp, marginals by weighted counting.
// threads > 1 shards the configuration range with a deterministic reduction.
ExactPosterior enumerate_posterior(const CandidateGraph& g, const ModelParams& theta,
                                   int threads = 1);

// Sum over all 2^|row| binary rows of q(row) * [deg = v]; |row| <= 10.
double brute_degree_expectation(std::span<const double> alpha_row, int v);

// Centered difference (F(alpha_kl + h) - F(alpha_kl - h)) / 2h of the ELBO.
double numeric_elbo_derivative(const EdgeBeliefs& b, int k, int l, const CandidateGraph& g,
                               const ModelParams& theta, double h);

// Centered differences of an arbitrary scalar loss per parameter component.
GradientSet numeric_param_gradient(const std::function<double(const ModelParams&)>& loss,
                                   const ModelParams& at, double h);

}  // namespace mfn
