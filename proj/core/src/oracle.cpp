#include "mfn/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <thread>

#include "mfn/potentials.hpp"

namespace mfn {

namespace {

// Precomputed pieces of the joint log-density so a configuration evaluates in
// O(N + m) bit operations. Matches joint_log_density_unnorm term for term
// (a unit test pins the equality).
struct FastJoint {
  const CandidateGraph* g;
  std::vector<double> ax;         // a . x_k per node
  std::vector<double> data;       // eta.|dx| + nu.(x x') per ordered pair
  std::vector<std::uint32_t> row_mask;  // bit mask of node k's pair indices
  std::vector<int> rev;
  ModelParams theta;

  FastJoint(const CandidateGraph& graph, const ModelParams& params) : g(&graph), theta(params) {
    const int n = graph.node_count();
    ax.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) ax[static_cast<std::size_t>(k)] = dot(params.a, graph.nodes[static_cast<std::size_t>(k)].x);
    data = all_pair_data(graph, params);
    row_mask.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      std::uint32_t m = 0;
      for (int i = 0; i < graph.row_size(k); ++i) m |= (1u << (graph.row_begin(k) + i));
      row_mask[static_cast<std::size_t>(k)] = m;
    }
    rev.resize(static_cast<std::size_t>(graph.pair_count()));
    for (int p = 0; p < graph.pair_count(); ++p) rev[static_cast<std::size_t>(p)] = graph.reverse_index(p);
  }

  double operator()(std::uint32_t config) const {
    double total = 0.0;
    for (int k = 0; k < g->node_count(); ++k) {
      const int deg = std::popcount(config & row_mask[static_cast<std::size_t>(k)]);
      if (deg <= kDegreeCap) total += theta.beta[static_cast<std::size_t>(deg)];
      total += ax[static_cast<std::size_t>(k)] * deg;
    }
    for (int p = 0; p < g->pair_count(); ++p) {
      const int s = static_cast<int>((config >> p) & 1u);
      const int rv = rev[static_cast<std::size_t>(p)];
      const int r = rv >= 0 ? static_cast<int>((config >> rv) & 1u) : 0;
      total += theta.lambda * (1.0 - 2.0 * std::abs(s - r));
      total += (2.0 * s * r - 1.0) * data[static_cast<std::size_t>(p)];
    }
    return total;
  }
};

struct ShardSums {
  double max_ld = -std::numeric_limits<double>::infinity();
  double total = 0.0;                 // sum exp(ld - max_ld)
  std::vector<double> per_pair;       // sum exp(ld - max_ld) over configs with bit set
};

}  // namespace

ExactPosterior enumerate_posterior(const CandidateGraph& g, const ModelParams& theta,
                                   int threads) {
  const int m = g.pair_count();
  if (m > kMaxEnumPairs)
    throw Error("size: enumerate_posterior supports at most " + std::to_string(kMaxEnumPairs) +
                " ordered pairs, got " + std::to_string(m));
  if (m == 0) throw Error("size: enumerate_posterior needs at least one candidate pair");
  threads = std::clamp(threads, 1, 64);

  const std::uint64_t n_configs = 1ull << m;
  const FastJoint joint(g, theta);

  std::vector<ShardSums> shards(static_cast<std::size_t>(threads));
  auto work = [&](int shard) {
    const std::uint64_t begin = n_configs * static_cast<std::uint64_t>(shard) / static_cast<std::uint64_t>(threads);
    const std::uint64_t end = n_configs * static_cast<std::uint64_t>(shard + 1) / static_cast<std::uint64_t>(threads);
    ShardSums& s = shards[static_cast<std::size_t>(shard)];
    s.per_pair.assign(static_cast<std::size_t>(m), 0.0);
    for (std::uint64_t c = begin; c < end; ++c)
      s.max_ld = std::max(s.max_ld, joint(static_cast<std::uint32_t>(c)));
    for (std::uint64_t c = begin; c < end; ++c) {
      const double w = std::exp(joint(static_cast<std::uint32_t>(c)) - s.max_ld);
      s.total += w;
      std::uint32_t bits = static_cast<std::uint32_t>(c);
      while (bits) {
        const int p = std::countr_zero(bits);
        s.per_pair[static_cast<std::size_t>(p)] += w;
        bits &= bits - 1;
      }
    }
  };

  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }

  double global_max = -std::numeric_limits<double>::infinity();
  for (const auto& s : shards) global_max = std::max(global_max, s.max_ld);
  double total = 0.0;
  std::vector<double> per_pair(static_cast<std::size_t>(m), 0.0);
  for (const auto& s : shards) {
    if (!std::isfinite(s.max_ld)) continue;  // empty shard
    const double scale = std::exp(s.max_ld - global_max);
    total += s.total * scale;
    for (int p = 0; p < m; ++p) per_pair[static_cast<std::size_t>(p)] += s.per_pair[static_cast<std::size_t>(p)] * scale;
  }

  ExactPosterior out;
  out.log_partition = global_max + std::log(total);
  out.marginals.resize(static_cast<std::size_t>(m));
  for (int p = 0; p < m; ++p) out.marginals[static_cast<std::size_t>(p)] = per_pair[static_cast<std::size_t>(p)] / total;

  if (m <= 12) {
    out.config_probs.resize(static_cast<std::size_t>(n_configs));
    for (std::uint64_t c = 0; c < n_configs; ++c)
      out.config_probs[static_cast<std::size_t>(c)] =
          std::exp(joint(static_cast<std::uint32_t>(c)) - out.log_partition);
  }
  return out;
}

double brute_degree_expectation(std::span<const double> alpha_row, int v) {
  const int d = static_cast<int>(alpha_row.size());
  if (d > 10) throw Error("size: brute_degree_expectation caps |N_i| at 10");
  double total = 0.0;
  for (std::uint32_t row = 0; row < (1u << d); ++row) {
    if (std::popcount(row) != v) continue;
    double q = 1.0;
    for (int j = 0; j < d; ++j)
      q *= (row >> j) & 1u ? alpha_row[static_cast<std::size_t>(j)] : 1.0 - alpha_row[static_cast<std::size_t>(j)];
    total += q;
  }
  return total;
}

double numeric_elbo_derivative(const EdgeBeliefs& b, int k, int l, const CandidateGraph& g,
                               const ModelParams& theta, double h) {
  check_keyed(b, g, "numeric_elbo_derivative");
  const int p = g.pair_index(k, l);
  if (p < 0) throw Error("domain: numeric_elbo_derivative: (k, l) is not a candidate pair");
  const double a = b.alpha[static_cast<std::size_t>(p)];
  if (a < 2.0 * h + kBeliefClamp || a > 1.0 - 2.0 * h - kBeliefClamp)
    throw Error("precondition: alpha_kl too close to the clamp boundary for step h");

  EdgeBeliefs plus = b, minus = b;
  plus.alpha[static_cast<std::size_t>(p)] = a + h;
  minus.alpha[static_cast<std::size_t>(p)] = a - h;
  return (elbo(plus, g, theta).total - elbo(minus, g, theta).total) / (2.0 * h);
}

GradientSet numeric_param_gradient(const std::function<double(const ModelParams&)>& loss,
                                   const ModelParams& at, double h) {
  if (h <= 0.0) throw Error("domain: numeric_param_gradient needs h > 0");
  GradientSet grad;
  for (int i = 0; i < ModelParams::kCount; ++i) {
    ModelParams plus = at, minus = at;
    plus.flat(i) += h;
    minus.flat(i) -= h;
    grad.flat(i) = (loss(plus) - loss(minus)) / (2.0 * h);
  }
  return grad;
}

}  // namespace mfn
