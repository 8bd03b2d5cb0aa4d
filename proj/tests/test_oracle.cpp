#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mfn/oracle.hpp"
#include "mfn/potentials.hpp"
#include "mfn/rng.hpp"
#include "mfn/train.hpp"
#include "support/instances.hpp"

using namespace mfn;

TEST_CASE("enumerate: zero parameters give the uniform posterior") {
  Rng rng(21);
  const auto g = test::random_complete_graph(rng, 3);  // m = 6
  const ExactPosterior post = enumerate_posterior(g, ModelParams{});
  CHECK(post.log_partition == doctest::Approx(g.pair_count() * std::log(2.0)).epsilon(1e-12));
  for (double m : post.marginals) CHECK(m == doctest::Approx(0.5).epsilon(1e-12));
  REQUIRE(post.config_probs.size() == 64);
  for (double p : post.config_probs) CHECK(p == doctest::Approx(1.0 / 64.0).epsilon(1e-12));
}

TEST_CASE("enumerate: matches log-sum-exp of the joint log-density") {
  Rng rng(22);
  for (int trial = 0; trial < 5; ++trial) {
    const auto g = test::random_complete_graph(rng, 3);
    const ModelParams theta = test::random_params(rng, 1.5);
    const ExactPosterior post = enumerate_posterior(g, theta);

    const int m = g.pair_count();
    std::vector<double> lds;
    lds.reserve(1u << m);
    std::vector<std::uint8_t> s(static_cast<std::size_t>(m));
    for (std::uint32_t c = 0; c < (1u << m); ++c) {
      for (int p = 0; p < m; ++p) s[static_cast<std::size_t>(p)] = (c >> p) & 1u;
      lds.push_back(joint_log_density_unnorm(s, g, theta));
    }
    const double mx = *std::max_element(lds.begin(), lds.end());
    double total = 0.0;
    std::vector<double> pair_sum(static_cast<std::size_t>(m), 0.0);
    for (std::uint32_t c = 0; c < (1u << m); ++c) {
      const double w = std::exp(lds[c] - mx);
      total += w;
      for (int p = 0; p < m; ++p)
        if ((c >> p) & 1u) pair_sum[static_cast<std::size_t>(p)] += w;
    }
    CHECK(post.log_partition == doctest::Approx(mx + std::log(total)).epsilon(1e-12));
    for (int p = 0; p < m; ++p)
      CHECK(post.marginals[static_cast<std::size_t>(p)] ==
            doctest::Approx(pair_sum[static_cast<std::size_t>(p)] / total).epsilon(1e-11));
  }
}

TEST_CASE("enumerate: probabilities sum to one") {
  Rng rng(29);
  const auto g = test::random_complete_graph(rng, 3);
  const ModelParams theta = test::random_params(rng, 2.0);
  const ExactPosterior post = enumerate_posterior(g, theta);
  double total = 0.0;
  for (double p : post.config_probs) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("enumerate: large symmetry coupling concentrates on symmetric configurations") {
  Rng rng(23);
  const auto g = test::random_complete_graph(rng, 3);
  ModelParams theta;
  theta.lambda = 50.0;
  const ExactPosterior post = enumerate_posterior(g, theta);
  // P(s_kl != s_lk) per pair from the configuration table
  const int m = g.pair_count();
  for (int p = 0; p < m; ++p) {
    const int rev = g.reverse_index(p);
    double asym = 0.0;
    for (std::uint32_t c = 0; c < (1u << m); ++c)
      if (((c >> p) & 1u) != ((c >> rev) & 1u)) asym += post.config_probs[c];
    CHECK(asym < 1e-10);
  }
}

TEST_CASE("enumerate: degree-1 prior pulls a 2-node pair on") {
  std::vector<NodeFeatures> nodes{
      make_node({0, 0, 0}, 1.0, {0, 0, 1}, {0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01}),
      make_node({1, 0, 0}, 1.0, {0, 0, 1}, {0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01})};
  const auto g = make_candidate_graph(nodes, 1);
  ModelParams theta;
  theta.beta = {0.0, 5.0, 0.0};
  const ExactPosterior post = enumerate_posterior(g, theta);
  for (double m : post.marginals) CHECK(m > 0.95);
}

TEST_CASE("enumerate: invariant under node relabeling") {
  Rng rng(25);
  const auto g = test::random_complete_graph(rng, 4);
  const ModelParams theta = test::random_params(rng, 1.0);
  const auto gp = test::permute_graph(g, {3, 1, 0, 2});
  CHECK(enumerate_posterior(g, theta).log_partition ==
        doctest::Approx(enumerate_posterior(gp, theta).log_partition).epsilon(1e-10));
}

TEST_CASE("enumerate: sharded run matches single-threaded") {
  Rng rng(26);
  const auto g = test::random_complete_graph(rng, 4);  // m = 12
  const ModelParams theta = test::random_params(rng, 1.0);
  const ExactPosterior a = enumerate_posterior(g, theta, 1);
  const ExactPosterior b = enumerate_posterior(g, theta, 4);
  CHECK(a.log_partition == doctest::Approx(b.log_partition).epsilon(1e-12));
  for (int p = 0; p < g.pair_count(); ++p)
    CHECK(a.marginals[static_cast<std::size_t>(p)] ==
          doctest::Approx(b.marginals[static_cast<std::size_t>(p)]).epsilon(1e-12));
  // deterministic: identical bits across repeats
  const ExactPosterior c = enumerate_posterior(g, theta, 4);
  CHECK(b.log_partition == c.log_partition);
  CHECK(b.marginals == c.marginals);
}

TEST_CASE("enumerate: size cap") {
  Rng rng(27);
  const auto g = test::random_complete_graph(rng, 8);  // m = 56 > 20
  CHECK_THROWS_AS(enumerate_posterior(g, ModelParams{}), Error);
}

TEST_CASE("brute degree expectation: endpoints") {
  const std::vector<double> zeros{0.0, 0.0, 0.0};
  CHECK(brute_degree_expectation(zeros, 0) == doctest::Approx(1.0));
  CHECK(brute_degree_expectation(zeros, 1) == doctest::Approx(0.0));
  const std::vector<double> ones{1.0, 1.0};
  CHECK(brute_degree_expectation(ones, 2) == doctest::Approx(1.0));
  CHECK(brute_degree_expectation(ones, 1) == doctest::Approx(0.0));
  CHECK_THROWS_AS(brute_degree_expectation(std::vector<double>(11, 0.5), 1), Error);
}

TEST_CASE("numeric elbo derivative: entropy-only case is -logit") {
  Rng rng(30);
  const auto g = test::random_complete_graph(rng, 3);
  const EdgeBeliefs b = test::random_beliefs(rng, g, 0.2, 0.8);
  const auto& pairs = g.ordered_pairs();
  for (int p = 0; p < g.pair_count(); p += 2) {
    const double d = numeric_elbo_derivative(b, pairs[static_cast<std::size_t>(p)].from,
                                             pairs[static_cast<std::size_t>(p)].to, g,
                                             ModelParams{}, 1e-6);
    CHECK(d == doctest::Approx(-logit(b.alpha[static_cast<std::size_t>(p)])).epsilon(1e-7));
  }
}

TEST_CASE("numeric elbo derivative: centered difference is second order") {
  Rng rng(31);
  const auto g = test::random_complete_graph(rng, 3);
  EdgeBeliefs b = test::random_beliefs(rng, g, 0.25, 0.35);
  const auto pr = g.ordered_pairs().front();
  const double exact = -logit(b.alpha[0]);
  const double e1 = std::abs(numeric_elbo_derivative(b, pr.from, pr.to, g, ModelParams{}, 1e-3) - exact);
  const double e2 = std::abs(numeric_elbo_derivative(b, pr.from, pr.to, g, ModelParams{}, 5e-4) - exact);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("numeric elbo derivative: clamp-boundary precondition") {
  Rng rng(32);
  const auto g = test::random_complete_graph(rng, 3);
  EdgeBeliefs b = test::random_beliefs(rng, g);
  b.alpha[0] = kBeliefClamp;
  const auto pr = g.ordered_pairs().front();
  CHECK_THROWS_AS(numeric_elbo_derivative(b, pr.from, pr.to, g, ModelParams{}, 1e-6), Error);
}

TEST_CASE("numeric param gradient: constant and quadratic losses") {
  const ModelParams at = init_params(77, 0.5);

  const GradientSet zero = numeric_param_gradient([](const ModelParams&) { return 3.5; }, at, 1e-5);
  for (int i = 0; i < ModelParams::kCount; ++i) CHECK(zero.flat(i) == doctest::Approx(0.0));

  const GradientSet quad = numeric_param_gradient(
      [](const ModelParams& p) {
        double s = 0.0;
        for (int i = 0; i < ModelParams::kCount; ++i) s += p.flat(i) * p.flat(i);
        return 0.5 * s;
      },
      at, 1e-5);
  for (int i = 0; i < ModelParams::kCount; ++i)
    CHECK(quad.flat(i) == doctest::Approx(at.flat(i)).epsilon(1e-9));
}
