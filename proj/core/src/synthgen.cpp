#include "mfn/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "mfn/rng.hpp"

namespace mfn {

namespace {

Vec3 scaled(const Vec3& v, double s) { return {v[0] * s, v[1] * s, v[2] * s}; }

Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }

double norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

Vec3 normalized(const Vec3& v) {
  const double n = norm(v);
  return {v[0] / n, v[1] / n, v[2] / n};
}

double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

// deterministic orthonormal pair completing u
std::pair<Vec3, Vec3> orthonormal_basis(const Vec3& u) {
  const Vec3 ref = std::abs(u[0]) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
  Vec3 e1 = {u[1] * ref[2] - u[2] * ref[1], u[2] * ref[0] - u[0] * ref[2],
             u[0] * ref[1] - u[1] * ref[0]};
  e1 = normalized(e1);
  const Vec3 e2 = {u[1] * e1[2] - u[2] * e1[1], u[2] * e1[0] - u[0] * e1[2],
                   u[0] * e1[1] - u[1] * e1[0]};
  return {e1, e2};
}

std::array<double, kMeanDim> sample_variances(Rng& rng, const TreeConfig& cfg) {
  std::array<double, kMeanDim> v{};
  for (int c = 0; c < kMeanDim; ++c)
    v[static_cast<std::size_t>(c)] = rng.uniform(cfg.variance_min[static_cast<std::size_t>(c)],
                                                 cfg.variance_max[static_cast<std::size_t>(c)]);
  return v;
}

}  // namespace

void TreeConfig::validate() const {
  if (depth < 0) throw Error("config: depth must be >= 0");
  if (branch_length_min <= 0.0 || branch_length_max < branch_length_min)
    throw Error("config: branch length range must satisfy 0 < min <= max");
  if (root_radius <= 0.0) throw Error("config: root_radius must be > 0");
  if (radius_decay <= 0.0 || radius_decay >= 1.0) throw Error("config: radius_decay must lie in (0, 1)");
  if (node_spacing <= 0.0) throw Error("config: node_spacing must be > 0");
  if (branching_angle_min < 0.0 || branching_angle_max < branching_angle_min)
    throw Error("config: branching angle range invalid");
  if (clutter_fraction < 0.0 || clutter_fraction >= 1.0)
    throw Error("config: clutter_fraction must lie in [0, 1)");
  if (position_noise < 0.0 || radius_noise < 0.0 || orientation_noise < 0.0)
    throw Error("config: noise sigmas must be >= 0");
  for (int c = 0; c < kMeanDim; ++c)
    if (variance_min[static_cast<std::size_t>(c)] < 0.0 ||
        variance_max[static_cast<std::size_t>(c)] < variance_min[static_cast<std::size_t>(c)])
      throw Error("config: variance ranges invalid");
  if (knn_L < 1) throw Error("config: knn_L must be >= 1");
}

CandidateGraph generate_tree(const TreeConfig& config) {
  config.validate();
  Rng rng(config.seed);

  struct Branch {
    Vec3 origin;
    Vec3 direction;
    double radius;
    int generation;
    int parent_node;  // node to attach the first node of this branch to
  };

  std::vector<NodeFeatures> nodes;
  std::vector<std::pair<int, int>> gt;
  std::deque<Branch> queue;
  queue.push_back({{0.0, 0.0, 0.0}, {0.0, 0.0, 1.0}, config.root_radius, 0, -1});

  while (!queue.empty()) {
    const Branch br = queue.front();
    queue.pop_front();

    const double length = rng.uniform(config.branch_length_min, config.branch_length_max);
    const double step = config.node_spacing * br.radius;
    const int segments = std::max(1, static_cast<int>(std::floor(length / step)));

    int prev = br.parent_node;
    int first = -1, last = -1;
    // root branch gets an explicit node at its origin
    const int j0 = br.parent_node < 0 ? 0 : 1;
    for (int j = j0; j <= segments; ++j) {
      const Vec3 pos = add(br.origin, scaled(br.direction, step * j));
      nodes.push_back(make_node(pos, br.radius, br.direction, sample_variances(rng, config)));
      const int id = static_cast<int>(nodes.size()) - 1;
      if (prev >= 0) gt.emplace_back(prev, id);
      if (first < 0) first = id;
      prev = id;
      last = id;
    }

    if (br.generation < config.depth && last >= 0) {
      const Vec3 tip = add(br.origin, scaled(br.direction, step * segments));
      const auto [e1, e2] = orthonormal_basis(br.direction);
      const double phi = rng.uniform(0.0, 2.0 * M_PI);
      for (int child = 0; child < 2; ++child) {
        const double theta = rng.uniform(config.branching_angle_min, config.branching_angle_max);
        const double az = phi + child * M_PI;
        const Vec3 lateral = add(scaled(e1, std::cos(az)), scaled(e2, std::sin(az)));
        const Vec3 dir = normalized(add(scaled(br.direction, std::cos(theta)),
                                        scaled(lateral, std::sin(theta))));
        queue.push_back({tip, dir, br.radius * config.radius_decay, br.generation + 1, last});
      }
    }
  }

  if (nodes.size() < 2) throw Error("degenerate: tree config produced fewer than 2 nodes");
  CandidateGraph g = make_candidate_graph(std::move(nodes), config.knn_L, std::move(gt));
  return g;
}

CorruptResult corrupt(const CandidateGraph& g, const TreeConfig& config) {
  config.validate();
  Rng rng(Rng::mix(config.seed, 0xC107733));

  std::vector<NodeFeatures> nodes = g.nodes;

  Vec3 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
          std::numeric_limits<double>::max()};
  Vec3 hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
          std::numeric_limits<double>::lowest()};
  double rmin = std::numeric_limits<double>::max(), rmax = 0.0;
  for (const auto& n : nodes) {
    const Vec3 p = n.position();
    for (int c = 0; c < 3; ++c) {
      lo[static_cast<std::size_t>(c)] = std::min(lo[static_cast<std::size_t>(c)], p[static_cast<std::size_t>(c)]);
      hi[static_cast<std::size_t>(c)] = std::max(hi[static_cast<std::size_t>(c)], p[static_cast<std::size_t>(c)]);
    }
    rmin = std::min(rmin, n.radius());
    rmax = std::max(rmax, n.radius());
  }

  // perturb true-node feature means
  for (auto& n : nodes) {
    const double r = n.radius();
    for (int c = 0; c < 3; ++c)
      n.x[static_cast<std::size_t>(c)] += rng.normal(0.0, config.position_noise * r);
    n.x[NodeFeatures::kRadius] = std::max(1e-3 * r, r * (1.0 + rng.normal(0.0, config.radius_noise)));
    const Vec3 v = n.orientation();
    const double angle = rng.normal(0.0, config.orientation_noise);
    Vec3 u = rng.unit_vector();
    Vec3 w = add(u, scaled(v, -dot3(u, v)));  // component orthogonal to v
    const double wn = norm(w);
    if (wn > 1e-12) {
      w = scaled(w, 1.0 / wn);
      const Vec3 rotated = add(scaled(v, std::cos(angle)), scaled(w, std::sin(angle)));
      n.x[NodeFeatures::kOriX] = rotated[0];
      n.x[NodeFeatures::kOriY] = rotated[1];
      n.x[NodeFeatures::kOriZ] = rotated[2];
    }
  }

  // clutter drawn from the same marginal ranges as the true nodes
  const int n_clutter = static_cast<int>(std::llround(config.clutter_fraction *
                                                      static_cast<double>(g.node_count())));
  for (int i = 0; i < n_clutter; ++i) {
    Vec3 pos;
    for (int c = 0; c < 3; ++c)
      pos[static_cast<std::size_t>(c)] =
          rng.uniform(lo[static_cast<std::size_t>(c)], hi[static_cast<std::size_t>(c)]);
    const double radius = rng.uniform(rmin, rmax);
    nodes.push_back(make_node(pos, radius, rng.unit_vector(), sample_variances(rng, config)));
  }

  CorruptResult out;
  out.graph = make_candidate_graph(std::move(nodes), config.knn_L, g.gt_edges);
  out.graph.fold = g.fold;
  out.gt_coverage = out.graph.gt_coverage();
  return out;
}

Dataset make_dataset(int n_trees, const TreeConfig& config, std::uint64_t seed) {
  if (n_trees < 4) throw Error("config: make_dataset needs n_trees >= 4");
  Dataset ds;
  ds.graphs.reserve(static_cast<std::size_t>(n_trees));
  for (int i = 0; i < n_trees; ++i) {
    TreeConfig cfg = config;
    cfg.seed = Rng::mix(seed, static_cast<std::uint64_t>(i));
    CorruptResult cr = corrupt(generate_tree(cfg), cfg);
    cr.graph.fold = i % 4;
    ds.graphs.push_back(std::move(cr.graph));
    ds.gt_coverage.push_back(cr.gt_coverage);
  }
  return ds;
}

}  // namespace mfn
