#include "mfn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "mfn/kdtree.hpp"

namespace mfn {

EdgeMetrics metrics_from_counts(long tp, long fp, long fn, long tn) {
  EdgeMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp)
                              : (fn == 0 ? 1.0 : 0.0);
  m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn)
                           : (fp == 0 ? 1.0 : 0.0);
  m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                        : 0.0;
  const long total = tp + fp + fn + tn;
  m.binary_accuracy = total > 0 ? static_cast<double>(tp + tn) / static_cast<double>(total) : 1.0;
  return m;
}

EdgeMetrics edge_metrics(const AdjacencyEstimate& pred, const AdjacencyEstimate& gt) {
  if (pred.s.size() != gt.s.size())
    throw Error("structural: edge_metrics: pred and gt are keyed by different pair sets");
  long tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t q = 0; q < pred.s.size(); ++q) {
    if (pred.s[q] && gt.s[q]) ++tp;
    else if (pred.s[q]) ++fp;
    else if (gt.s[q]) ++fn;
    else ++tn;
  }
  return metrics_from_counts(tp, fp, fn, tn);
}

EdgeMetrics undirected_edge_metrics(const CandidateGraph& g,
                                    const std::vector<std::pair<int, int>>& pred_edges) {
  std::set<std::pair<int, int>> pred;
  for (auto [i, j] : pred_edges) pred.insert({std::min(i, j), std::max(i, j)});
  const std::set<std::pair<int, int>> gt(g.gt_edges.begin(), g.gt_edges.end());

  std::set<std::pair<int, int>> universe = gt;
  const auto& pairs = g.ordered_pairs();
  for (const auto& pr : pairs)
    if (pr.from < pr.to) universe.insert({pr.from, pr.to});

  long tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& e : universe) {
    const bool p = pred.count(e) > 0;
    const bool t = gt.count(e) > 0;
    if (p && t) ++tp;
    else if (p) ++fp;
    else if (t) ++fn;
    else ++tn;
  }
  return metrics_from_counts(tp, fp, fn, tn);
}

namespace {

// tolerance-bucketed dedup grid
struct DedupGrid {
  double tol;
  std::unordered_map<std::uint64_t, std::vector<Vec3>> cells;

  explicit DedupGrid(double t) : tol(t) {}

  static std::uint64_t key(long x, long y, long z) {
    auto h = [](long v) { return static_cast<std::uint64_t>(v + (1L << 30)); };
    return (h(x) << 42) ^ (h(y) << 21) ^ h(z);
  }

  bool insert(const Vec3& p) {
    const long cx = static_cast<long>(std::floor(p[0] / tol));
    const long cy = static_cast<long>(std::floor(p[1] / tol));
    const long cz = static_cast<long>(std::floor(p[2] / tol));
    for (long dx = -1; dx <= 1; ++dx)
      for (long dy = -1; dy <= 1; ++dy)
        for (long dz = -1; dz <= 1; ++dz) {
          const auto it = cells.find(key(cx + dx, cy + dy, cz + dz));
          if (it == cells.end()) continue;
          for (const Vec3& q : it->second)
            if (distance_sq(p, q) <= tol * tol) return false;
        }
    cells[key(cx, cy, cz)].push_back(p);
    return true;
  }
};

}  // namespace

std::vector<Vec3> sample_centerline_points(const CandidateGraph& g,
                                           const std::vector<std::pair<int, int>>& edges,
                                           double step) {
  if (step <= 0.0) throw Error("domain: sample step must be > 0");
  std::vector<Vec3> points;
  DedupGrid grid(step / 10.0);

  for (const auto& [i, j] : edges) {
    if (i < 0 || i >= g.node_count() || j < 0 || j >= g.node_count())
      throw Error("structural: edge endpoint out of range");
    const Vec3 a = g.nodes[static_cast<std::size_t>(i)].position();
    const Vec3 b = g.nodes[static_cast<std::size_t>(j)].position();
    const double len = distance(a, b);
    const int segments = len > 0.0 ? static_cast<int>(std::ceil(len / step)) : 0;
    for (int t = 0; t <= segments; ++t) {
      const double u = segments > 0 ? static_cast<double>(t) / segments : 0.0;
      const Vec3 p = {a[0] + (b[0] - a[0]) * u, a[1] + (b[1] - a[1]) * u,
                      a[2] + (b[2] - a[2]) * u};
      if (grid.insert(p)) points.push_back(p);
    }
  }
  return points;
}

CenterlineResult centerline_distance(std::span<const Vec3> pred_points,
                                     std::span<const Vec3> ref_points) {
  if (pred_points.empty() || ref_points.empty())
    throw Error("undefined-metric: centerline_distance needs non-empty point sets");

  const KdTree3 ref_tree(std::vector<Vec3>(ref_points.begin(), ref_points.end()));
  const KdTree3 pred_tree(std::vector<Vec3>(pred_points.begin(), pred_points.end()));

  double fp_sum = 0.0;
  for (const Vec3& p : pred_points) {
    double d_sq = 0.0;
    ref_tree.nearest(p, &d_sq);
    fp_sum += std::sqrt(d_sq);
  }
  double fn_sum = 0.0;
  for (const Vec3& p : ref_points) {
    double d_sq = 0.0;
    pred_tree.nearest(p, &d_sq);
    fn_sum += std::sqrt(d_sq);
  }
  return CenterlineResult::from_components(fp_sum / static_cast<double>(pred_points.size()),
                                           fn_sum / static_cast<double>(ref_points.size()));
}

}  // namespace mfn
