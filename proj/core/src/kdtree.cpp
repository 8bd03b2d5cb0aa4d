#include "mfn/kdtree.hpp"

#include <algorithm>
#include <limits>

namespace mfn {

KdTree3::KdTree3(std::vector<Vec3> points) {
  std::vector<std::pair<Vec3, int>> pts;
  pts.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) pts.emplace_back(points[i], static_cast<int>(i));
  nodes_.reserve(points.size());
  if (!pts.empty()) root_ = build(pts, 0, static_cast<int>(pts.size()));
}

int KdTree3::build(std::vector<std::pair<Vec3, int>>& pts, int lo, int hi) {
  if (lo >= hi) return -1;

  // split on the widest axis of this range
  Vec3 mn = pts[static_cast<std::size_t>(lo)].first, mx = mn;
  for (int i = lo + 1; i < hi; ++i)
    for (int c = 0; c < 3; ++c) {
      mn[static_cast<std::size_t>(c)] = std::min(mn[static_cast<std::size_t>(c)],
                                                 pts[static_cast<std::size_t>(i)].first[static_cast<std::size_t>(c)]);
      mx[static_cast<std::size_t>(c)] = std::max(mx[static_cast<std::size_t>(c)],
                                                 pts[static_cast<std::size_t>(i)].first[static_cast<std::size_t>(c)]);
    }
  int axis = 0;
  for (int c = 1; c < 3; ++c)
    if (mx[static_cast<std::size_t>(c)] - mn[static_cast<std::size_t>(c)] >
        mx[static_cast<std::size_t>(axis)] - mn[static_cast<std::size_t>(axis)])
      axis = c;

  const int mid = lo + (hi - lo) / 2;
  std::nth_element(pts.begin() + lo, pts.begin() + mid, pts.begin() + hi,
                   [axis](const auto& a, const auto& b) {
                     return a.first[static_cast<std::size_t>(axis)] < b.first[static_cast<std::size_t>(axis)];
                   });

  Node n;
  n.p = pts[static_cast<std::size_t>(mid)].first;
  n.index = pts[static_cast<std::size_t>(mid)].second;
  n.axis = axis;
  const int self = static_cast<int>(nodes_.size());
  nodes_.push_back(n);
  const int left = build(pts, lo, mid);
  const int right = build(pts, mid + 1, hi);
  nodes_[static_cast<std::size_t>(self)].left = left;
  nodes_[static_cast<std::size_t>(self)].right = right;
  return self;
}

void KdTree3::search(int node, const Vec3& q, int& best, double& best_sq) const {
  if (node < 0) return;
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  const double d = distance_sq(n.p, q);
  if (d < best_sq) {
    best_sq = d;
    best = n.index;
  }
  const double delta = q[static_cast<std::size_t>(n.axis)] - n.p[static_cast<std::size_t>(n.axis)];
  const int near = delta < 0.0 ? n.left : n.right;
  const int far = delta < 0.0 ? n.right : n.left;
  search(near, q, best, best_sq);
  if (delta * delta < best_sq) search(far, q, best, best_sq);
}

int KdTree3::nearest(const Vec3& query, double* dist_sq) const {
  if (nodes_.empty()) {
    if (dist_sq) *dist_sq = std::numeric_limits<double>::infinity();
    return -1;
  }
  int best = -1;
  double best_sq = std::numeric_limits<double>::infinity();
  search(root_, query, best, best_sq);
  if (dist_sq) *dist_sq = best_sq;
  return best;
}

}  // namespace mfn
