#pragma once

#include <vector>

#include "mfn/types.hpp"

namespace mfn {

// Static 3D kd-tree for nearest-neighbour queries over point sets.
class KdTree3 {
 public:
  KdTree3() = default;
  explicit KdTree3(std::vector<Vec3> points);

  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }

  // Index (into the constructor's point list) of the closest point; the
  // squared distance is written to dist_sq when non-null.
  int nearest(const Vec3& query, double* dist_sq = nullptr) const;

 private:
  struct Node {
    Vec3 p;
    int index;  // position in the input list
    int axis;
    int left = -1, right = -1;
  };
  int build(std::vector<std::pair<Vec3, int>>& pts, int lo, int hi);
  void search(int node, const Vec3& q, int& best, double& best_sq) const;

  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace mfn
