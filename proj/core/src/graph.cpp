#include "mfn/graph.hpp"

#include <algorithm>
#include <set>

namespace mfn {

void CandidateGraph::rebuild_pair_index() {
  const int n = node_count();
  pairs_.clear();
  pair_offset_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int k = 0; k < n; ++k) {
    pair_offset_[static_cast<std::size_t>(k)] = static_cast<int>(pairs_.size());
    for (int l : neighborhoods[static_cast<std::size_t>(k)]) pairs_.push_back({k, l});
  }
  pair_offset_[static_cast<std::size_t>(n)] = static_cast<int>(pairs_.size());

  reverse_.assign(pairs_.size(), -1);
  for (int p = 0; p < static_cast<int>(pairs_.size()); ++p) {
    reverse_[static_cast<std::size_t>(p)] = pair_index(pairs_[static_cast<std::size_t>(p)].to,
                                                       pairs_[static_cast<std::size_t>(p)].from);
  }
}

int CandidateGraph::pair_index(int k, int l) const {
  const auto& nbh = neighborhoods[static_cast<std::size_t>(k)];
  const auto it = std::lower_bound(nbh.begin(), nbh.end(), l);
  if (it == nbh.end() || *it != l) return -1;
  return pair_offset_[static_cast<std::size_t>(k)] + static_cast<int>(it - nbh.begin());
}

std::vector<std::uint8_t> CandidateGraph::gt_directed() const {
  std::vector<std::uint8_t> s(pairs_.size(), 0);
  for (const auto& [i, j] : gt_edges) {
    const int p = pair_index(i, j);
    const int q = pair_index(j, i);
    if (p >= 0) s[static_cast<std::size_t>(p)] = 1;
    if (q >= 0) s[static_cast<std::size_t>(q)] = 1;
  }
  return s;
}

double CandidateGraph::gt_coverage() const {
  if (gt_edges.empty()) return 1.0;
  int covered = 0;
  for (const auto& [i, j] : gt_edges)
    if (pair_index(i, j) >= 0 || pair_index(j, i) >= 0) ++covered;
  return static_cast<double>(covered) / static_cast<double>(gt_edges.size());
}

std::vector<std::vector<int>> build_knn_neighborhoods(const std::vector<NodeFeatures>& nodes,
                                                      int L) {
  const int n = static_cast<int>(nodes.size());
  if (n < 2) throw Error("empty-graph: need at least 2 nodes, got " + std::to_string(n));
  if (L < 1) throw Error("empty-graph: L must be >= 1");

  std::vector<Vec3> pos(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) pos[i] = nodes[i].position();

  const int take = std::min(L, n - 1);
  std::vector<std::vector<int>> nbh(nodes.size());
  std::vector<std::pair<double, int>> cand;
  cand.reserve(nodes.size());
  for (int k = 0; k < n; ++k) {
    cand.clear();
    for (int j = 0; j < n; ++j) {
      if (j == k) continue;
      cand.emplace_back(distance_sq(pos[static_cast<std::size_t>(k)], pos[static_cast<std::size_t>(j)]), j);
    }
    std::partial_sort(cand.begin(), cand.begin() + take, cand.end());
    auto& out = nbh[static_cast<std::size_t>(k)];
    out.reserve(static_cast<std::size_t>(take));
    for (int t = 0; t < take; ++t) out.push_back(cand[static_cast<std::size_t>(t)].second);
    std::sort(out.begin(), out.end());
  }
  return nbh;
}

std::vector<std::vector<int>> symmetrize_neighborhoods(std::vector<std::vector<int>> nbh) {
  const int n = static_cast<int>(nbh.size());
  std::vector<std::vector<int>> extra(nbh.size());
  for (int k = 0; k < n; ++k)
    for (int l : nbh[static_cast<std::size_t>(k)]) extra[static_cast<std::size_t>(l)].push_back(k);
  for (int k = 0; k < n; ++k) {
    auto& out = nbh[static_cast<std::size_t>(k)];
    out.insert(out.end(), extra[static_cast<std::size_t>(k)].begin(), extra[static_cast<std::size_t>(k)].end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return nbh;
}

std::vector<ValidationIssue> validate_graph(const CandidateGraph& g) {
  std::vector<ValidationIssue> issues;
  const int n = g.node_count();

  for (int i = 0; i < n; ++i) {
    const auto& node = g.nodes[static_cast<std::size_t>(i)];
    if (!node.finite()) {
      issues.push_back({"non-finite", "node " + std::to_string(i) + " has non-finite feature"});
      continue;
    }
    if (node.radius() <= 0.0)
      issues.push_back({"radius", "node " + std::to_string(i) + " has non-positive radius mean"});
    for (int c = NodeFeatures::kVarBase; c < kFeatureDim; ++c)
      if (node.x[static_cast<std::size_t>(c)] < 0.0) {
        issues.push_back({"variance", "node " + std::to_string(i) + " has negative variance"});
        break;
      }
  }

  if (static_cast<int>(g.neighborhoods.size()) != n) {
    issues.push_back({"asymmetric", "neighborhood map size != node count"});
    return issues;
  }

  for (int k = 0; k < n; ++k) {
    for (int l : g.neighbors(k)) {
      if (l == k) {
        issues.push_back({"self-pair", "node " + std::to_string(k) + " lists itself"});
        continue;
      }
      if (l < 0 || l >= n) {
        issues.push_back({"asymmetric", "neighbor index out of range at node " + std::to_string(k)});
        continue;
      }
      const auto& back = g.neighbors(l);
      if (!std::binary_search(back.begin(), back.end(), k))
        issues.push_back({"asymmetric",
                          "pair (" + std::to_string(k) + "," + std::to_string(l) + ") lacks reverse"});
    }
  }

  for (const auto& [i, j] : g.gt_edges) {
    if (i < 0 || i >= n || j < 0 || j >= n || i == j) {
      issues.push_back({"gt-range", "gt edge (" + std::to_string(i) + "," + std::to_string(j) + ") out of range"});
      continue;
    }
    if (g.pair_index(i, j) < 0 && g.pair_index(j, i) < 0)
      issues.push_back({"uncovered-gt",
                        "gt edge (" + std::to_string(i) + "," + std::to_string(j) + ") not in candidate set"});
  }
  return issues;
}

CandidateGraph make_candidate_graph(std::vector<NodeFeatures> nodes, int L,
                                    std::vector<std::pair<int, int>> gt_edges) {
  CandidateGraph g;
  g.nodes = std::move(nodes);
  g.neighborhoods = symmetrize_neighborhoods(build_knn_neighborhoods(g.nodes, L));
  g.knn_L = L;
  for (auto& [i, j] : gt_edges)
    if (i > j) std::swap(i, j);
  std::sort(gt_edges.begin(), gt_edges.end());
  gt_edges.erase(std::unique(gt_edges.begin(), gt_edges.end()), gt_edges.end());
  g.gt_edges = std::move(gt_edges);
  g.rebuild_pair_index();
  return g;
}

std::string ModelParams::component_name(int i) {
  if (i < 3) return "beta" + std::to_string(i);
  if (i == 3) return "lambda";
  i -= 4;
  if (i < kFeatureDim) return "a[" + std::to_string(i) + "]";
  i -= kFeatureDim;
  if (i < kFeatureDim) return "eta[" + std::to_string(i) + "]";
  i -= kFeatureDim;
  return "nu[" + std::to_string(i) + "]";
}

}  // namespace mfn
