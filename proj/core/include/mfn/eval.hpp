#pragma once

#include <span>
#include <utility>
#include <vector>

#include "mfn/beliefs.hpp"
#include "mfn/graph.hpp"
#include "mfn/types.hpp"

namespace mfn {

// Centerline distance triple: d_err = (d_FP + d_FN) / 2.
struct CenterlineResult {
  double d_fp = 0.0;
  double d_fn = 0.0;
  double d_err = 0.0;

  static CenterlineResult from_components(double d_fp, double d_fn) {
    return {d_fp, d_fn, (d_fp + d_fn) / 2.0};
  }
};

struct EdgeMetrics {
  long tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double binary_accuracy = 0.0;
};

EdgeMetrics metrics_from_counts(long tp, long fp, long fn, long tn);

// Counts over ordered candidate pairs; pred and gt must share the key set.
EdgeMetrics edge_metrics(const AdjacencyEstimate& pred, const AdjacencyEstimate& gt);

// Undirected metrics over the union of undirected candidate pairs and gt
// edges; gt edges missing from the candidate set count as false negatives.
EdgeMetrics undirected_edge_metrics(const CandidateGraph& g,
                                    const std::vector<std::pair<int, int>>& pred_edges);

// Points along each edge segment at arc-length spacing <= step, endpoints
// included; duplicates within step/10 are emitted once.
std::vector<Vec3> sample_centerline_points(const CandidateGraph& g,
                                           const std::vector<std::pair<int, int>>& edges,
                                           double step);

// d_FP: mean over pred of min distance to ref; d_FN: the reverse.
CenterlineResult centerline_distance(std::span<const Vec3> pred_points,
                                     std::span<const Vec3> ref_points);

}  // namespace mfn
