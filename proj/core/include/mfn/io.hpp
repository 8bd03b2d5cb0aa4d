#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mfn/beliefs.hpp"
#include "mfn/graph.hpp"
#include "mfn/synthgen.hpp"
#include "mfn/train.hpp"
#include "mfn/types.hpp"

namespace mfn {

// Graph file schema:
//   {"nodes":[{"id":0,"mean":[7],"var":[7]},...],
//    "gt_edges":[[i,j],...],
//    "meta":{"L":10,"fold":0,...}}
// Neighborhoods are not stored; loading rebuilds the symmetrized L-NN sets
// deterministically from the features and meta.L, which round-trips bit-exactly.
void save_graph(const CandidateGraph& g, const std::filesystem::path& path,
                const std::map<std::string, double>& extra_meta = {});
CandidateGraph load_graph(const std::filesystem::path& path, int L_override = -1);

// Model file schema: {"beta":[3],"lambda":x,"a":[14],"eta":[14],"nu":[14]}
void save_model(const ModelParams& p, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

// Checkpoint = model file content plus optimizer state and the epoch index.
void save_checkpoint(const ModelParams& p, const AdamState& adam, int epoch,
                     const std::filesystem::path& path);
struct Checkpoint {
  ModelParams params;
  AdamState adam;
  int epoch = 0;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Prediction file: directed beliefs plus the undirected thresholded edge set.
void save_prediction(const CandidateGraph& g, const EdgeBeliefs& b, const AdjacencyEstimate& est,
                     double tau, const std::filesystem::path& path);
struct Prediction {
  std::vector<OrderedPair> pairs;
  std::vector<double> alpha;
  std::vector<std::pair<int, int>> edges;
  double tau = 0.5;
};
Prediction load_prediction(const std::filesystem::path& path);

// Curves file: JSON lines, one record per epoch.
void save_curves(const std::vector<EpochRecord>& curves, const std::filesystem::path& path);

// Tree-generator config as a JSON file; absent keys keep their defaults.
TreeConfig load_tree_config(const std::filesystem::path& path);
void save_tree_config(const TreeConfig& cfg, const std::filesystem::path& path);

}  // namespace mfn
