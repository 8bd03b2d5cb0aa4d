#include "mfn/io.hpp"

#include <fstream>

#include <json.hpp>

namespace mfn {

namespace {

using nlohmann::json;

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io: cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("io: " + path.string() + ": " + e.what());
  }
  return j;
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("io: cannot write " + path.string());
  out << j.dump(2) << "\n";
}

template <std::size_t N>
std::array<double, N> to_array(const json& j, const char* what) {
  if (!j.is_array() || j.size() != N)
    throw Error("io: field " + std::string(what) + " must be an array of " + std::to_string(N));
  std::array<double, N> a{};
  for (std::size_t i = 0; i < N; ++i) a[i] = j[i].get<double>();
  return a;
}

json model_to_json(const ModelParams& p) {
  return json{{"beta", p.beta}, {"lambda", p.lambda}, {"a", p.a}, {"eta", p.eta}, {"nu", p.nu}};
}

ModelParams model_from_json(const json& j) {
  ModelParams p;
  p.beta = to_array<3>(j.at("beta"), "beta");
  p.lambda = j.at("lambda").get<double>();
  p.a = to_array<kFeatureDim>(j.at("a"), "a");
  p.eta = to_array<kFeatureDim>(j.at("eta"), "eta");
  p.nu = to_array<kFeatureDim>(j.at("nu"), "nu");
  if (!p.finite()) throw Error("io: model parameters must be finite");
  return p;
}

}  // namespace

void save_graph(const CandidateGraph& g, const std::filesystem::path& path,
                const std::map<std::string, double>& extra_meta) {
  json nodes = json::array();
  for (int i = 0; i < g.node_count(); ++i) {
    const auto& x = g.nodes[static_cast<std::size_t>(i)].x;
    json mean = json::array(), var = json::array();
    for (int c = 0; c < kMeanDim; ++c) {
      mean.push_back(x[static_cast<std::size_t>(c)]);
      var.push_back(x[static_cast<std::size_t>(c + kMeanDim)]);
    }
    nodes.push_back(json{{"id", i}, {"mean", mean}, {"var", var}});
  }
  json gt = json::array();
  for (const auto& [i, j] : g.gt_edges) gt.push_back(json::array({i, j}));

  json meta{{"L", g.knn_L}};
  if (g.fold >= 0) meta["fold"] = g.fold;
  for (const auto& [k, v] : extra_meta) meta[k] = v;

  write_json(json{{"nodes", nodes}, {"gt_edges", gt}, {"meta", meta}}, path);
}

CandidateGraph load_graph(const std::filesystem::path& path, int L_override) {
  const json j = read_json(path);
  if (!j.contains("nodes") || !j.at("nodes").is_array())
    throw Error("io: " + path.string() + ": missing nodes array");

  const auto& jn = j.at("nodes");
  std::vector<NodeFeatures> nodes(jn.size());
  std::vector<bool> seen(jn.size(), false);
  for (const auto& node : jn) {
    const int id = node.at("id").get<int>();
    if (id < 0 || id >= static_cast<int>(jn.size()) || seen[static_cast<std::size_t>(id)])
      throw Error("io: " + path.string() + ": node ids must be a permutation of 0..N-1");
    seen[static_cast<std::size_t>(id)] = true;
    const auto mean = to_array<kMeanDim>(node.at("mean"), "mean");
    const auto var = to_array<kMeanDim>(node.at("var"), "var");
    auto& x = nodes[static_cast<std::size_t>(id)].x;
    for (int c = 0; c < kMeanDim; ++c) {
      x[static_cast<std::size_t>(c)] = mean[static_cast<std::size_t>(c)];
      x[static_cast<std::size_t>(c + kMeanDim)] = var[static_cast<std::size_t>(c)];
    }
  }

  std::vector<std::pair<int, int>> gt;
  if (j.contains("gt_edges"))
    for (const auto& e : j.at("gt_edges")) gt.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());

  int L = 10;
  if (j.contains("meta") && j.at("meta").contains("L")) L = j.at("meta").at("L").get<int>();
  if (L_override > 0) L = L_override;

  CandidateGraph g = make_candidate_graph(std::move(nodes), L, std::move(gt));
  if (j.contains("meta") && j.at("meta").contains("fold"))
    g.fold = j.at("meta").at("fold").get<int>();
  return g;
}

void save_model(const ModelParams& p, const std::filesystem::path& path) {
  write_json(model_to_json(p), path);
}

ModelParams load_model(const std::filesystem::path& path) {
  return model_from_json(read_json(path));
}

void save_checkpoint(const ModelParams& p, const AdamState& adam, int epoch,
                     const std::filesystem::path& path) {
  write_json(json{{"model", model_to_json(p)},
                  {"adam", json{{"m", model_to_json(adam.m)},
                                {"v", model_to_json(adam.v)},
                                {"step", adam.step}}},
                  {"epoch", epoch}},
             path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const json j = read_json(path);
  Checkpoint c;
  c.params = model_from_json(j.at("model"));
  c.adam.m = model_from_json(j.at("adam").at("m"));
  c.adam.v = model_from_json(j.at("adam").at("v"));
  c.adam.step = j.at("adam").at("step").get<int>();
  c.epoch = j.at("epoch").get<int>();
  return c;
}

void save_prediction(const CandidateGraph& g, const EdgeBeliefs& b, const AdjacencyEstimate& est,
                     double tau, const std::filesystem::path& path) {
  check_keyed(b, g, "save_prediction");
  json pairs = json::array(), alpha = json::array(), edges = json::array();
  const auto& ps = g.ordered_pairs();
  for (int p = 0; p < g.pair_count(); ++p) {
    pairs.push_back(json::array({ps[static_cast<std::size_t>(p)].from, ps[static_cast<std::size_t>(p)].to}));
    alpha.push_back(b.alpha[static_cast<std::size_t>(p)]);
  }
  for (const auto& [i, j] : est.undirected_edges) edges.push_back(json::array({i, j}));
  write_json(json{{"pairs", pairs}, {"alpha", alpha}, {"edges", edges}, {"meta", json{{"tau", tau}}}},
             path);
}

Prediction load_prediction(const std::filesystem::path& path) {
  const json j = read_json(path);
  Prediction pred;
  for (const auto& p : j.at("pairs")) pred.pairs.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
  for (const auto& a : j.at("alpha")) pred.alpha.push_back(clamp_belief(a.get<double>()));
  for (const auto& e : j.at("edges")) pred.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  if (pred.pairs.size() != pred.alpha.size())
    throw Error("io: " + path.string() + ": pairs/alpha length mismatch");
  if (j.contains("meta") && j.at("meta").contains("tau")) pred.tau = j.at("meta").at("tau").get<double>();
  return pred;
}

void save_curves(const std::vector<EpochRecord>& curves, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("io: cannot write " + path.string());
  for (const auto& r : curves) {
    json j{{"epoch", r.epoch},         {"train_loss", r.train_loss}, {"val_loss", r.val_loss},
           {"train_acc", r.train_acc}, {"val_acc", r.val_acc},       {"elbo_per_layer", r.elbo_per_layer}};
    out << j.dump() << "\n";
  }
}

TreeConfig load_tree_config(const std::filesystem::path& path) {
  const json j = read_json(path);
  TreeConfig cfg;
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("depth", cfg.depth);
  get("branch_length_min", cfg.branch_length_min);
  get("branch_length_max", cfg.branch_length_max);
  get("root_radius", cfg.root_radius);
  get("radius_decay", cfg.radius_decay);
  get("node_spacing", cfg.node_spacing);
  get("branching_angle_min", cfg.branching_angle_min);
  get("branching_angle_max", cfg.branching_angle_max);
  get("clutter_fraction", cfg.clutter_fraction);
  get("position_noise", cfg.position_noise);
  get("radius_noise", cfg.radius_noise);
  get("orientation_noise", cfg.orientation_noise);
  get("knn_L", cfg.knn_L);
  get("seed", cfg.seed);
  if (j.contains("variance_min")) cfg.variance_min = to_array<kMeanDim>(j.at("variance_min"), "variance_min");
  if (j.contains("variance_max")) cfg.variance_max = to_array<kMeanDim>(j.at("variance_max"), "variance_max");
  cfg.validate();
  return cfg;
}

void save_tree_config(const TreeConfig& cfg, const std::filesystem::path& path) {
  write_json(json{{"depth", cfg.depth},
                  {"branch_length_min", cfg.branch_length_min},
                  {"branch_length_max", cfg.branch_length_max},
                  {"root_radius", cfg.root_radius},
                  {"radius_decay", cfg.radius_decay},
                  {"node_spacing", cfg.node_spacing},
                  {"branching_angle_min", cfg.branching_angle_min},
                  {"branching_angle_max", cfg.branching_angle_max},
                  {"clutter_fraction", cfg.clutter_fraction},
                  {"position_noise", cfg.position_noise},
                  {"radius_noise", cfg.radius_noise},
                  {"orientation_noise", cfg.orientation_noise},
                  {"variance_min", cfg.variance_min},
                  {"variance_max", cfg.variance_max},
                  {"knn_L", cfg.knn_L},
                  {"seed", cfg.seed}},
             path);
}

}  // namespace mfn
