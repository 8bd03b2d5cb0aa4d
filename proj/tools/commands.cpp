#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "mfn/eval.hpp"
#include "mfn/io.hpp"
#include "mfn/mfa.hpp"
#include "mfn/oracle.hpp"
#include "mfn/synthgen.hpp"
#include "mfn/train.hpp"

namespace mfn::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(const json& config) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx",
                static_cast<unsigned long long>(fnv1a(config.dump())));
  return buf;
}

// Every directory-producing command documents itself with exactly one
// manifest.json; single-file commands write a <file>.manifest.json sidecar.
void write_manifest(const fs::path& path, const std::string& command, const json& config,
                    std::uint64_t seed, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, double duration_seconds) {
  json j{{"command", command},
         {"config", config},
         {"config_hash", hash_hex(config)},
         {"seed", seed},
         {"inputs", inputs},
         {"outputs", outputs},
         {"tool_version", kToolVersion},
         {"duration_seconds", duration_seconds}};
  std::ofstream out(path);
  if (!out) throw Error("io: cannot write " + path.string());
  out << j.dump(2) << "\n";
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<fs::path> list_graph_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("io: not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (entry.path().extension() != ".json") continue;
    if (name == "manifest.json" || name.ends_with(".pred.json") ||
        name.ends_with(".manifest.json") || name == "config.json")
      continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("io: no graph files in " + dir.string());
  return files;
}

json metrics_to_json(const EdgeMetrics& m) {
  return json{{"tp", m.tp},
              {"fp", m.fp},
              {"fn", m.fn},
              {"tn", m.tn},
              {"precision", m.precision},
              {"recall", m.recall},
              {"f1", m.f1},
              {"binary_accuracy", m.binary_accuracy}};
}

json centerline_to_json(const CenterlineResult& c) {
  return json{{"d_FP", c.d_fp}, {"d_FN", c.d_fn}, {"d_err", c.d_err}};
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    if (!out) throw Error("io: cannot write " + out_path);
    out << j.dump(2) << "\n";
  }
}

struct MeanStd {
  double mean = 0.0, std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd ms;
  if (xs.empty()) return ms;
  for (double x : xs) ms.mean += x;
  ms.mean /= static_cast<double>(xs.size());
  for (double x : xs) ms.std += (x - ms.mean) * (x - ms.mean);
  ms.std = std::sqrt(ms.std / static_cast<double>(xs.size()));
  return ms;
}

json eval_one(const CandidateGraph& g, const Prediction& pred, double step) {
  if (static_cast<int>(pred.alpha.size()) != g.pair_count())
    throw Error("structural: prediction is keyed by a different candidate-pair set than the graph");
  for (std::size_t p = 0; p < pred.pairs.size(); ++p) {
    if (g.pair_index(pred.pairs[p].from, pred.pairs[p].to) != static_cast<int>(p))
      throw Error("structural: prediction pair list does not match the graph");
  }

  AdjacencyEstimate est;
  est.s.resize(pred.alpha.size());
  for (std::size_t p = 0; p < pred.alpha.size(); ++p) est.s[p] = pred.alpha[p] > pred.tau ? 1 : 0;
  est.undirected_edges = pred.edges;

  const EdgeMetrics directed = edge_metrics(est, gt_estimate(g));
  const EdgeMetrics undirected = undirected_edge_metrics(g, pred.edges);

  json out{{"edge_metrics", metrics_to_json(directed)},
           {"undirected_edge_metrics", metrics_to_json(undirected)}};

  const auto ref_points = sample_centerline_points(g, g.gt_edges, step);
  if (pred.edges.empty() || ref_points.empty()) {
    out["centerline"] = nullptr;  // undefined on empty point sets
  } else {
    const auto pred_points = sample_centerline_points(g, pred.edges, step);
    out["centerline"] = centerline_to_json(centerline_distance(pred_points, ref_points));
  }
  return out;
}

}  // namespace

int cmd_generate(const GenerateArgs& args) {
  const auto t0 = Clock::now();
  TreeConfig cfg = args.config_path.empty() ? TreeConfig{} : load_tree_config(args.config_path);
  if (args.n_trees < 4) throw Error("config: generate needs --n >= 4");

  fs::create_directories(args.out_dir);
  Dataset ds = make_dataset(args.n_trees, cfg, args.seed);

  std::vector<std::string> outputs;
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "graph_%03zu.json", i);
    const fs::path path = fs::path(args.out_dir) / name;
    save_graph(ds.graphs[i], path, {{"gt_coverage", ds.gt_coverage[i]}});
    outputs.push_back(name);
  }

  json jcfg;
  {
    const fs::path tmp = fs::path(args.out_dir) / "config.json";
    save_tree_config(cfg, tmp);
    std::ifstream in(tmp);
    in >> jcfg;
  }
  jcfg["n_trees"] = args.n_trees;

  write_manifest(fs::path(args.out_dir) / "manifest.json", "generate", jcfg, args.seed,
                 args.config_path.empty() ? std::vector<std::string>{}
                                          : std::vector<std::string>{args.config_path},
                 outputs, seconds_since(t0));
  std::cout << "generated " << ds.graphs.size() << " graphs in " << args.out_dir << "\n";
  return 0;
}

int cmd_train(const TrainArgs& args) {
  const auto t0 = Clock::now();
  const auto files = list_graph_files(args.data_dir);

  std::vector<CandidateGraph> dataset;
  std::vector<std::string> inputs;
  dataset.reserve(files.size());
  for (const auto& f : files) {
    dataset.push_back(load_graph(f, args.knn_L > 0 ? args.knn_L : -1));
    inputs.push_back(f.string());
  }

  TrainConfig cfg;
  cfg.layers = args.layers;
  cfg.batch_nodes = args.batch_nodes;
  cfg.knn_L = args.knn_L > 0 ? args.knn_L : cfg.knn_L;
  cfg.epochs = args.epochs;
  cfg.learning_rate = args.learning_rate;
  cfg.lr_decay = args.lr_decay;
  cfg.alpha0 = args.alpha0;
  cfg.positive_weight = args.positive_weight;
  cfg.init_scale = args.init_scale;
  cfg.patience = args.patience;
  cfg.unroll_warmup_epochs = args.warmup_epochs;
  cfg.seed = args.seed;
  cfg.validation_fold = args.fold;
  cfg.fold_count = args.folds;

  TrainResult result = train(dataset, cfg);

  fs::create_directories(args.out_dir);
  save_model(result.params, fs::path(args.out_dir) / "model.json");
  save_checkpoint(result.params, result.adam, result.best_epoch,
                  fs::path(args.out_dir) / "checkpoint.json");
  save_curves(result.curves, fs::path(args.out_dir) / "curves.jsonl");

  json jcfg{{"layers", cfg.layers},       {"batch_nodes", cfg.batch_nodes},
            {"knn_L", cfg.knn_L},         {"epochs", cfg.epochs},
            {"learning_rate", cfg.learning_rate}, {"lr_decay", cfg.lr_decay},
            {"alpha0", cfg.alpha0},       {"positive_weight", cfg.positive_weight},
            {"init_scale", cfg.init_scale}, {"patience", cfg.patience},
            {"unroll_warmup_epochs", cfg.unroll_warmup_epochs},
            {"validation_fold", cfg.validation_fold}, {"fold_count", cfg.fold_count}};
  write_manifest(fs::path(args.out_dir) / "manifest.json", "train", jcfg, args.seed, inputs,
                 {"model.json", "checkpoint.json", "curves.jsonl"}, seconds_since(t0));

  const auto& last = result.curves.back();
  std::cout << "trained " << result.curves.size() - 1 << " epochs; best epoch "
            << result.best_epoch << "; val_loss " << last.val_loss << "; val_acc "
            << last.val_acc << "\n";
  return 0;
}

int cmd_infer(const InferArgs& args) {
  const auto t0 = Clock::now();
  const ModelParams theta = load_model(args.model_path);
  const CandidateGraph g = load_graph(args.graph_path, args.knn_L > 0 ? args.knn_L : -1);

  auto [beliefs, tape] = forward(g, theta, args.layers, args.alpha0);
  const AdjacencyEstimate est = threshold(beliefs, g, args.tau);
  save_prediction(g, beliefs, est, args.tau, args.out_path);

  if (!args.trajectory_path.empty()) {
    const auto traj = run_mfa(uniform_beliefs(g, args.alpha0), g, theta,
                              MfaSchedule(MfaMode::kParallel, args.layers, 0.0));
    json layers = json::array();
    for (const auto& layer : traj) {
      double mean_alpha = 0.0;
      for (double a : layer.beliefs.alpha) mean_alpha += a;
      if (!layer.beliefs.alpha.empty()) mean_alpha /= static_cast<double>(layer.beliefs.alpha.size());
      layers.push_back(json{{"layer", layer.beliefs.layer},
                            {"elbo", json{{"node_term", layer.elbo.node_term},
                                          {"pairwise_term", layer.elbo.pairwise_term},
                                          {"entropy_term", layer.elbo.entropy_term},
                                          {"total", layer.elbo.total}}},
                            {"mean_alpha", mean_alpha},
                            {"edges_over_tau", threshold(layer.beliefs, g, args.tau).undirected_edges.size()}});
    }
    emit(json{{"layers", layers}}, args.trajectory_path);
  }

  json jcfg{{"layers", args.layers}, {"alpha0", args.alpha0}, {"tau", args.tau}};
  write_manifest(args.out_path + ".manifest.json", "infer", jcfg, 0,
                 {args.model_path, args.graph_path}, {args.out_path}, seconds_since(t0));
  std::cout << "inferred " << est.undirected_edges.size() << " undirected edges ("
            << g.pair_count() << " directed beliefs)\n";
  return 0;
}

int cmd_eval(const EvalArgs& args) {
  std::vector<std::pair<fs::path, fs::path>> jobs;  // (pred, graph)
  if (fs::is_directory(args.pred_path)) {
    if (args.data_dir.empty())
      throw Error("config: eval with a prediction directory needs --data");
    // the predictions define the evaluated set (e.g. one fold); each
    // <stem>.pred.json pairs with <data>/<stem>.json
    std::vector<fs::path> preds;
    for (const auto& entry : fs::directory_iterator(args.pred_path))
      if (entry.is_regular_file() && entry.path().filename().string().ends_with(".pred.json"))
        preds.push_back(entry.path());
    std::sort(preds.begin(), preds.end());
    if (preds.empty()) throw Error("io: no *.pred.json files in " + args.pred_path);
    for (const auto& pred : preds) {
      std::string stem = pred.filename().string();
      stem.erase(stem.size() - std::string(".pred.json").size());
      const fs::path graph = fs::path(args.data_dir) / (stem + ".json");
      if (!fs::exists(graph))
        throw Error("io: missing graph " + graph.string() + " for prediction " + pred.string());
      jobs.emplace_back(pred, graph);
    }
  } else {
    if (args.graph_path.empty()) throw Error("config: eval needs --graph with a single prediction");
    jobs.emplace_back(args.pred_path, args.graph_path);
  }

  json per_graph = json::array();
  std::vector<double> derrs, f1s, accs;
  for (const auto& [pred_path, graph_path] : jobs) {
    const CandidateGraph g = load_graph(graph_path);
    const Prediction pred = load_prediction(pred_path);
    json r = eval_one(g, pred, args.step);
    r["graph"] = graph_path.filename().string();
    if (!r["centerline"].is_null()) derrs.push_back(r["centerline"]["d_err"].get<double>());
    f1s.push_back(r["undirected_edge_metrics"]["f1"].get<double>());
    accs.push_back(r["edge_metrics"]["binary_accuracy"].get<double>());
    per_graph.push_back(std::move(r));
  }

  json out;
  if (jobs.size() == 1) {
    out = per_graph[0];
  } else {
    const MeanStd d = mean_std(derrs), f = mean_std(f1s), a = mean_std(accs);
    out = json{{"per_graph", per_graph},
               {"aggregate",
                json{{"d_err_mean", d.mean},
                     {"d_err_std", d.std},
                     {"f1_mean", f.mean},
                     {"f1_std", f.std},
                     {"binary_accuracy_mean", a.mean},
                     {"binary_accuracy_std", a.std},
                     {"graphs", jobs.size()}}}};
  }
  emit(out, args.out_path);
  return 0;
}

int cmd_oracle(const OracleArgs& args) {
  const CandidateGraph g = load_graph(args.graph_path);
  const ModelParams theta = load_model(args.model_path);
  const ExactPosterior post = enumerate_posterior(g, theta, args.threads);

  json marginals = json::array();
  const auto& pairs = g.ordered_pairs();
  for (int p = 0; p < g.pair_count(); ++p)
    marginals.push_back(json{{"from", pairs[static_cast<std::size_t>(p)].from},
                             {"to", pairs[static_cast<std::size_t>(p)].to},
                             {"p", post.marginals[static_cast<std::size_t>(p)]}});
  json out{{"log_partition", post.log_partition},
           {"marginals", marginals},
           {"n_configs", 1ull << g.pair_count()}};
  if (!post.config_probs.empty()) out["config_probs"] = post.config_probs;
  emit(out, args.out_path);
  return 0;
}

int cmd_gradcheck(const GradcheckArgs& args) {
  const CandidateGraph g = load_graph(args.graph_path);
  const ModelParams theta = args.model_path.empty() ? init_params(args.seed, args.scale)
                                                    : load_model(args.model_path);
  const auto gt = g.gt_directed();

  auto [beliefs, tape] = forward(g, theta, args.layers, 0.5);
  const GradientSet analytic = backward(tape, g, theta, gt);
  const GradientSet numeric = numeric_param_gradient(
      [&](const ModelParams& p) {
        return bce_loss(forward(g, p, args.layers, 0.5).first, gt);
      },
      theta, args.h);

  double max_err = 0.0;
  std::string worst;
  for (int i = 0; i < ModelParams::kCount; ++i) {
    const double err = relative_error(analytic.flat(i), numeric.flat(i));
    if (err > max_err) {
      max_err = err;
      worst = ModelParams::component_name(i);
    }
  }

  json out{{"layers", args.layers},
           {"h", args.h},
           {"pairs", g.pair_count()},
           {"max_relative_error", max_err},
           {"worst_component", worst},
           {"tolerance", args.tol},
           {"pass", max_err <= args.tol}};
  emit(out, args.out_path);
  return max_err <= args.tol ? 0 : 1;
}

}  // namespace mfn::cli
