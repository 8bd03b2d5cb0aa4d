#pragma once

#include <cstdint>
#include <string>

namespace mfn::cli {

inline constexpr const char* kToolVersion = "mfn 0.1.0";

struct GenerateArgs {
  std::string config_path;  // empty = defaults
  int n_trees = 32;
  std::uint64_t seed = 0;
  std::string out_dir;
  int threads = 1;
};

struct TrainArgs {
  std::string data_dir;
  std::string out_dir;
  int folds = 4;
  int fold = 0;
  int epochs = 200;
  int layers = 10;
  int batch_nodes = 500;
  int knn_L = 0;  // 0 = keep each file's meta.L
  double learning_rate = 1e-3;
  double lr_decay = 1.0;
  double alpha0 = 0.5;
  double positive_weight = 1.0;
  double init_scale = 0.01;
  int patience = 0;
  int warmup_epochs = 60;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct InferArgs {
  std::string model_path;
  std::string graph_path;
  std::string out_path;
  std::string trajectory_path;  // optional per-layer ELBO/belief-summary export
  int layers = 10;
  double alpha0 = 0.5;
  double tau = 0.5;
  int knn_L = 0;
  int threads = 1;
};

struct EvalArgs {
  std::string pred_path;   // file, or directory of <stem>.pred.json
  std::string graph_path;  // single-graph mode
  std::string data_dir;    // directory mode
  std::string out_path;    // empty = stdout
  double step = 0.5;
  int threads = 1;
};

struct OracleArgs {
  std::string graph_path;
  std::string model_path;
  std::string out_path;  // empty = stdout
  int threads = 1;
};

struct GradcheckArgs {
  std::string graph_path;
  std::string model_path;  // empty = random params from seed
  int layers = 2;
  std::uint64_t seed = 0;
  double scale = 0.1;
  double h = 1e-5;
  double tol = 1e-4;
  std::string out_path;  // empty = stdout
  int threads = 1;
};

int cmd_generate(const GenerateArgs& args);
int cmd_train(const TrainArgs& args);
int cmd_infer(const InferArgs& args);
int cmd_eval(const EvalArgs& args);
int cmd_oracle(const OracleArgs& args);
int cmd_gradcheck(const GradcheckArgs& args);

}  // namespace mfn::cli
