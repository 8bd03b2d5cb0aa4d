#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "mfn/types.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Graph refinement by mean-field inference on a pairwise MRF, "
               "with parameters learned through the unrolled iterations"};
  app.set_version_flag("--version", mfn::cli::kToolVersion);
  app.require_subcommand(1);

  mfn::cli::GenerateArgs gen;
  auto* cgen = app.add_subcommand("generate", "Generate a synthetic tree dataset");
  cgen->add_option("--config", gen.config_path, "Tree config JSON (defaults when omitted)");
  cgen->add_option("--n", gen.n_trees, "Number of trees")->capture_default_str();
  cgen->add_option("--seed", gen.seed, "Master seed")->capture_default_str();
  cgen->add_option("--out", gen.out_dir, "Output directory")->required();
  cgen->add_option("--threads", gen.threads, "Worker threads")->capture_default_str();

  mfn::cli::TrainArgs tr;
  auto* ctr = app.add_subcommand("train", "Train the unrolled mean-field network");
  ctr->add_option("--data", tr.data_dir, "Directory of graph JSON files")->required();
  ctr->add_option("--out", tr.out_dir, "Output directory")->required();
  ctr->add_option("--folds", tr.folds, "Fold count")->capture_default_str();
  ctr->add_option("--fold", tr.fold, "Held-out validation fold")->capture_default_str();
  ctr->add_option("--epochs", tr.epochs, "Training epochs")->capture_default_str();
  ctr->add_option("--layers", tr.layers, "Unrolled iterations T")->capture_default_str();
  ctr->add_option("--batch-nodes", tr.batch_nodes, "Nodes per batch")->capture_default_str();
  ctr->add_option("--L", tr.knn_L, "Rebuild neighborhoods with this L (0 = keep file meta)");
  ctr->add_option("--lr", tr.learning_rate, "Learning rate")->capture_default_str();
  ctr->add_option("--lr-decay", tr.lr_decay, "Per-epoch learning-rate multiplier")->capture_default_str();
  ctr->add_option("--alpha0", tr.alpha0, "Initial edge belief")->capture_default_str();
  ctr->add_option("--pos-weight", tr.positive_weight, "BCE weight on positive pairs")->capture_default_str();
  ctr->add_option("--init-scale", tr.init_scale, "Parameter init scale")->capture_default_str();
  ctr->add_option("--patience", tr.patience, "Early-stop patience (0 = off)")->capture_default_str();
  ctr->add_option("--warmup-epochs", tr.warmup_epochs, "Unroll-depth ramp length (0 = off)")->capture_default_str();
  ctr->add_option("--seed", tr.seed, "Seed")->capture_default_str();
  ctr->add_option("--threads", tr.threads, "Worker threads")->capture_default_str();

  mfn::cli::InferArgs inf;
  auto* cinf = app.add_subcommand("infer", "Run the trained network on one graph");
  cinf->add_option("--model", inf.model_path, "Model JSON")->required();
  cinf->add_option("--graph", inf.graph_path, "Graph JSON")->required();
  cinf->add_option("--out", inf.out_path, "Prediction output file")->required();
  cinf->add_option("--trajectory", inf.trajectory_path, "Per-layer ELBO trajectory output file");
  cinf->add_option("--layers", inf.layers, "Unrolled iterations T")->capture_default_str();
  cinf->add_option("--alpha0", inf.alpha0, "Initial edge belief")->capture_default_str();
  cinf->add_option("--tau", inf.tau, "Decision threshold")->capture_default_str();
  cinf->add_option("--L", inf.knn_L, "Rebuild neighborhoods with this L (0 = keep file meta)");
  cinf->add_option("--threads", inf.threads, "Worker threads")->capture_default_str();

  mfn::cli::EvalArgs ev;
  auto* cev = app.add_subcommand("eval", "Edge metrics and centerline distance");
  cev->add_option("--pred", ev.pred_path, "Prediction file, or directory of <stem>.pred.json")->required();
  cev->add_option("--graph", ev.graph_path, "Graph JSON (single-prediction mode)");
  cev->add_option("--data", ev.data_dir, "Graph directory (directory mode)");
  cev->add_option("--step", ev.step, "Centerline sample spacing")->capture_default_str();
  cev->add_option("--out", ev.out_path, "Report file (stdout when omitted)");
  cev->add_option("--threads", ev.threads, "Worker threads")->capture_default_str();

  mfn::cli::OracleArgs orc;
  auto* corc = app.add_subcommand("oracle", "Exact posterior by brute-force enumeration");
  corc->add_option("--graph", orc.graph_path, "Graph JSON (<= 20 ordered pairs)")->required();
  corc->add_option("--model", orc.model_path, "Model JSON")->required();
  corc->add_option("--out", orc.out_path, "Report file (stdout when omitted)");
  corc->add_option("--threads", orc.threads, "Enumeration shards")->capture_default_str();

  mfn::cli::GradcheckArgs gc;
  auto* cgc = app.add_subcommand("gradcheck", "Analytic vs finite-difference gradients");
  cgc->add_option("--graph", gc.graph_path, "Graph JSON")->required();
  cgc->add_option("--model", gc.model_path, "Model JSON (random params when omitted)");
  cgc->add_option("--layers", gc.layers, "Unrolled iterations T")->capture_default_str();
  cgc->add_option("--seed", gc.seed, "Seed for random params")->capture_default_str();
  cgc->add_option("--scale", gc.scale, "Random param scale")->capture_default_str();
  cgc->add_option("--fd-step", gc.h, "Finite-difference step")->capture_default_str();
  cgc->add_option("--tol", gc.tol, "Max relative error to pass")->capture_default_str();
  cgc->add_option("--out", gc.out_path, "Report file (stdout when omitted)");
  cgc->add_option("--threads", gc.threads, "Worker threads")->capture_default_str();

  try {
    app.parse(argc, argv);
    if (cgen->parsed()) return mfn::cli::cmd_generate(gen);
    if (ctr->parsed()) return mfn::cli::cmd_train(tr);
    if (cinf->parsed()) return mfn::cli::cmd_infer(inf);
    if (cev->parsed()) return mfn::cli::cmd_eval(ev);
    if (corc->parsed()) return mfn::cli::cmd_oracle(orc);
    if (cgc->parsed()) return mfn::cli::cmd_gradcheck(gc);
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << R"({"error":"usage","detail":")" << e.what() << R"("})" << "\n";
    return 2;
  } catch (const mfn::Error& e) {
    std::cerr << R"({"error":"data","detail":")" << e.what() << R"("})" << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << R"({"error":"internal","detail":")" << e.what() << R"("})" << "\n";
    return 1;
  }
}
