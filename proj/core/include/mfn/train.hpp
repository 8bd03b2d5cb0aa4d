#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mfn/beliefs.hpp"
#include "mfn/graph.hpp"
#include "mfn/mfa.hpp"
#include "mfn/types.hpp"

namespace mfn {

// Forward record of the unrolled network: per-layer beliefs alpha^(0..T) and
// the per-pair sigmoid arguments gamma^(0..T-1).
struct Tape {
  std::vector<std::vector<double>> alpha;
  std::vector<std::vector<double>> gamma;

  int layers() const { return static_cast<int>(gamma.size()); }

  // Re-applies clamp(sigmoid(gamma^(t))) layer by layer and checks it
  // reproduces the recorded alpha^(t+1) bit-exactly.
  bool consistent() const;
};

struct TrainConfig {
  int layers = 10;        // unrolled MFA iterations T
  int batch_nodes = 500;  // spatially contiguous node chunks
  int knn_L = 10;
  int epochs = 200;
  double learning_rate = 1e-3;
  double lr_decay = 1.0;  // per-epoch multiplier on the learning rate
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double alpha0 = 0.5;           // initial edge belief
  double positive_weight = 1.0;  // optional BCE reweighting of s=1 terms; 1 = off
  double init_scale = 0.01;
  int patience = 0;  // early stop after this many epochs without val improvement; 0 = off
  // Unroll-depth curriculum: gradient steps in the first unroll_warmup_epochs
  // use a shallower network, ramping 1 -> layers linearly. Deep unrolled
  // mean-field training from a cold start otherwise settles on the base-rate
  // fixed point; the shallow phase finds the pair separator first. Metrics,
  // curves and inference always use the full depth. 0 disables the ramp.
  int unroll_warmup_epochs = 60;
  std::uint64_t seed = 0;
  int validation_fold = 0;
  int fold_count = 4;

  void validate() const;

  // Unroll depth used for gradient steps at a given 1-based epoch.
  int layers_at_epoch(int epoch) const;
};

// T parallel MFA layers with shared parameters from a uniform alpha0 start.
std::pair<EdgeBeliefs, Tape> forward(const CandidateGraph& g, const ModelParams& theta, int T,
                                     double alpha0 = 0.5);

// -(1/M) sum over ordered candidate pairs of
//   positive_weight * s ln(alpha) + (1 - s) ln(1 - alpha).
double bce_loss(const EdgeBeliefs& b, std::span<const std::uint8_t> gt,
                double positive_weight = 1.0);

// Exact reverse-mode gradient of bce_loss(forward(...)) in every parameter,
// propagated through all layers including the alpha_lk cross terms. If
// per_layer is non-null it receives each layer's own parameter contribution
// (their sum is the returned total).
GradientSet backward(const Tape& tape, const CandidateGraph& g, const ModelParams& theta,
                     std::span<const std::uint8_t> gt, double positive_weight = 1.0,
                     std::vector<GradientSet>* per_layer = nullptr);

struct AdamState {
  GradientSet m{};
  GradientSet v{};
  int step = 0;
};

// Standard adaptive-moment update with bias correction.
void adam_step(ModelParams& theta, const GradientSet& grad, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// Partitions nodes into spatially contiguous chunks of <= batch_nodes grown by
// nearest-position accretion from random seed nodes; each batch carries the
// induced neighborhoods and induced gt adjacency.
std::vector<CandidateGraph> make_batches(const CandidateGraph& g, int batch_nodes,
                                         std::uint64_t seed);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  std::vector<double> elbo_per_layer;  // sequential-mode ELBO, layers 1..T
};

struct TrainResult {
  ModelParams params;  // best-validation parameters
  AdamState adam;
  std::vector<EpochRecord> curves;  // record 0 is the pre-update state
  int best_epoch = 0;
};

// Epochs of batched forward/backward/adam over the graphs whose fold differs
// from config.validation_fold; fully reproducible given the seed.
TrainResult train(const std::vector<CandidateGraph>& dataset, const TrainConfig& config);

// All components drawn uniformly from [-scale, scale].
ModelParams init_params(std::uint64_t seed, double scale = 0.01);

// Fraction of ordered candidate pairs with I[alpha > 0.5] == gt.
double binary_accuracy(const EdgeBeliefs& b, std::span<const std::uint8_t> gt);

}  // namespace mfn
