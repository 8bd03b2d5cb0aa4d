#include "mfn/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mfn/potentials.hpp"
#include "mfn/rng.hpp"

namespace mfn {

namespace {

struct DegreeTriple {
  double p0 = 1.0, p1 = 0.0, p2 = 0.0;
};

inline DegreeTriple combine(const DegreeTriple& a, const DegreeTriple& b) {
  return {a.p0 * b.p0, a.p0 * b.p1 + a.p1 * b.p0, a.p0 * b.p2 + a.p1 * b.p1 + a.p2 * b.p0};
}

inline DegreeTriple bernoulli(double alpha) { return {1.0 - alpha, alpha, 0.0}; }

void exclusion_triples(std::span<const double> row, std::vector<DegreeTriple>& pre,
                       std::vector<DegreeTriple>& suf, std::vector<DegreeTriple>& out) {
  const std::size_t d = row.size();
  pre.assign(d + 1, {});
  suf.assign(d + 1, {});
  for (std::size_t i = 0; i < d; ++i) pre[i + 1] = combine(pre[i], bernoulli(row[i]));
  for (std::size_t i = d; i-- > 0;) suf[i] = combine(bernoulli(row[i]), suf[i + 1]);
  out.assign(d, {});
  for (std::size_t i = 0; i < d; ++i) out[i] = combine(pre[i], suf[i + 1]);
}

inline bool clamped(double sig) { return sig < kBeliefClamp || sig > 1.0 - kBeliefClamp; }

}  // namespace

bool Tape::consistent() const {
  if (alpha.size() != gamma.size() + 1) return false;
  for (std::size_t t = 0; t < gamma.size(); ++t) {
    for (std::size_t q = 0; q < gamma[t].size(); ++q)
      if (clamp_belief(sigmoid(gamma[t][q])) != alpha[t + 1][q]) return false;
  }
  return true;
}

void TrainConfig::validate() const {
  if (layers < 1) throw Error("config: layers must be >= 1");
  if (batch_nodes < 2) throw Error("config: batch_nodes must be >= 2");
  if (knn_L < 1) throw Error("config: knn_L must be >= 1");
  if (epochs < 0) throw Error("config: epochs must be >= 0");
  if (learning_rate < 0.0) throw Error("config: learning_rate must be >= 0");
  if (alpha0 <= 0.0 || alpha0 >= 1.0) throw Error("config: alpha0 must lie in (0, 1)");
  if (positive_weight <= 0.0) throw Error("config: positive_weight must be > 0");
  if (fold_count < 1) throw Error("config: fold_count must be >= 1");
  if (unroll_warmup_epochs < 0) throw Error("config: unroll_warmup_epochs must be >= 0");
}

int TrainConfig::layers_at_epoch(int epoch) const {
  if (unroll_warmup_epochs <= 0 || epoch > unroll_warmup_epochs) return layers;
  const int t = 1 + ((epoch - 1) * (layers - 1)) / unroll_warmup_epochs;
  return std::clamp(t, 1, layers);
}

std::pair<EdgeBeliefs, Tape> forward(const CandidateGraph& g, const ModelParams& theta, int T,
                                     double alpha0) {
  if (T < 1) throw Error("domain: forward needs T >= 1");
  const std::size_t m = static_cast<std::size_t>(g.pair_count());
  const auto data = all_pair_data(g, theta);

  Tape tape;
  tape.alpha.reserve(static_cast<std::size_t>(T) + 1);
  tape.gamma.reserve(static_cast<std::size_t>(T));
  tape.alpha.emplace_back(m, clamp_belief(alpha0));

  for (int t = 0; t < T; ++t) {
    std::vector<double> gam(m);
    compute_gamma_all(g, tape.alpha.back(), theta, data, gam);
    std::vector<double> next(m);
    for (std::size_t q = 0; q < m; ++q) next[q] = clamp_belief(sigmoid(gam[q]));
    tape.gamma.push_back(std::move(gam));
    tape.alpha.push_back(std::move(next));
  }

  EdgeBeliefs out;
  out.alpha = tape.alpha.back();
  out.layer = T;
  return {std::move(out), std::move(tape)};
}

double bce_loss(const EdgeBeliefs& b, std::span<const std::uint8_t> gt, double positive_weight) {
  if (b.alpha.size() != gt.size()) throw Error("structural: bce_loss: belief/gt key mismatch");
  if (b.alpha.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t q = 0; q < gt.size(); ++q) {
    const double a = b.alpha[q];
    total += gt[q] ? positive_weight * std::log(a) : std::log(1.0 - a);
  }
  return -total / static_cast<double>(gt.size());
}

GradientSet backward(const Tape& tape, const CandidateGraph& g, const ModelParams& theta,
                     std::span<const std::uint8_t> gt, double positive_weight,
                     std::vector<GradientSet>* per_layer) {
  const int T = tape.layers();
  const std::size_t m = static_cast<std::size_t>(g.pair_count());
  if (T < 1) throw Error("domain: backward needs a tape with at least one layer");
  if (tape.alpha.back().size() != m || gt.size() != m)
    throw Error("structural: backward: tape/gt not keyed by this graph");

  const auto pfs = all_pair_features(g);
  std::vector<double> data(m);
  for (std::size_t q = 0; q < m; ++q) data[q] = data_term(pfs[q], theta);
  std::vector<double> ax(static_cast<std::size_t>(g.node_count()));
  for (int k = 0; k < g.node_count(); ++k)
    ax[static_cast<std::size_t>(k)] = dot(theta.a, g.nodes[static_cast<std::size_t>(k)].x);

  GradientSet total{};
  if (per_layer) per_layer->assign(static_cast<std::size_t>(T), GradientSet{});

  // dL/dalpha^(T)
  std::vector<double> gbar(m);
  const auto& aT = tape.alpha.back();
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t q = 0; q < m; ++q)
    gbar[q] = gt[q] ? -inv_m * positive_weight / aT[q] : inv_m / (1.0 - aT[q]);

  std::vector<DegreeTriple> pre, suf, excl, excl2;
  std::vector<double> ghat(m), gprev(m), subrow;

  for (int t = T - 1; t >= 0; --t) {
    const auto& gam = tape.gamma[static_cast<std::size_t>(t)];
    const auto& a_in = tape.alpha[static_cast<std::size_t>(t)];

    // through the activation (zero where the output clamp was active)
    for (std::size_t q = 0; q < m; ++q) {
      const double sig = sigmoid(gam[q]);
      ghat[q] = clamped(sig) ? 0.0 : gbar[q] * sig * (1.0 - sig);
    }

    GradientSet layer_grad{};
    std::fill(gprev.begin(), gprev.end(), 0.0);

    for (int k = 0; k < g.node_count(); ++k) {
      const int begin = g.row_begin(k);
      const int d = g.row_size(k);
      const std::span<const double> row(a_in.data() + begin, static_cast<std::size_t>(d));
      exclusion_triples(row, pre, suf, excl);

      for (int i = 0; i < d; ++i) {
        const std::size_t p = static_cast<std::size_t>(begin + i);
        const double h = ghat[p];
        const int rev = g.reverse_index(begin + i);
        const double a_lk = rev >= 0 ? a_in[static_cast<std::size_t>(rev)] : 0.0;

        if (h != 0.0) {
          const DegreeTriple& q0 = excl[static_cast<std::size_t>(i)];
          layer_grad.beta[0] += h * (-q0.p0);
          layer_grad.beta[1] += h * (q0.p0 - q0.p1);
          layer_grad.beta[2] += h * (q0.p1 - q0.p2);
          for (int c = 0; c < kFeatureDim; ++c)
            layer_grad.a[static_cast<std::size_t>(c)] +=
                h * g.nodes[static_cast<std::size_t>(k)].x[static_cast<std::size_t>(c)];
          layer_grad.lambda += h * (8.0 * a_lk - 4.0);
          const PairFeature& pf = pfs[p];
          for (int c = 0; c < kFeatureDim; ++c) {
            layer_grad.eta[static_cast<std::size_t>(c)] += h * 4.0 * a_lk * pf.absdiff[static_cast<std::size_t>(c)];
            layer_grad.nu[static_cast<std::size_t>(c)] += h * 4.0 * a_lk * pf.prod[static_cast<std::size_t>(c)];
          }
          // gamma_kl reads alpha_lk through the symmetry and data terms
          if (rev >= 0) gprev[static_cast<std::size_t>(rev)] += h * (8.0 * theta.lambda + 4.0 * data[p]);
        }

        // degree route: gamma_kl depends on alpha_km for every m != l
        if (h != 0.0 && d > 1) {
          subrow.clear();
          subrow.reserve(static_cast<std::size_t>(d) - 1);
          for (int j = 0; j < d; ++j)
            if (j != i) subrow.push_back(row[static_cast<std::size_t>(j)]);
          exclusion_triples(subrow, pre, suf, excl2);
          int idx = 0;
          for (int j = 0; j < d; ++j) {
            if (j == i) continue;
            const DegreeTriple& q2 = excl2[static_cast<std::size_t>(idx++)];
            const double c = (theta.beta[1] - theta.beta[0]) * (-q2.p0) +
                             (theta.beta[2] - theta.beta[1]) * (q2.p0 - q2.p1) -
                             theta.beta[2] * (q2.p1 - q2.p2);
            gprev[static_cast<std::size_t>(begin + j)] += h * c;
          }
        }
      }
    }

    for (int i = 0; i < ModelParams::kCount; ++i) total.flat(i) += layer_grad.flat(i);
    if (per_layer) (*per_layer)[static_cast<std::size_t>(t)] = layer_grad;
    std::swap(gbar, gprev);
  }

  return total;
}

void adam_step(ModelParams& theta, const GradientSet& grad, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, state.step);
  const double bc2 = 1.0 - std::pow(beta2, state.step);
  for (int i = 0; i < ModelParams::kCount; ++i) {
    const double gi = grad.flat(i);
    double& mi = state.m.flat(i);
    double& vi = state.v.flat(i);
    mi = beta1 * mi + (1.0 - beta1) * gi;
    vi = beta2 * vi + (1.0 - beta2) * gi * gi;
    theta.flat(i) -= lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps);
  }
}

std::vector<CandidateGraph> make_batches(const CandidateGraph& g, int batch_nodes,
                                         std::uint64_t seed) {
  if (batch_nodes < 2) throw Error("config: batch_nodes must be >= 2");
  const int n = g.node_count();
  Rng rng(seed);

  std::vector<Vec3> pos(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pos[static_cast<std::size_t>(i)] = g.nodes[static_cast<std::size_t>(i)].position();

  std::vector<int> remaining(static_cast<std::size_t>(n));
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<std::vector<int>> chunks;

  while (!remaining.empty()) {
    const int pick = rng.uniform_int(0, static_cast<int>(remaining.size()) - 1);
    const int seed_node = remaining[static_cast<std::size_t>(pick)];
    remaining.erase(remaining.begin() + pick);

    std::vector<int> members{seed_node};
    std::vector<double> dist(remaining.size());
    for (std::size_t idx = 0; idx < remaining.size(); ++idx)
      dist[idx] = distance_sq(pos[static_cast<std::size_t>(remaining[idx])],
                              pos[static_cast<std::size_t>(seed_node)]);

    while (static_cast<int>(members.size()) < batch_nodes && !remaining.empty()) {
      std::size_t best = 0;
      for (std::size_t idx = 1; idx < remaining.size(); ++idx)
        if (dist[idx] < dist[best] || (dist[idx] == dist[best] && remaining[idx] < remaining[best]))
          best = idx;
      const int added = remaining[static_cast<std::size_t>(best)];
      members.push_back(added);
      remaining.erase(remaining.begin() + static_cast<long>(best));
      dist.erase(dist.begin() + static_cast<long>(best));
      for (std::size_t idx = 0; idx < remaining.size(); ++idx)
        dist[idx] = std::min(dist[idx], distance_sq(pos[static_cast<std::size_t>(remaining[idx])],
                                                    pos[static_cast<std::size_t>(added)]));
    }
    std::sort(members.begin(), members.end());
    chunks.push_back(std::move(members));
  }

  std::vector<CandidateGraph> batches;
  batches.reserve(chunks.size());
  for (const auto& members : chunks) {
    std::vector<int> map(static_cast<std::size_t>(n), -1);
    for (std::size_t i = 0; i < members.size(); ++i) map[static_cast<std::size_t>(members[i])] = static_cast<int>(i);

    CandidateGraph batch;
    batch.knn_L = g.knn_L;
    batch.fold = g.fold;
    batch.nodes.reserve(members.size());
    for (int id : members) batch.nodes.push_back(g.nodes[static_cast<std::size_t>(id)]);
    batch.neighborhoods.resize(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (int l : g.neighbors(members[i])) {
        const int ml = map[static_cast<std::size_t>(l)];
        if (ml >= 0) batch.neighborhoods[i].push_back(ml);
      }
      // old-index order is ascending, and the map preserves order
    }
    for (const auto& [i, j] : g.gt_edges) {
      const int mi = map[static_cast<std::size_t>(i)], mj = map[static_cast<std::size_t>(j)];
      if (mi >= 0 && mj >= 0) batch.gt_edges.emplace_back(std::min(mi, mj), std::max(mi, mj));
    }
    std::sort(batch.gt_edges.begin(), batch.gt_edges.end());
    batch.rebuild_pair_index();
    batches.push_back(std::move(batch));
  }
  return batches;
}

double binary_accuracy(const EdgeBeliefs& b, std::span<const std::uint8_t> gt) {
  if (b.alpha.size() != gt.size()) throw Error("structural: binary_accuracy: key mismatch");
  if (gt.empty()) return 1.0;
  std::size_t hit = 0;
  for (std::size_t q = 0; q < gt.size(); ++q)
    if ((b.alpha[q] > 0.5 ? 1 : 0) == gt[q]) ++hit;
  return static_cast<double>(hit) / static_cast<double>(gt.size());
}

ModelParams init_params(std::uint64_t seed, double scale) {
  if (scale < 0.0) throw Error("config: init scale must be >= 0");
  Rng rng(seed);
  ModelParams p;
  for (int i = 0; i < ModelParams::kCount; ++i) p.flat(i) = rng.uniform(-scale, scale);
  return p;
}

namespace {

struct EvalAccum {
  double loss_weighted = 0.0;
  double acc_weighted = 0.0;
  std::size_t pairs = 0;

  void add(const EdgeBeliefs& b, std::span<const std::uint8_t> gt, double pw) {
    if (gt.empty()) return;
    loss_weighted += bce_loss(b, gt, pw) * static_cast<double>(gt.size());
    acc_weighted += binary_accuracy(b, gt) * static_cast<double>(gt.size());
    pairs += gt.size();
  }
  double loss() const { return pairs ? loss_weighted / static_cast<double>(pairs) : 0.0; }
  double acc() const { return pairs ? acc_weighted / static_cast<double>(pairs) : 1.0; }
};

}  // namespace

TrainResult train(const std::vector<CandidateGraph>& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.empty()) throw Error("config: train needs a non-empty dataset");
  for (const auto& g : dataset)
    if (g.gt_edges.empty()) throw Error("config: every training graph needs gt adjacency");

  std::vector<int> fold_of(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    fold_of[i] = dataset[i].fold >= 0 ? dataset[i].fold : static_cast<int>(i) % config.fold_count;
  }

  std::vector<const CandidateGraph*> train_graphs, val_graphs;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (fold_of[i] == config.validation_fold)
      val_graphs.push_back(&dataset[i]);
    else
      train_graphs.push_back(&dataset[i]);
  }
  if (train_graphs.empty()) throw Error("config: validation fold leaves no training graphs");
  if (val_graphs.empty()) {
    val_graphs.push_back(train_graphs.back());
    train_graphs.pop_back();
    if (train_graphs.empty()) throw Error("config: need at least two graphs to hold one out");
  }

  // materialize batches once; deterministic per-graph seeds
  std::vector<CandidateGraph> batches;
  for (std::size_t i = 0; i < train_graphs.size(); ++i) {
    auto bs = make_batches(*train_graphs[i], config.batch_nodes, Rng::mix(config.seed, 0x6261 + i));
    for (auto& b : bs)
      if (b.pair_count() > 0) batches.push_back(std::move(b));
  }
  if (batches.empty()) throw Error("config: dataset produced no usable batches");

  std::vector<std::vector<std::uint8_t>> batch_gt(batches.size());
  for (std::size_t i = 0; i < batches.size(); ++i) batch_gt[i] = batches[i].gt_directed();
  std::vector<std::vector<std::uint8_t>> val_gt(val_graphs.size());
  for (std::size_t i = 0; i < val_graphs.size(); ++i) val_gt[i] = val_graphs[i]->gt_directed();

  ModelParams theta = init_params(Rng::mix(config.seed, 0x1417), config.init_scale);
  AdamState adam;
  Rng shuffle_rng(Rng::mix(config.seed, 0x51AFF));
  TrainResult result;

  auto evaluate = [&](const ModelParams& p, EpochRecord& rec) {
    EvalAccum tr, va;
    for (std::size_t i = 0; i < batches.size(); ++i)
      tr.add(forward(batches[i], p, config.layers, config.alpha0).first, batch_gt[i],
             config.positive_weight);
    for (std::size_t i = 0; i < val_graphs.size(); ++i)
      va.add(forward(*val_graphs[i], p, config.layers, config.alpha0).first, val_gt[i],
             config.positive_weight);
    rec.train_loss = tr.loss();
    rec.train_acc = tr.acc();
    rec.val_loss = va.loss();
    rec.val_acc = va.acc();

    rec.elbo_per_layer.assign(static_cast<std::size_t>(config.layers), 0.0);
    for (const auto* vg : val_graphs) {
      EdgeBeliefs b = uniform_beliefs(*vg, config.alpha0);
      for (int t = 0; t < config.layers; ++t) {
        b = mfa_sweep_sequential(std::move(b), *vg, p);
        rec.elbo_per_layer[static_cast<std::size_t>(t)] += elbo(b, *vg, p).total;
      }
    }
    for (auto& e : rec.elbo_per_layer) e /= static_cast<double>(val_graphs.size());
  };

  EpochRecord rec0;
  rec0.epoch = 0;
  evaluate(theta, rec0);
  result.curves.push_back(rec0);

  ModelParams best = theta;
  double best_val = rec0.val_loss;
  int best_epoch = 0;

  std::vector<std::size_t> order(batches.size());
  std::iota(order.begin(), order.end(), 0);

  double lr = config.learning_rate;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    // Fisher-Yates with the deterministic stream
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<int>(i) - 1))]);

    const int depth = config.layers_at_epoch(epoch);
    for (std::size_t oi : order) {
      auto [beliefs, tape] = forward(batches[oi], theta, depth, config.alpha0);
      GradientSet grad = backward(tape, batches[oi], theta, batch_gt[oi], config.positive_weight);
      adam_step(theta, grad, adam, lr, config.adam_beta1, config.adam_beta2, config.adam_eps);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    evaluate(theta, rec);
    result.curves.push_back(rec);

    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      best = theta;
      best_epoch = epoch;
    } else if (config.patience > 0 && epoch - best_epoch >= config.patience) {
      break;
    }
    lr *= config.lr_decay;
  }

  result.params = best;
  result.adam = adam;
  result.best_epoch = best_epoch;
  return result;
}

}  // namespace mfn
