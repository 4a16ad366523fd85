#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "msb/balance.hpp"
#include "msb/community.hpp"
#include "msb/graph.hpp"
#include "msb/model.hpp"
#include "msb/reweight.hpp"

namespace msb {

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(std::size_t size) : m(size, 0.0), v(size, 0.0) {}
};

/// One bias-corrected Adam update with decoupled weight decay:
///   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
/// Throws std::invalid_argument when the shapes disagree.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double lr,
               double weight_decay, const AdamConfig& config = {});

// ---------------------------------------------------------------------------
// Training

enum class Weighting {
  Learned,      ///< per-batch weights from reweight()
  ConstantOne,  ///< every SB sample weight 1, normalized over the batch
};

struct TrainConfig {
  std::size_t max_epochs = 1000;
  std::size_t eval_interval = 25;
  std::size_t patience = 10;  ///< evaluations without improvement
  double learning_rate = 1e-3;
  double weight_decay = 1e-3;
  std::size_t dim = 64;
  double clean_batch_fraction = 0.5;
  double sb_ratio = 6.0;
  SbMode sb_mode = SbMode::Both;
  Weighting weighting = Weighting::Learned;
  double meta_alpha = 1e-3;
  double meta_eta = 1.0;
  EpsilonInit epsilon_init = EpsilonInit::Uniform;
  ScorerKind scorer = ScorerKind::Concat;
  bool spectral_init = false;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
  /// Defaults to SignedProximityLoss when null. Not owned.
  const TaskLoss* task = nullptr;
  /// When set, every learned reweighting step appends CSV rows
  /// epoch,src,dst,provenance,sign,epsilon,epsilon_gradient,weight. Not owned.
  std::ostream* weight_trace = nullptr;

  /// Throws std::invalid_argument on nonpositive sizes or rates.
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);

struct EvalRecord {
  std::size_t epoch = 0;
  double l_task = 0.0;
  double l_sb = 0.0;
  double l_tot = 0.0;
  double val_macro_f1 = 0.0;
  double val_accuracy = 0.0;

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

struct TrainReport {
  ModelParams best_params;
  std::vector<EvalRecord> history;
  std::size_t best_epoch = 0;
  double best_val_macro_f1 = 0.0;
  std::size_t stop_epoch = 0;
  double wall_seconds = 0.0;
  std::size_t sb_set_size = 0;
  std::vector<std::string> warnings;
};

nlohmann::json history_json(const TrainReport& report);

struct EvalMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  bool single_class = false;
};

/// Scores `edges` with threshold 0.5 and compares against their signs.
EvalMetrics evaluate(const ModelParams& params, std::span<const SignedEdge> edges);

/// Balance-labeled samples for the training graph of `split`.
std::vector<EdgeSample> sb_samples(const SplitDataset& split, const Partition& partition, SbMode mode);

/// Training loop over a fixed SB sample set. Each epoch samples B_clean
/// (clean_batch_fraction of the labeled edges) and, when `sb` is nonempty,
/// B_SB (sb_ratio * |B_clean| samples), weights B_SB, and takes one Adam step
/// on l_tot = l_task + l_sb. l_task is the task loss over all labeled edges
/// plus the mean sign loss of B_clean, whose samples all have weight 1.
TrainReport train_with_sb(const SplitDataset& split, std::span<const EdgeSample> sb, const TrainConfig& config);

/// Balance labeling followed by train_with_sb.
TrainReport train_l2rw(const SplitDataset& split, const Partition& partition, const TrainConfig& config);

/// Same loop with no SB samples. Throws if there are no labeled edges.
TrainReport train_supervised(const SplitDataset& split, const TrainConfig& config);

enum class PseudoLabelStrategy { All, Random, Uncertainty };

const char* to_string(PseudoLabelStrategy s);

/// Indices of the floor(k/2) lowest and k - floor(k/2) highest scores; every
/// index when k >= size.
std::vector<std::size_t> select_most_certain(std::span<const double> scores, std::size_t k);

struct PseudoLabelReport {
  TrainReport best;
  std::size_t best_round = 0;
  std::size_t rounds = 0;
  std::vector<double> round_val_macro_f1;
  /// Per round, the indices into train_unlabeled that were pseudo-labeled.
  std::vector<std::vector<std::size_t>> selections;
};

/// Self-training baseline: train on the labeled edges, then for up to
/// `rounds` rounds pick unlabeled edges by `strategy`, label them with the
/// current model, add them to the labeled pool and retrain from a fresh
/// initialization. Returns the round with the best validation Macro-F1.
PseudoLabelReport train_pseudo_label(const SplitDataset& split, const TrainConfig& config,
                                     PseudoLabelStrategy strategy, std::size_t k = 50, std::size_t rounds = 10);

}  // namespace msb
