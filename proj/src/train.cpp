#include "msb/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "msb/metrics.hpp"
#include "msb/rng.hpp"

namespace msb {

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double lr,
               double weight_decay, const AdamConfig& config) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: gradient shape mismatch");
  if (state.m.empty() && state.v.empty() && state.step == 0) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state shape mismatch");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * (m_hat / (std::sqrt(v_hat) + config.eps) + weight_decay * params[i]);
  }
}

namespace {

const char* sb_mode_name(SbMode m) {
  switch (m) {
    case SbMode::Both: return "both";
    case SbMode::MicroOnly: return "micro_only";
    case SbMode::MesoOnly: return "meso_only";
  }
  return "?";
}

const SignedProximityLoss kDefaultTask;

ModelParams initial_params(const SplitDataset& split, const TrainConfig& config, std::uint64_t seed) {
  if (config.spectral_init) {
    return init_spectral(training_graph(split), config.dim, config.scorer, seed, config.init_scale);
  }
  return init_gaussian(split.num_nodes, config.dim, config.scorer, seed, config.init_scale);
}

// First `k` entries of a seeded partial Fisher-Yates over [0, n).
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

TrainReport run_loop(const SplitDataset& split, std::span<const EdgeSample> sb, const TrainConfig& config,
                     std::uint64_t init_seed) {
  config.validate();
  if (split.train_labeled.empty()) throw std::invalid_argument("training needs at least one labeled edge");
  const auto start = std::chrono::steady_clock::now();
  const TaskLoss& task = config.task ? *config.task : kDefaultTask;

  TrainReport report;
  report.sb_set_size = sb.size();
  ModelParams params = initial_params(split, config, init_seed);
  AdamState adam(params.size());
  Rng rng(derive_seed(config.seed, 1));

  const std::size_t n_labeled = split.train_labeled.size();
  const std::size_t clean_size = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::floor(config.clean_batch_fraction * static_cast<double>(n_labeled))), 1,
      n_labeled);
  const auto sb_size = static_cast<std::size_t>(std::ceil(config.sb_ratio * static_cast<double>(clean_size)));

  std::vector<EdgeSample> clean(clean_size);
  std::vector<EdgeSample> sb_batch;
  std::vector<double> weights;
  std::size_t since_best = 0;
  bool have_best = false;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const std::vector<std::size_t> pick = sample_without_replacement(rng, n_labeled, clean_size);
    const double clean_weight = 1.0 / static_cast<double>(clean_size);
    for (std::size_t i = 0; i < clean_size; ++i) {
      const SignedEdge& e = split.train_labeled[pick[i]];
      clean[i] = {e.edge, e.sign, Provenance::Clean, clean_weight};
    }

    LossValue proximity = task.evaluate(params, split.train_labeled);
    const LossValue clean_loss = sign_loss(params, clean);
    ModelParams grad = std::move(proximity.gradient);
    grad.axpy(1.0, clean_loss.gradient);
    const double l_task = proximity.value + clean_loss.value;
    double l_sb = 0.0;

    if (!sb.empty()) {
      sb_batch.clear();
      if (sb.size() < sb_size) {
        for (std::size_t i = 0; i < sb_size; ++i) sb_batch.push_back(sb[rng.index(sb.size())]);
      } else {
        for (std::size_t i : sample_without_replacement(rng, sb.size(), sb_size)) sb_batch.push_back(sb[i]);
      }
      if (config.weighting == Weighting::Learned) {
        ReweightConfig rc;
        rc.alpha = config.meta_alpha;
        rc.eta = config.meta_eta;
        rc.init = config.epsilon_init;
        rc.seed = rng.next();
        ReweightResult rw = reweight(params, clean, sb_batch, rc);
        if (config.weight_trace) {
          std::ostream& t = *config.weight_trace;
          for (std::size_t i = 0; i < sb_batch.size(); ++i) {
            const EdgeSample& s = sb_batch[i];
            t << epoch << ',' << s.edge.src << ',' << s.edge.dst << ',' << to_string(s.provenance) << ',' << s.sign
              << ',' << rw.epsilon[i] << ',' << rw.epsilon_gradient[i] << ',' << rw.weights[i] << '\n';
          }
        }
        weights = std::move(rw.weights);
      } else {
        weights.assign(sb_batch.size(), 1.0 / static_cast<double>(sb_batch.size()));
      }
      const LossValue sb_loss = weighted_sb_loss(params, sb_batch, weights);
      l_sb = sb_loss.value;
      grad.axpy(1.0, sb_loss.gradient);
    }

    if (!grad.all_finite()) throw std::runtime_error("non-finite gradient at epoch " + std::to_string(epoch));
    adam_step(adam, params.data(), grad.data(), config.learning_rate, config.weight_decay);

    const bool last = epoch == config.max_epochs;
    if (epoch % config.eval_interval != 0 && !last) continue;
    EvalRecord rec;
    rec.epoch = epoch;
    rec.l_task = l_task;
    rec.l_sb = l_sb;
    rec.l_tot = l_task + l_sb;
    if (!split.val.empty()) {
      const EvalMetrics m = evaluate(params, split.val);
      rec.val_macro_f1 = m.macro_f1;
      rec.val_accuracy = m.accuracy;
    }
    report.history.push_back(rec);
    report.stop_epoch = epoch;
    if (!have_best || rec.val_macro_f1 > report.best_val_macro_f1) {
      have_best = true;
      report.best_val_macro_f1 = rec.val_macro_f1;
      report.best_epoch = epoch;
      report.best_params = params;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  if (!have_best) report.best_params = params;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace

void TrainConfig::validate() const {
  if (max_epochs == 0 || eval_interval == 0 || patience == 0 || dim == 0) {
    throw std::invalid_argument("epochs, eval interval, patience and dim must be positive");
  }
  if (!(learning_rate > 0.0) || !(weight_decay >= 0.0)) {
    throw std::invalid_argument("learning rate must be positive and weight decay nonnegative");
  }
  if (!(clean_batch_fraction > 0.0 && clean_batch_fraction <= 1.0)) {
    throw std::invalid_argument("clean batch fraction must lie in (0, 1]");
  }
  if (!(sb_ratio >= 1.0)) throw std::invalid_argument("SB-to-clean ratio must be at least 1");
  if (!(meta_alpha > 0.0) || !(meta_eta > 0.0)) throw std::invalid_argument("meta step sizes must be positive");
  if (!(init_scale > 0.0)) throw std::invalid_argument("init scale must be positive");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"max_epochs", c.max_epochs},
      {"eval_interval", c.eval_interval},
      {"patience", c.patience},
      {"learning_rate", c.learning_rate},
      {"weight_decay", c.weight_decay},
      {"dim", c.dim},
      {"clean_batch_fraction", c.clean_batch_fraction},
      {"sb_ratio", c.sb_ratio},
      {"sb_mode", sb_mode_name(c.sb_mode)},
      {"weighting", c.weighting == Weighting::Learned ? "learned" : "constant_one"},
      {"meta_alpha", c.meta_alpha},
      {"meta_eta", c.meta_eta},
      {"epsilon_init", c.epsilon_init == EpsilonInit::Uniform ? "uniform" : "zero"},
      {"scorer", to_string(c.scorer)},
      {"spectral_init", c.spectral_init},
      {"init_scale", c.init_scale},
      {"seed", c.seed},
  };
}

nlohmann::json history_json(const TrainReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const EvalRecord& e : r.history) {
    rows.push_back({{"epoch", e.epoch},
                    {"l_task", e.l_task},
                    {"l_sb", e.l_sb},
                    {"l_tot", e.l_tot},
                    {"val_macro_f1", e.val_macro_f1},
                    {"val_accuracy", e.val_accuracy}});
  }
  return {{"history", rows},
          {"best_epoch", r.best_epoch},
          {"best_val_macro_f1", r.best_val_macro_f1},
          {"stop_epoch", r.stop_epoch},
          {"wall_seconds", r.wall_seconds},
          {"sb_set_size", r.sb_set_size},
          {"warnings", r.warnings}};
}

EvalMetrics evaluate(const ModelParams& params, std::span<const SignedEdge> edges) {
  std::vector<int> pred, truth;
  pred.reserve(edges.size());
  truth.reserve(edges.size());
  for (const SignedEdge& e : edges) {
    pred.push_back(predict_sign(params, e.edge));
    truth.push_back(e.sign);
  }
  const MacroF1 f1 = macro_f1_detail(pred, truth);
  return {accuracy(pred, truth), f1.value, f1.single_class};
}

std::vector<EdgeSample> sb_samples(const SplitDataset& split, const Partition& partition, SbMode mode) {
  const SignedDigraph g = training_graph(split);
  std::vector<EdgeSample> micro, meso;
  if (mode != SbMode::MesoOnly) micro = micro_sb_label(g);
  if (mode != SbMode::MicroOnly) meso = meso_sb_label(g.unlabeled_edges(), partition);
  return build_sb_set(micro, meso, mode);
}

TrainReport train_with_sb(const SplitDataset& split, std::span<const EdgeSample> sb, const TrainConfig& config) {
  return run_loop(split, sb, config, derive_seed(config.seed, 0));
}

TrainReport train_l2rw(const SplitDataset& split, const Partition& partition, const TrainConfig& config) {
  if (split.train_unlabeled.empty()) throw std::invalid_argument("train_l2rw needs unlabeled edges");
  const std::vector<EdgeSample> sb = sb_samples(split, partition, config.sb_mode);
  TrainReport r = train_with_sb(split, sb, config);
  if (sb.empty()) r.warnings.push_back("no balance-labeled edges; trained on labeled edges only");
  return r;
}

TrainReport train_supervised(const SplitDataset& split, const TrainConfig& config) {
  return train_with_sb(split, {}, config);
}

const char* to_string(PseudoLabelStrategy s) {
  switch (s) {
    case PseudoLabelStrategy::All: return "all";
    case PseudoLabelStrategy::Random: return "random";
    case PseudoLabelStrategy::Uncertainty: return "uncertainty";
  }
  return "?";
}

std::vector<std::size_t> select_most_certain(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  if (k >= scores.size()) return order;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  const std::size_t low = k / 2;
  const std::size_t high = k - low;
  std::vector<std::size_t> out(order.begin(), order.begin() + low);
  out.insert(out.end(), order.end() - high, order.end());
  std::sort(out.begin(), out.end());
  return out;
}

PseudoLabelReport train_pseudo_label(const SplitDataset& split, const TrainConfig& config,
                                     PseudoLabelStrategy strategy, std::size_t k, std::size_t rounds) {
  if (split.train_labeled.empty()) throw std::invalid_argument("pseudo-labeling needs labeled edges");
  if (strategy != PseudoLabelStrategy::All && k == 0) throw std::invalid_argument("K must be positive");
  PseudoLabelReport out;
  SplitDataset pool = split;
  pool.unlabeled_truth.clear();
  std::vector<std::size_t> remaining(split.train_unlabeled.size());
  std::iota(remaining.begin(), remaining.end(), 0);
  Rng rng(derive_seed(config.seed, 2));

  TrainReport current = run_loop(pool, {}, config, derive_seed(config.seed, 0));
  out.best = current;
  out.round_val_macro_f1.push_back(current.best_val_macro_f1);
  const std::size_t max_rounds = strategy == PseudoLabelStrategy::All ? 1 : rounds;

  for (std::size_t round = 1; round <= max_rounds && !remaining.empty(); ++round) {
    std::vector<std::size_t> chosen;  // positions in `remaining`
    if (strategy == PseudoLabelStrategy::All || k >= remaining.size()) {
      chosen.resize(remaining.size());
      std::iota(chosen.begin(), chosen.end(), 0);
    } else if (strategy == PseudoLabelStrategy::Random) {
      chosen = sample_without_replacement(rng, remaining.size(), k);
      std::sort(chosen.begin(), chosen.end());
    } else {
      std::vector<double> scores;
      scores.reserve(remaining.size());
      for (std::size_t i : remaining) {
        const Edge e = split.train_unlabeled[i];
        scores.push_back(score_edge(current.best_params, e.src, e.dst));
      }
      chosen = select_most_certain(scores, k);
    }

    std::vector<std::size_t> selected;
    for (std::size_t c : chosen) {
      const std::size_t i = remaining[c];
      selected.push_back(i);
      const Edge e = split.train_unlabeled[i];
      pool.train_labeled.push_back({e, predict_sign(current.best_params, e)});
    }
    std::vector<bool> taken(remaining.size(), false);
    for (std::size_t c : chosen) taken[c] = true;
    std::vector<std::size_t> rest;
    for (std::size_t c = 0; c < remaining.size(); ++c) {
      if (!taken[c]) rest.push_back(remaining[c]);
    }
    remaining = std::move(rest);
    pool.train_unlabeled.clear();
    for (std::size_t i : remaining) pool.train_unlabeled.push_back(split.train_unlabeled[i]);

    current = run_loop(pool, {}, config, derive_seed(config.seed, 100 + round));
    out.selections.push_back(std::move(selected));
    out.round_val_macro_f1.push_back(current.best_val_macro_f1);
    out.rounds = round;
    if (current.best_val_macro_f1 > out.best.best_val_macro_f1) {
      out.best = current;
      out.best_round = round;
    }
  }
  return out;
}

}  // namespace msb
