#include "msb/reweight.hpp"

#include <cmath>
#include <stdexcept>

#include "msb/rng.hpp"

namespace msb {

namespace {

std::vector<EdgeSample> with_weights(std::span<const EdgeSample> samples, std::span<const double> w) {
  std::vector<EdgeSample> out(samples.begin(), samples.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i].weight = w[i];
  return out;
}

std::vector<EdgeSample> as_mean(std::span<const EdgeSample> samples) {
  std::vector<EdgeSample> out(samples.begin(), samples.end());
  const double w = samples.empty() ? 0.0 : 1.0 / static_cast<double>(samples.size());
  for (EdgeSample& s : out) s.weight = w;
  return out;
}

}  // namespace

ModelParams lookahead_params(const ModelParams& params, std::span<const EdgeSample> sb,
                             std::span<const double> epsilon, double alpha) {
  const LossValue sb_loss = sign_loss(params, with_weights(sb, epsilon));
  ModelParams hat = params;
  hat.axpy(-alpha, sb_loss.gradient);
  return hat;
}

double lookahead_clean_loss(const ModelParams& params, std::span<const EdgeSample> clean,
                            std::span<const EdgeSample> sb, std::span<const double> epsilon, double alpha) {
  return sign_loss(lookahead_params(params, sb, epsilon, alpha), as_mean(clean)).value;
}

ReweightResult reweight(const ModelParams& params, std::span<const EdgeSample> clean,
                        std::span<const EdgeSample> sb, const ReweightConfig& config) {
  if (clean.empty() || sb.empty()) throw std::invalid_argument("reweight needs nonempty clean and SB batches");
  if (!(config.alpha > 0.0) || !(config.eta > 0.0)) throw std::invalid_argument("alpha and eta must be positive");

  ReweightResult r;
  r.epsilon.resize(sb.size(), 0.0);
  if (config.init == EpsilonInit::Uniform) {
    Rng rng(config.seed);
    for (double& e : r.epsilon) e = rng.uniform_open();
  }

  // Look-ahead step; the per-sample logit coefficients at theta are reused below.
  const LossValue sb_loss = sign_loss(params, with_weights(sb, r.epsilon));
  ModelParams hat = params;
  hat.axpy(-config.alpha, sb_loss.gradient);

  const LossValue clean_loss = sign_loss(hat, as_mean(clean));
  r.meta_clean_loss = clean_loss.value;
  if (!clean_loss.gradient.all_finite()) throw std::runtime_error("non-finite clean gradient in reweight");

  r.epsilon_gradient.resize(sb.size());
  r.weights.resize(sb.size());
  double total = 0.0;
  for (std::size_t i = 0; i < sb.size(); ++i) {
    const double coef = sb_loss.logit_coefficient[i];
    const double g = coef == 0.0 ? 0.0 : -config.alpha * coef * logit_gradient_dot(params, sb[i].edge, clean_loss.gradient);
    if (!std::isfinite(g)) throw std::runtime_error("non-finite epsilon gradient in reweight");
    r.epsilon_gradient[i] = g;
    r.weights[i] = std::max(0.0, r.epsilon[i] - config.eta * g);
    total += r.weights[i];
  }
  if (total > 0.0) {
    for (double& w : r.weights) w /= total;
  } else {
    std::fill(r.weights.begin(), r.weights.end(), 0.0);
  }
  return r;
}

LossValue weighted_sb_loss(const ModelParams& params, std::span<const EdgeSample> sb, std::span<const double> w) {
  if (w.size() != sb.size()) throw std::invalid_argument("weight vector length does not match the SB batch");
  for (double x : w) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("SB weights must lie in [0, 1]");
  }
  return sign_loss(params, with_weights(sb, w));
}

}  // namespace msb
