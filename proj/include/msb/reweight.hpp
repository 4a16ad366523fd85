#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "msb/model.hpp"

namespace msb {

enum class EpsilonInit {
  Uniform,  ///< epsilon_i ~ U(0, 1)
  Zero,     ///< epsilon_i = 0
};

struct ReweightConfig {
  double alpha = 1e-3;  ///< meta step size for the look-ahead parameters
  double eta = 1.0;     ///< step applied to the epsilon gradient
  std::uint64_t seed = 0;
  EpsilonInit init = EpsilonInit::Uniform;
};

struct ReweightResult {
  std::vector<double> weights;
  std::vector<double> epsilon;
  /// d l_clean(theta_hat(epsilon)) / d epsilon_i
  std::vector<double> epsilon_gradient;
  /// l_clean evaluated at the look-ahead parameters.
  double meta_clean_loss = 0.0;
};

/// Learns weights for a batch of balance-labeled samples from one look-ahead
/// step:
///
///   theta_hat = theta - alpha * sum_i eps_i grad L_i(theta)
///   grad_eps_i = -alpha * <grad L_i(theta), grad l_clean(theta_hat)>
///   w_i = max(0, eps_i - eta * grad_eps_i), then normalized to sum 1
///
/// epsilon enters theta_hat linearly, so the inner product is the exact
/// derivative. If every clipped weight is zero the result is all zeros.
/// `clean` weights are ignored; l_clean is the mean loss over the batch.
ReweightResult reweight(const ModelParams& params, std::span<const EdgeSample> clean,
                        std::span<const EdgeSample> sb, const ReweightConfig& config);

/// theta - alpha * sum_i eps_i grad L_i(theta) over `sb`.
ModelParams lookahead_params(const ModelParams& params, std::span<const EdgeSample> sb,
                             std::span<const double> epsilon, double alpha);

/// Mean clamped BCE over `clean` at lookahead_params(...). Used to check the
/// epsilon gradient by finite differences.
double lookahead_clean_loss(const ModelParams& params, std::span<const EdgeSample> clean,
                            std::span<const EdgeSample> sb, std::span<const double> epsilon, double alpha);

/// sum_i w_i L_sign(theta, l_i). Throws std::invalid_argument when the
/// lengths differ or a weight is outside [0, 1].
LossValue weighted_sb_loss(const ModelParams& params, std::span<const EdgeSample> sb, std::span<const double> w);

}  // namespace msb
