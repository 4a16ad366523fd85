#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "msb/balance.hpp"
#include "msb/graph.hpp"

namespace msb {

/// Edge representation fed to the logistic scorer.
enum class ScorerKind {
  Concat,          ///< z_u || z_v
  ConcatHadamard,  ///< z_u || z_v || (z_u * z_v), elementwise product appended
};

const char* to_string(ScorerKind kind);
ScorerKind scorer_from_string(const std::string& name);

/// Free embedding table Z (n x d) followed by the scorer vector psi, stored
/// as one flat buffer. Gradients use the same type.
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(std::size_t num_nodes, std::size_t dim, ScorerKind scorer = ScorerKind::Concat);

  std::size_t num_nodes() const { return n_; }
  std::size_t dim() const { return d_; }
  ScorerKind scorer() const { return scorer_; }
  std::size_t scorer_width() const { return scorer_ == ScorerKind::Concat ? 2 * d_ : 3 * d_; }

  std::span<double> row(NodeId u) { return {data_.data() + u * d_, d_}; }
  std::span<const double> row(NodeId u) const { return {data_.data() + u * d_, d_}; }
  std::span<double> psi() { return {data_.data() + n_ * d_, scorer_width()}; }
  std::span<const double> psi() const { return {data_.data() + n_ * d_, scorer_width()}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::size_t size() const { return data_.size(); }

  bool same_shape(const ModelParams& o) const { return n_ == o.n_ && d_ == o.d_ && scorer_ == o.scorer_; }
  bool all_finite() const;
  void set_zero();

  /// this += scale * other
  void axpy(double scale, const ModelParams& other);
  double dot(const ModelParams& other) const;
  double norm() const { return std::sqrt(dot(*this)); }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  ScorerKind scorer_ = ScorerKind::Concat;
  std::vector<double> data_;
};

/// N(0, scale^2) entries for Z and psi.
ModelParams init_gaussian(std::size_t num_nodes, std::size_t dim, ScorerKind scorer, std::uint64_t seed,
                          double scale = 0.1);

// ---------------------------------------------------------------------------
// Spectral features

struct SpectralFeatures {
  Eigen::MatrixXd vectors;         ///< n x d, orthonormal columns
  Eigen::VectorXd singular_values;  ///< descending
};

/// Top-d left singular vectors of the unsigned adjacency matrix (A_uv = 1
/// when u->v is an edge of any kind) by randomized subspace iteration. Each
/// column is signed so that its largest-magnitude entry is positive.
/// Throws std::invalid_argument if d > n.
SpectralFeatures spectral_features(const SignedDigraph& g, std::size_t d, std::uint64_t seed, int iterations = 20);

/// Embedding rows from spectral features rescaled to RMS entry `scale`; psi
/// Gaussian from `seed`.
ModelParams init_spectral(const SignedDigraph& g, std::size_t dim, ScorerKind scorer, std::uint64_t seed,
                          double scale = 0.1);

// ---------------------------------------------------------------------------
// Scoring and losses

/// Clamp applied to log-probabilities in the sign loss.
inline constexpr double kLogClamp = -100.0;

/// psi . Z_l for edge l = (u, v).
double edge_logit(const ModelParams& params, Edge e);

/// logistic(psi . Z_l), kept strictly inside (0, 1).
double score_edge(const ModelParams& params, NodeId u, NodeId v);

/// grad += scale * d(logit)/d(params) for edge e. Touches only psi and the
/// rows of the two endpoints.
void add_logit_gradient(const ModelParams& params, Edge e, double scale, ModelParams& grad);

/// <d(logit)/d(params), dense> without materializing the sparse gradient.
double logit_gradient_dot(const ModelParams& params, Edge e, const ModelParams& dense);

struct LossValue {
  double value = 0.0;
  /// Unweighted per-sample losses.
  std::vector<double> per_sample;
  /// d(per-sample loss)/d(logit); the per-sample parameter gradient is this
  /// times d(logit)/d(params).
  std::vector<double> logit_coefficient;
  ModelParams gradient;
};

/// Clamped binary cross-entropy of sample i.
double clamped_bce(double logit, int sign);
/// Derivative of clamped_bce with respect to the logit.
double clamped_bce_derivative(double logit, int sign);

/// value = sum_i weight_i * bce_i; targets are 1 for +1 and 0 for -1.
LossValue sign_loss(const ModelParams& params, std::span<const EdgeSample> samples);

/// Dense gradient of the unweighted loss of one sample.
ModelParams per_sample_gradient(const ModelParams& params, const EdgeSample& sample);

/// Graph-level loss on the embeddings alone.
class TaskLoss {
 public:
  virtual ~TaskLoss() = default;
  virtual LossValue evaluate(const ModelParams& params, std::span<const SignedEdge> labeled) const = 0;
};

/// mean over labeled edges of -log logistic(sign * <z_u, z_v>).
class SignedProximityLoss final : public TaskLoss {
 public:
  LossValue evaluate(const ModelParams& params, std::span<const SignedEdge> labeled) const override;
};

LossValue task_loss(const ModelParams& params, std::span<const SignedEdge> labeled);

/// Predicted sign: +1 when the score is at least 0.5.
int predict_sign(const ModelParams& params, Edge e);

// ---------------------------------------------------------------------------
// Checkpoints

nlohmann::json checkpoint_json(const ModelParams& params, const nlohmann::json& provenance = {});
ModelParams params_from_json(const nlohmann::json& j);
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const nlohmann::json& provenance = {});
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace msb
