#include "msb/model.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <Eigen/SVD>
#include <Eigen/Sparse>

#include "msb/rng.hpp"

namespace msb {

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const char* to_string(ScorerKind kind) { return kind == ScorerKind::Concat ? "concat" : "concat_hadamard"; }

ScorerKind scorer_from_string(const std::string& name) {
  if (name == "concat") return ScorerKind::Concat;
  if (name == "concat_hadamard") return ScorerKind::ConcatHadamard;
  throw std::invalid_argument("unknown scorer '" + name + "'");
}

ModelParams::ModelParams(std::size_t num_nodes, std::size_t dim, ScorerKind scorer)
    : n_(num_nodes), d_(dim), scorer_(scorer) {
  if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
  data_.assign(n_ * d_ + scorer_width(), 0.0);
}

bool ModelParams::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void ModelParams::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

void ModelParams::axpy(double scale, const ModelParams& other) {
  if (!same_shape(other)) throw std::invalid_argument("parameter shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
}

double ModelParams::dot(const ModelParams& other) const {
  if (!same_shape(other)) throw std::invalid_argument("parameter shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) s += data_[i] * other.data_[i];
  return s;
}

ModelParams init_gaussian(std::size_t num_nodes, std::size_t dim, ScorerKind scorer, std::uint64_t seed,
                          double scale) {
  ModelParams p(num_nodes, dim, scorer);
  Rng rng(seed);
  for (double& x : p.data()) x = scale * rng.normal();
  return p;
}

// ---------------------------------------------------------------------------

SpectralFeatures spectral_features(const SignedDigraph& g, std::size_t d, std::uint64_t seed, int iterations) {
  const std::size_t n = g.num_nodes();
  if (d > n) throw std::invalid_argument("spectral dimension exceeds node count");
  SpectralFeatures out;
  out.vectors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  out.singular_values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  if (g.num_edges() == 0 || d == 0) return out;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(g.num_edges());
  for (auto set : {g.positive_edges(), g.negative_edges(), g.unlabeled_edges()}) {
    for (const Edge& e : set) triplets.emplace_back(e.src, e.dst, 1.0);
  }
  Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  a.setFromTriplets(triplets.begin(), triplets.end());
  const Eigen::SparseMatrix<double> at = a.transpose();

  const auto width = static_cast<Eigen::Index>(std::min(n, d + 10));
  Rng rng(seed);
  Eigen::MatrixXd omega(static_cast<Eigen::Index>(n), width);
  for (Eigen::Index j = 0; j < width; ++j) {
    for (Eigen::Index i = 0; i < omega.rows(); ++i) omega(i, j) = rng.normal();
  }
  auto orthonormalize = [&](const Eigen::MatrixXd& m) -> Eigen::MatrixXd {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
  };
  Eigen::MatrixXd q = orthonormalize(a * omega);
  for (int it = 0; it < iterations; ++it) {
    q = orthonormalize(at * q);
    q = orthonormalize(a * q);
  }
  const Eigen::MatrixXd b = (at * q).transpose();  // width x n, equals Q^T A
  Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU);
  const Eigen::MatrixXd u = q * svd.matrixU();
  for (std::size_t j = 0; j < d; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    Eigen::VectorXd v = u.col(col);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    out.vectors.col(col) = v;
    out.singular_values(col) = svd.singularValues()(col);
  }
  return out;
}

ModelParams init_spectral(const SignedDigraph& g, std::size_t dim, ScorerKind scorer, std::uint64_t seed,
                          double scale) {
  ModelParams p = init_gaussian(g.num_nodes(), dim, scorer, seed, scale);
  const SpectralFeatures f = spectral_features(g, dim, derive_seed(seed, 1));
  // Columns have unit norm, so entries have RMS 1/sqrt(n).
  const double rescale = scale * std::sqrt(static_cast<double>(g.num_nodes()));
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    auto row = p.row(u);
    for (std::size_t k = 0; k < dim; ++k) {
      row[k] = rescale * f.vectors(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(k));
    }
  }
  return p;
}

// ---------------------------------------------------------------------------

double edge_logit(const ModelParams& params, Edge e) {
  const auto zu = params.row(e.src);
  const auto zv = params.row(e.dst);
  const auto psi = params.psi();
  const std::size_t d = params.dim();
  double a = 0.0;
  for (std::size_t k = 0; k < d; ++k) a += psi[k] * zu[k] + psi[d + k] * zv[k];
  if (params.scorer() == ScorerKind::ConcatHadamard) {
    for (std::size_t k = 0; k < d; ++k) a += psi[2 * d + k] * zu[k] * zv[k];
  }
  return a;
}

double score_edge(const ModelParams& params, NodeId u, NodeId v) {
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(logistic(edge_logit(params, {u, v})), lo, hi);
}

void add_logit_gradient(const ModelParams& params, Edge e, double scale, ModelParams& grad) {
  const std::size_t d = params.dim();
  const auto zu = params.row(e.src);
  const auto zv = params.row(e.dst);
  const auto psi = params.psi();
  auto gu = grad.row(e.src);
  auto gv = grad.row(e.dst);
  auto gpsi = grad.psi();
  const bool hadamard = params.scorer() == ScorerKind::ConcatHadamard;
  for (std::size_t k = 0; k < d; ++k) {
    gpsi[k] += scale * zu[k];
    gpsi[d + k] += scale * zv[k];
    double du = psi[k];
    double dv = psi[d + k];
    if (hadamard) {
      gpsi[2 * d + k] += scale * zu[k] * zv[k];
      du += psi[2 * d + k] * zv[k];
      dv += psi[2 * d + k] * zu[k];
    }
    gu[k] += scale * du;
    gv[k] += scale * dv;
  }
}

double logit_gradient_dot(const ModelParams& params, Edge e, const ModelParams& dense) {
  const std::size_t d = params.dim();
  const auto zu = params.row(e.src);
  const auto zv = params.row(e.dst);
  const auto psi = params.psi();
  const auto gu = dense.row(e.src);
  const auto gv = dense.row(e.dst);
  const auto gpsi = dense.psi();
  const bool hadamard = params.scorer() == ScorerKind::ConcatHadamard;
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double du = psi[k];
    double dv = psi[d + k];
    s += gpsi[k] * zu[k] + gpsi[d + k] * zv[k];
    if (hadamard) {
      s += gpsi[2 * d + k] * zu[k] * zv[k];
      du += psi[2 * d + k] * zv[k];
      dv += psi[2 * d + k] * zu[k];
    }
    s += gu[k] * du + gv[k] * dv;
  }
  return s;
}

double clamped_bce(double logit, int sign) {
  // -log s = softplus(-a); -log(1 - s) = softplus(a)
  return std::min(softplus(sign > 0 ? -logit : logit), -kLogClamp);
}

double clamped_bce_derivative(double logit, int sign) {
  if (sign > 0) return softplus(-logit) < -kLogClamp ? -logistic(-logit) : 0.0;
  return softplus(logit) < -kLogClamp ? logistic(logit) : 0.0;
}

LossValue sign_loss(const ModelParams& params, std::span<const EdgeSample> samples) {
  LossValue out;
  out.gradient = ModelParams(params.num_nodes(), params.dim(), params.scorer());
  out.per_sample.reserve(samples.size());
  out.logit_coefficient.reserve(samples.size());
  for (const EdgeSample& s : samples) {
    const double a = edge_logit(params, s.edge);
    const double loss = clamped_bce(a, s.sign);
    const double coef = clamped_bce_derivative(a, s.sign);
    out.per_sample.push_back(loss);
    out.logit_coefficient.push_back(coef);
    if (s.weight == 0.0) continue;
    out.value += s.weight * loss;
    if (coef != 0.0) add_logit_gradient(params, s.edge, s.weight * coef, out.gradient);
  }
  return out;
}

ModelParams per_sample_gradient(const ModelParams& params, const EdgeSample& sample) {
  ModelParams g(params.num_nodes(), params.dim(), params.scorer());
  const double coef = clamped_bce_derivative(edge_logit(params, sample.edge), sample.sign);
  if (coef != 0.0) add_logit_gradient(params, sample.edge, coef, g);
  return g;
}

LossValue SignedProximityLoss::evaluate(const ModelParams& params, std::span<const SignedEdge> labeled) const {
  LossValue out;
  out.gradient = ModelParams(params.num_nodes(), params.dim(), params.scorer());
  if (labeled.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(labeled.size());
  const std::size_t d = params.dim();
  for (const SignedEdge& se : labeled) {
    const auto zu = params.row(se.edge.src);
    const auto zv = params.row(se.edge.dst);
    double x = 0.0;
    for (std::size_t k = 0; k < d; ++k) x += zu[k] * zv[k];
    const double y = se.sign > 0 ? 1.0 : -1.0;
    const double loss = softplus(-y * x);
    const double coef = -y * logistic(-y * x);
    out.per_sample.push_back(loss);
    out.logit_coefficient.push_back(coef);
    out.value += inv_n * loss;
    auto gu = out.gradient.row(se.edge.src);
    auto gv = out.gradient.row(se.edge.dst);
    for (std::size_t k = 0; k < d; ++k) {
      gu[k] += inv_n * coef * zv[k];
      gv[k] += inv_n * coef * zu[k];
    }
  }
  return out;
}

LossValue task_loss(const ModelParams& params, std::span<const SignedEdge> labeled) {
  return SignedProximityLoss{}.evaluate(params, labeled);
}

int predict_sign(const ModelParams& params, Edge e) { return edge_logit(params, e) >= 0.0 ? 1 : -1; }

// ---------------------------------------------------------------------------

nlohmann::json checkpoint_json(const ModelParams& params, const nlohmann::json& provenance) {
  const auto data = params.data();
  return {
      {"format", "msb-checkpoint"},
      {"version", 1},
      {"num_nodes", params.num_nodes()},
      {"dim", params.dim()},
      {"scorer", to_string(params.scorer())},
      {"provenance", provenance},
      {"values", std::vector<double>(data.begin(), data.end())},
  };
}

ModelParams params_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "msb-checkpoint") throw std::runtime_error("not a checkpoint");
  ModelParams p(j.at("num_nodes").get<std::size_t>(), j.at("dim").get<std::size_t>(),
                scorer_from_string(j.at("scorer").get<std::string>()));
  const auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != p.size()) throw std::runtime_error("checkpoint size does not match its shape header");
  std::copy(values.begin(), values.end(), p.data().begin());
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, const nlohmann::json& provenance) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << checkpoint_json(params, provenance).dump() << '\n';
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return params_from_json(nlohmann::json::parse(in));
}

}  // namespace msb
