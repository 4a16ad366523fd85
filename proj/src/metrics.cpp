#include "msb/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace msb {

namespace {

void check_inputs(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.empty()) throw std::invalid_argument("metrics need at least one prediction");
  if (predictions.size() != labels.size()) throw std::invalid_argument("predictions and labels differ in length");
}

}  // namespace

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  check_inputs(predictions, labels);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

MacroF1 macro_f1_detail(std::span<const int> predictions, std::span<const int> labels) {
  check_inputs(predictions, labels);
  // Counts for the positive class; the negative class mirrors them.
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = predictions[i] > 0;
    const bool truth = labels[i] > 0;
    if (pred && truth) ++tp;
    if (pred && !truth) ++fp;
    if (!pred && truth) ++fn;
    if (!pred && !truth) ++tn;
  }
  auto f1 = [](std::size_t t, std::size_t f_pos, std::size_t f_neg) {
    const std::size_t denom = 2 * t + f_pos + f_neg;
    return denom ? 2.0 * static_cast<double>(t) / static_cast<double>(denom) : 0.0;
  };
  MacroF1 r;
  r.f1_positive = f1(tp, fp, fn);
  r.f1_negative = f1(tn, fn, fp);
  const bool positive_present = tp + fp + fn > 0;
  const bool negative_present = tn + fn + fp > 0;
  if (positive_present && negative_present) {
    r.value = 0.5 * (r.f1_positive + r.f1_negative);
  } else {
    r.single_class = true;
    r.value = positive_present ? r.f1_positive : r.f1_negative;
  }
  return r;
}

double macro_f1(std::span<const int> predictions, std::span<const int> labels) {
  return macro_f1_detail(predictions, labels).value;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("incomplete beta argument outside [0,1]");
  if (x == 0.0 || x == 1.0) return x;
  if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - regularized_incomplete_beta(b, a, 1.0 - x);

  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) break;
  }
  return std::exp(log_front) * h / a;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired samples differ in length");
  if (a.size() < 2) throw std::invalid_argument("paired t-test needs at least two pairs");
  const double n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  TTestResult r;
  r.df = a.size() - 1;
  if (sd == 0.0) {
    r.t = mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), mean);
    r.p = mean == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.t = mean / (sd / std::sqrt(n));
  r.p = student_t_two_sided_p(r.t, static_cast<double>(r.df));
  return r;
}

std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return r;
}

}  // namespace msb
