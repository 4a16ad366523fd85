#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace msb {

/// Fraction of exact matches. Throws std::invalid_argument on empty or
/// mismatched inputs.
double accuracy(std::span<const int> predictions, std::span<const int> labels);

struct MacroF1 {
  double value = 0.0;
  double f1_positive = 0.0;
  double f1_negative = 0.0;
  /// Only one class occurs across predictions and labels; `value` is the F1
  /// of that class alone.
  bool single_class = false;
};

/// Unweighted mean of the per-class F1 for +1 and -1.
MacroF1 macro_f1_detail(std::span<const int> predictions, std::span<const int> labels);
double macro_f1(std::span<const int> predictions, std::span<const int> labels);

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// Two-sided p-value P(|T| >= |t|) for Student's t with `df` degrees of
/// freedom.
double student_t_two_sided_p(double t, double df);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  std::size_t df = 0;
};

/// Paired two-sided t-test on a - b. With zero spread in the differences p is
/// 1 when their mean is zero and 0 otherwise. Throws when n < 2 or sizes
/// differ.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// "***" below 0.001, "**" below 0.01, "*" below 0.05, else empty.
std::string significance_stars(double p);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation
};
MeanStd mean_std(std::span<const double> values);

}  // namespace msb
