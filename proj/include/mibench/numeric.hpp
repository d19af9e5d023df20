#ifndef MIBENCH_NUMERIC_HPP
#define MIBENCH_NUMERIC_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace mibench {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Logistic sigmoid, evaluated without overflow for either sign of s.
inline double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

// log(1 + exp(s)).
inline double softplus(double s) {
  return std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s)));
}

// ln(u / (1 - u)) for u in (0, 1).
inline double logit(double u) { return std::log(u) - std::log1p(-u); }

// log(sum_i exp(v_i)); -inf for an empty span.
inline double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -kInf;
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - m);
  return m + std::log(sum);
}

// log((1/n) sum_i exp(v_i)).
inline double log_mean_exp(std::span<const double> v) {
  return log_sum_exp(v) - std::log(static_cast<double>(v.size()));
}

struct MeanAndError {
  double mean = 0.0;
  double standard_error = 0.0;
};

// Sample mean (with a residual correction pass) and standard error of the
// mean (sample std / sqrt(n)).
inline MeanAndError mean_and_standard_error(std::span<const double> v) {
  MeanAndError out;
  if (v.empty()) return out;
  const auto n = static_cast<double>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  out.mean = sum / n;
  double residual = 0.0;
  for (double x : v) residual += x - out.mean;
  out.mean += residual / n;
  if (v.size() < 2) return out;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  const double var = ss / static_cast<double>(v.size() - 1);
  out.standard_error = std::sqrt(var / static_cast<double>(v.size()));
  return out;
}

}  // namespace mibench

#endif  // MIBENCH_NUMERIC_HPP
