#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "czlab/errors.hpp"

namespace czlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline void check_lorentz_indices(double p, double q) {
  if (!(p > 0.0 && std::isfinite(p)) || !(q > 0.0))
    throw ValidationError("lorentz: need p in (0,inf) and q in (0,inf]");
}

// l^{p,q} quasinorm of a nonincreasing nonnegative sequence (n is 1-based):
// q < inf: (sum_n (n^{1/p-1/q} s_n)^q)^{1/q};  q = inf: sup_n n^{1/p} s_n.
inline double lorentz_of_sorted(const std::vector<double>& s, double p, double q) {
  check_lorentz_indices(p, q);
  if (std::isinf(q)) {
    double best = 0.0;
    for (std::size_t n = 0; n < s.size(); ++n) best = std::max(best, std::pow(n + 1.0, 1.0 / p) * s[n]);
    return best;
  }
  if (q == p) {
    double acc = 0.0;
    for (double v : s) acc += std::pow(v, p);
    return std::pow(acc, 1.0 / p);
  }
  double acc = 0.0;
  for (std::size_t n = 0; n < s.size(); ++n)
    if (s[n] > 0.0) acc += std::pow(std::pow(n + 1.0, 1.0 / p - 1.0 / q) * s[n], q);
  return std::pow(acc, 1.0 / q);
}

inline std::vector<double> decreasing_rearrangement(const std::vector<double>& values) {
  std::vector<double> s(values.size());
  std::transform(values.begin(), values.end(), s.begin(), [](double v) { return std::abs(v); });
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

inline double lorentz_sequence_norm(const std::vector<double>& values, double p, double q) {
  return lorentz_of_sorted(decreasing_rearrangement(values), p, q);
}

// Distribution-function form p^{1/q} || t -> t #{|v| > t}^{1/p} ||_{L^q(dt/t)}, evaluated exactly
// for the piecewise-constant counting function. Agrees with the rearrangement form when q = p or q = inf.
inline double lorentz_distribution_form(const std::vector<double>& values, double p, double q) {
  check_lorentz_indices(p, q);
  std::vector<double> s = decreasing_rearrangement(values);
  if (std::isinf(q)) {
    double best = 0.0;
    for (std::size_t n = 0; n < s.size(); ++n) best = std::max(best, s[n] * std::pow(n + 1.0, 1.0 / p));
    return best;
  }
  double acc = 0.0;
  for (std::size_t n = 0; n < s.size(); ++n) {
    const double next = n + 1 < s.size() ? s[n + 1] : 0.0;
    acc += std::pow(n + 1.0, q / p) * (std::pow(s[n], q) - std::pow(next, q));
  }
  return std::pow(p / q * acc, 1.0 / q);
}

}  // namespace czlab
