#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "czlab/dyadic.hpp"
#include "czlab/errors.hpp"
#include "czlab/lorentz.hpp"
#include "czlab/matrix.hpp"
#include "czlab/space.hpp"

namespace czlab {

using SingularValues = std::vector<double>;

inline SingularValues svd(const OperatorMatrix& T) { return singular_values(T); }

inline double schatten_lorentz(const SingularValues& sv, double p, double q) {
  for (std::size_t i = 1; i < sv.size(); ++i)
    require(sv[i] <= sv[i - 1], "schatten_lorentz: singular values must be nonincreasing");
  return lorentz_of_sorted(sv, p, q);
}

inline double schatten(const OperatorMatrix& T, double p, double q) { return schatten_lorentz(svd(T), p, q); }
inline double schatten(const OperatorMatrix& T, double p) { return schatten(T, p, p); }
inline double schatten(const Eigen::MatrixXd& T, double p) { return lorentz_of_sorted(singular_values(T), p, p); }

// (sum_{x != y} |b(x)-b(y)|^p V(x,y)^{-2} mu(x) mu(y))^{1/p}, closed-ball V.
inline double besov_norm(const FiniteSpace& s, const Eigen::VectorXd& b, double p) {
  require(p > 0.0 && std::isfinite(p), "besov_norm: p must lie in (0,inf)");
  require(b.size() == s.n(), "besov_norm: symbol length mismatch");
  double acc = 0.0;
  for (int x = 0; x < s.n(); ++x) {
    const Eigen::VectorXd V = ball_volume_row(s, x);
    for (int y = 0; y < s.n(); ++y) {
      if (y == x) continue;
      const double d = std::abs(b(x) - b(y));
      if (d > 0.0) acc += std::pow(d, p) * s.mass(x) * s.mass(y) / (V(y) * V(y));
    }
  }
  return std::pow(acc, 1.0 / p);
}

inline double weighted_median(std::vector<std::pair<double, double>> vw) {
  std::sort(vw.begin(), vw.end());
  double total = 0.0;
  for (auto& e : vw) total += e.second;
  double acc = 0.0;
  for (auto& e : vw) {
    acc += e.second;
    if (acc >= 0.5 * total) return e.first;
  }
  return vw.back().first;
}

// The three oscillation functionals of a set B: inf_c (avg|b-c|^r)^{1/r}, the mean-centered
// (avg|b-<b>|^r)^{1/r}, and the double average (avg avg |b(x)-b(y)|^r)^{1/r}.
struct OscillationTriple {
  double inf_c = 0.0;
  double mean_centered = 0.0;
  double double_average = 0.0;
};

inline double centered_power_mean(const FiniteSpace& s, const Eigen::VectorXd& b, const std::vector<int>& pts,
                                  double c, double r) {
  double a = 0.0, m = 0.0;
  for (int x : pts) a += std::pow(std::abs(b(x) - c), r) * s.mass(x), m += s.mass(x);
  return std::pow(a / m, 1.0 / r);
}

inline double mean_over(const FiniteSpace& s, const Eigen::VectorXd& b, const std::vector<int>& pts) {
  double a = 0.0, m = 0.0;
  for (int x : pts) a += b(x) * s.mass(x), m += s.mass(x);
  return a / m;
}

// inf over c is exact for r = 1 (weighted median) and r = 2 (mean); other r use c = mean.
inline double oscillation_inf(const FiniteSpace& s, const Eigen::VectorXd& b, const std::vector<int>& pts, double r) {
  double c;
  if (r == 1.0) {
    std::vector<std::pair<double, double>> vw;
    for (int x : pts) vw.emplace_back(b(x), s.mass(x));
    c = weighted_median(std::move(vw));
  } else {
    c = mean_over(s, b, pts);
  }
  return centered_power_mean(s, b, pts, c, r);
}

inline OscillationTriple oscillation_functionals(const FiniteSpace& s, const Eigen::VectorXd& b,
                                                 const std::vector<int>& pts, double r) {
  OscillationTriple o;
  o.inf_c = oscillation_inf(s, b, pts, r);
  o.mean_centered = centered_power_mean(s, b, pts, mean_over(s, b, pts), r);
  double a = 0.0, m = 0.0;
  for (int x : pts) {
    m += s.mass(x);
    for (int y : pts) a += std::pow(std::abs(b(x) - b(y)), r) * s.mass(x) * s.mass(y);
  }
  o.double_average = std::pow(a / (m * m), 1.0 / r);
  return o;
}

inline std::vector<int> closed_ball(const FiniteSpace& s, int center, double radius) {
  std::vector<int> pts;
  for (int y = 0; y < s.n(); ++y)
    if (s.dist(center, y) <= radius) pts.push_back(y);
  return pts;
}

enum class OscDomain { ball, cube };
enum class OscCentering { infimum, mean };

struct OscOptions {
  OscDomain domain = OscDomain::ball;
  OscCentering centering = OscCentering::infimum;
  double ball_factor = 0.0;  // radius c l(Q); 0 selects the realized C0 so that Q is inside B_Q
};

// Per distinct cube set: the oscillation of b over B_Q = B(z_Q, c l(Q)) (l taken at k_max(Q)).
inline std::vector<double> osc_sequence(const FiniteSpace& s, const DyadicSystem& D, const Eigen::VectorXd& b,
                                        double r, const OscOptions& opt = {}) {
  require(b.size() == s.n(), "osc_norm: symbol length mismatch");
  require(r > 0.0 && std::isfinite(r), "osc_norm: inner exponent must lie in (0,inf)");
  const double c = opt.ball_factor > 0.0 ? opt.ball_factor : D.C0;
  std::vector<double> seq(D.sets.size(), 0.0);
  for (std::size_t id = 0; id < D.sets.size(); ++id) {
    const CubeSet& S = D.sets[id];
    const Cube& Q = D.levels[S.k_max][D.label[S.k_max][D.levels[S.k_min][S.index].points.front()]];
    if (Q.points.size() == 1 && opt.domain == OscDomain::cube) continue;
    const std::vector<int> pts =
        opt.domain == OscDomain::cube ? Q.points : closed_ball(s, Q.center, c * D.scale[S.k_max]);
    seq[id] = opt.centering == OscCentering::infimum ? oscillation_inf(s, b, pts, r)
                                                     : centered_power_mean(s, b, pts, mean_over(s, b, pts), r);
  }
  return seq;
}

inline double osc_norm(const FiniteSpace& s, const DyadicSystem& D, const Eigen::VectorXd& b, double p, double q,
                       double r, const OscOptions& opt = {}) {
  check_lorentz_indices(p, q);
  return lorentz_sequence_norm(osc_sequence(s, D, b, r, opt), p, q);
}

// m_b(x,t) = avg_{B(x,t)} |b - <b>_{B(x,t)}|, one column per ladder scale.
inline Eigen::MatrixXd mean_oscillation_field(const FiniteSpace& s, const Eigen::VectorXd& b,
                                              const std::vector<double>& ladder) {
  require(b.size() == s.n(), "mean_oscillation_field: symbol length mismatch");
  for (std::size_t i = 1; i < ladder.size(); ++i)
    require(ladder[i] > ladder[i - 1], "mean_oscillation_field: ladder must increase");
  Eigen::MatrixXd m(s.n(), static_cast<Eigen::Index>(ladder.size()));
  for (int x = 0; x < s.n(); ++x) {
    const BallProfile prof = ball_profile(s, x);
    for (std::size_t t = 0; t < ladder.size(); ++t) {
      std::vector<int> pts;
      for (int y : prof.order) {
        if (s.dist(x, y) > ladder[t]) break;
        pts.push_back(y);
      }
      m(x, static_cast<Eigen::Index>(t)) = centered_power_mean(s, b, pts, mean_over(s, b, pts), 1.0);
    }
  }
  return m;
}

// Geometric ladder from the minimal gap to the diameter.
inline std::vector<double> geometric_ladder(double lo, double hi, double ratio) {
  require(lo > 0.0 && hi >= lo && ratio > 1.0, "geometric_ladder: need 0 < lo <= hi and ratio > 1");
  std::vector<double> t;
  for (double v = lo; v < hi * (1.0 - 1e-12); v *= ratio) t.push_back(v);
  t.push_back(hi);
  return t;
}

// sup_k kappa * nu_d{m_b > kappa}^{1/d}. Cell [t_k, t_{k+1}) carries mu(x)(t_k^{-d} - t_{k+1}^{-d})/d
// with value m_b(x, t_k); the last cell [t_L, inf) is exact once t_L reaches the diameter.
inline double weak_nu_norm(const FiniteSpace& s, const Eigen::MatrixXd& field, const std::vector<double>& ladder,
                           double d) {
  require(d > 0.0, "weak_nu_norm: d must be positive");
  require(field.rows() == s.n() && field.cols() == static_cast<Eigen::Index>(ladder.size()),
          "weak_nu_norm: field shape mismatch");
  std::vector<std::pair<double, double>> cells;
  for (int x = 0; x < s.n(); ++x)
    for (std::size_t k = 0; k < ladder.size(); ++k) {
      const double hi = k + 1 < ladder.size() ? std::pow(ladder[k + 1], -d) : 0.0;
      const double w = s.mass(x) * (std::pow(ladder[k], -d) - hi) / d;
      cells.emplace_back(field(x, static_cast<Eigen::Index>(k)), w);
    }
  std::sort(cells.begin(), cells.end(), [](auto& a, auto& b) { return a.first > b.first; });
  double best = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    acc += cells[i].second;
    const bool group_end = i + 1 == cells.size() || cells[i + 1].first < cells[i].first;
    if (group_end && cells[i].first > 0.0) best = std::max(best, cells[i].first * std::pow(acc, 1.0 / d));
  }
  return best;
}

struct HajlaszResult {
  double value = 0.0;        // ||h||_{L^p} of the returned feasible h
  double lower_bound = 0.0;  // certified lower bound from the barrier duality gap
  bool converged = false;
  int newton_steps = 0;
  Eigen::VectorXd h;
};

struct HajlaszOptions {
  double rel_gap = 1e-4;
  int max_newton = 5000;
};

// min sum mu h^p over h >= 0 with h(x) + h(y) >= |b(x)-b(y)|/rho(x,y), by a log-barrier
// interior-point method. Iterates stay strictly feasible; the barrier parameter bounds the gap.
inline HajlaszResult hajlasz_norm(const FiniteSpace& s, const Eigen::VectorXd& b, double p,
                                  const HajlaszOptions& opt = {}) {
  require(p > 1.0 && std::isfinite(p), "hajlasz_norm: p must lie in (1,inf)");
  require(b.size() == s.n(), "hajlasz_norm: symbol length mismatch");
  const int n = s.n();
  struct Edge { int x, y; double g; };
  std::vector<Edge> edges;
  Eigen::VectorXd gmax = Eigen::VectorXd::Zero(n);
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y) {
      const double g = std::abs(b(x) - b(y)) / s.dist(x, y);
      if (g > 0.0) {
        edges.push_back({x, y, g});
        gmax(x) = std::max(gmax(x), g);
        gmax(y) = std::max(gmax(y), g);
      }
    }
  HajlaszResult res;
  if (edges.empty()) {
    res.h = Eigen::VectorXd::Zero(n);
    res.converged = true;
    return res;
  }
  // Scale so that the largest gradient bound is 1.
  const double G = gmax.maxCoeff();
  for (auto& e : edges) e.g /= G;
  Eigen::VectorXd h = gmax / G;
  for (int x = 0; x < n; ++x) h(x) = std::max(h(x), 1e-3);
  const Eigen::VectorXd& mu = s.mass;
  const double msum = mu.sum();
  const Eigen::VectorXd w = mu / msum;  // normalized objective weights

  auto objective = [&](const Eigen::VectorXd& v) { return (w.array() * v.array().pow(p)).sum(); };
  auto barrier = [&](const Eigen::VectorXd& v, double t, bool& ok) {
    ok = true;
    double val = t * objective(v);
    for (int x = 0; x < n; ++x) {
      if (v(x) <= 0.0) { ok = false; return 0.0; }
      val -= std::log(v(x));
    }
    for (const auto& e : edges) {
      const double c = v(e.x) + v(e.y) - e.g;
      if (c <= 0.0) { ok = false; return 0.0; }
      val -= std::log(c);
    }
    return val;
  };

  const double m_total = static_cast<double>(edges.size() + n);
  double t = m_total / std::max(objective(h), 1e-12);
  int steps = 0;
  bool gap_ok = false;
  while (steps < opt.max_newton) {
    // Centering by damped Newton.
    for (int it = 0; it < 200 && steps < opt.max_newton; ++it, ++steps) {
      Eigen::VectorXd grad(n);
      Eigen::MatrixXd Hs = Eigen::MatrixXd::Zero(n, n);
      for (int x = 0; x < n; ++x) {
        grad(x) = t * p * w(x) * std::pow(h(x), p - 1.0) - 1.0 / h(x);
        Hs(x, x) = t * p * (p - 1.0) * w(x) * std::pow(h(x), p - 2.0) + 1.0 / (h(x) * h(x));
      }
      for (const auto& e : edges) {
        const double c = h(e.x) + h(e.y) - e.g, ic = 1.0 / c, ic2 = ic * ic;
        grad(e.x) -= ic;
        grad(e.y) -= ic;
        Hs(e.x, e.x) += ic2;
        Hs(e.y, e.y) += ic2;
        Hs(e.x, e.y) += ic2;
        Hs(e.y, e.x) += ic2;
      }
      Eigen::LDLT<Eigen::MatrixXd> ldlt(Hs);
      const Eigen::VectorXd dir = -ldlt.solve(grad);
      const double dec = -grad.dot(dir);
      if (dec / 2.0 <= 1e-10) break;
      bool ok;
      const double f0 = barrier(h, t, ok);
      double step = 1.0;
      for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
        const Eigen::VectorXd cand = h + step * dir;
        const double f1 = barrier(cand, t, ok);
        if (ok && f1 <= f0 - 0.25 * step * dec) {
          h = cand;
          break;
        }
      }
    }
    if (m_total / t <= opt.rel_gap * objective(h)) {
      gap_ok = true;
      break;
    }
    t *= 8.0;
  }
  const double scale = std::pow(msum, 1.0 / p) * G;
  const double F = objective(h);
  res.h = h * G;
  res.value = std::pow(F, 1.0 / p) * scale;
  res.lower_bound = std::pow(std::max(F - m_total / t, 0.0), 1.0 / p) * scale;
  res.converged = gap_ok;
  res.newton_steps = steps;
  return res;
}

// Analytic lower bound sup_{x != y} |b(x)-b(y)|/(2 rho) * (2 min(mu_x, mu_y))^{1/p}.
inline double hajlasz_pair_lower_bound(const FiniteSpace& s, const Eigen::VectorXd& b, double p) {
  double best = 0.0;
  for (int x = 0; x < s.n(); ++x)
    for (int y = x + 1; y < s.n(); ++y)
      best = std::max(best, std::abs(b(x) - b(y)) / (2.0 * s.dist(x, y)) *
                                std::pow(2.0 * std::min(s.mass(x), s.mass(y)), 1.0 / p));
  return best;
}

struct NormReport {
  std::string kind;
  double p = 0.0;
  double q = 0.0;
  double value = 0.0;
  std::string space_id;
  std::string system_id;
  long long seed = 0;
};

inline void write_norm_header(std::ostream& os) { os << "kind,p,q,value,space_id,system_id,seed\n"; }

inline void write_norm_row(std::ostream& os, const NormReport& r) {
  auto num = [](double v) {
    if (std::isinf(v)) return std::string("inf");
    std::ostringstream o;
    o.precision(17);
    o << v;
    return o.str();
  };
  os << r.kind << ',' << num(r.p) << ',' << num(r.q) << ',' << num(r.value) << ',' << r.space_id << ','
     << r.system_id << ',' << r.seed << '\n';
}

}  // namespace czlab
