#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "czlab/errors.hpp"

namespace czlab {

// Finite quasi-metric measure space. Distances are stored densely.
struct FiniteSpace {
  Eigen::MatrixXd dist;
  Eigen::VectorXd mass;
  double a0 = 1.0;
  Eigen::MatrixXd coords;   // n x dim, empty for abstract spaces
  std::vector<int> group;   // component label per point (four-squares), else empty
  std::string kind = "custom";
  // Geometry hints used by the generators and the random dyadic systems.
  int dim = 0;
  int points_per_side = 0;
  double spacing = 0.0;

  int n() const { return static_cast<int>(mass.size()); }
  double total_mass() const { return mass.sum(); }
  double diameter() const { return n() ? dist.maxCoeff() : 0.0; }
  double min_gap() const {
    double g = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n(); ++i)
      for (int j = i + 1; j < n(); ++j) g = std::min(g, dist(i, j));
    return g;
  }
  bool has_coords() const { return coords.rows() == n() && coords.cols() > 0; }
};

inline Eigen::MatrixXd euclidean_distances(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = (x.row(i) - x.row(j)).norm();
  }
  return d;
}

// Validates the structural invariants; the quasi-triangle check is separate (cubic cost).
inline void validate_space(const FiniteSpace& s) {
  const int n = s.n();
  require(s.dist.rows() == n && s.dist.cols() == n, "space: dist must be n x n");
  require(s.a0 >= 1.0, "space: a0 must be >= 1");
  for (int i = 0; i < n; ++i) {
    require(std::isfinite(s.mass(i)) && s.mass(i) > 0.0, "space: masses must be positive and finite");
    require(s.dist(i, i) == 0.0, "space: dist(i,i) must be 0");
    for (int j = i + 1; j < n; ++j) {
      require(s.dist(i, j) == s.dist(j, i), "space: dist must be symmetric");
      require(std::isfinite(s.dist(i, j)) && s.dist(i, j) > 0.0, "space: distinct points need positive distance");
    }
  }
}

// Smallest a0 with dist(i,k) <= a0 (dist(i,j) + dist(j,k)); exhaustive up to 500 points.
inline double realized_quasi_triangle(const FiniteSpace& s, std::uint64_t seed = 7, long samples = 2000000) {
  const int n = s.n();
  double worst = 0.0;
  auto probe = [&](int i, int j, int k) {
    if (i == k) return;
    const double den = s.dist(i, j) + s.dist(j, k);
    worst = std::max(worst, s.dist(i, k) / den);
  };
  if (n <= 500) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = i + 1; k < n; ++k) probe(i, j, k);
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (long t = 0; t < samples; ++t) probe(pick(rng), pick(rng), pick(rng));
  }
  return worst;
}

inline FiniteSpace space_from_matrix(Eigen::MatrixXd dist, Eigen::VectorXd mass, double a0 = 1.0) {
  FiniteSpace s;
  s.dist = std::move(dist);
  s.mass = std::move(mass);
  s.a0 = a0;
  validate_space(s);
  if (realized_quasi_triangle(s) > s.a0 * (1.0 + 1e-12))
    throw ValidationError("space: quasi-triangle inequality fails for declared a0");
  return s;
}

inline FiniteSpace space_from_points(const Eigen::MatrixXd& coords, Eigen::VectorXd mass) {
  FiniteSpace s;
  s.coords = coords;
  s.dim = static_cast<int>(coords.cols());
  s.dist = euclidean_distances(coords);
  s.mass = std::move(mass);
  validate_space(s);
  return s;
}

// Cell centers of a uniform grid on [0, m h]^dim; each cell carries mass h^dim.
inline FiniteSpace euclidean_grid(int dim, int points_per_side, double spacing) {
  require(dim >= 1 && dim <= 3, "euclidean-grid: dim must be 1, 2 or 3");
  require(points_per_side >= 1, "euclidean-grid: points-per-side must be positive");
  require(spacing > 0.0, "euclidean-grid: spacing must be positive");
  long n = 1;
  for (int a = 0; a < dim; ++a) n *= points_per_side;
  Eigen::MatrixXd x(n, dim);
  for (long i = 0; i < n; ++i) {
    long r = i;
    for (int a = 0; a < dim; ++a) {
      x(i, a) = (static_cast<double>(r % points_per_side) + 0.5) * spacing;
      r /= points_per_side;
    }
  }
  FiniteSpace s = space_from_points(x, Eigen::VectorXd::Constant(n, std::pow(spacing, dim)));
  s.kind = "euclidean-grid";
  s.points_per_side = points_per_side;
  s.spacing = spacing;
  return s;
}

// mu([a,b]) for the one-dimensional Bessel measure x^{2 lambda} dx (a >= 0), or Lebesgue on the full line.
inline double bessel_cell_mass(double a, double b, double lambda, bool full_line) {
  if (full_line) return b - a;
  const double e = 2.0 * lambda + 1.0;
  return (std::pow(b, e) - std::pow(a, e)) / e;
}

// Bessel setting on [0,1] per half-line coordinate ([-1,1] when lambda_i = alpha_i = 0),
// points_per_side cells per coordinate, exact cell masses.
inline FiniteSpace bessel_grid(const std::vector<double>& lambda, std::vector<int> alpha, int points_per_side) {
  const int dim = static_cast<int>(lambda.size());
  require(dim >= 1 && dim <= 3, "bessel-grid: need 1 to 3 coordinates");
  if (alpha.empty()) alpha.assign(dim, 1);
  require(static_cast<int>(alpha.size()) == dim, "bessel-grid: alpha length must match lambda");
  require(points_per_side >= 1, "bessel-grid: points-per-side must be positive");
  for (double l : lambda)
    if (!(l > -0.5)) throw ParameterDomainError("bessel-grid: every lambda_i must exceed -1/2");
  std::vector<std::vector<double>> centers(dim), masses(dim);
  for (int a = 0; a < dim; ++a) {
    const bool full = lambda[a] == 0.0 && alpha[a] == 0;
    const double lo = full ? -1.0 : 0.0, h = (1.0 - lo) / points_per_side;
    for (int i = 0; i < points_per_side; ++i) {
      const double l = lo + i * h, r = lo + (i + 1) * h;
      centers[a].push_back(0.5 * (l + r));
      masses[a].push_back(bessel_cell_mass(l, r, lambda[a], full));
    }
  }
  long n = 1;
  for (int a = 0; a < dim; ++a) n *= points_per_side;
  Eigen::MatrixXd x(n, dim);
  Eigen::VectorXd mu(n);
  for (long i = 0; i < n; ++i) {
    long r = i;
    double m = 1.0;
    for (int a = 0; a < dim; ++a) {
      const int c = static_cast<int>(r % points_per_side);
      x(i, a) = centers[a][c];
      m *= masses[a][c];
      r /= points_per_side;
    }
    mu(i) = m;
  }
  FiniteSpace s = space_from_points(x, mu);
  s.kind = "bessel-grid";
  s.points_per_side = points_per_side;
  return s;
}

// Leaf-interval centers of the self-similar Cantor construction on [0,1]:
// each interval splits into `branching` pieces of relative length delta, evenly spread.
inline FiniteSpace cantor(int branching, double delta, int depth) {
  require(depth >= 1, "cantor: depth must be positive");
  require(branching >= 2, "cantor: branching must be at least 2");
  if (!(delta > 0.0 && branching * delta < 1.0))
    throw ParameterDomainError("cantor: need 0 < delta and branching * delta < 1");
  std::vector<double> left{0.0};
  double len = 1.0;
  for (int k = 0; k < depth; ++k) {
    const double child = len * delta, step = (len - child) / (branching - 1);
    std::vector<double> next;
    for (double l : left)
      for (int c = 0; c < branching; ++c) next.push_back(l + c * step);
    left.swap(next);
    len = child;
  }
  const long n = static_cast<long>(left.size());
  Eigen::MatrixXd x(n, 1);
  for (long i = 0; i < n; ++i) x(i, 0) = left[i] + 0.5 * len;
  FiniteSpace s = space_from_points(x, Eigen::VectorXd::Constant(n, 1.0 / n));
  s.kind = "cantor";
  s.spacing = len;
  return s;
}

// Four unit squares with lower-left corners in {0,3}^2, each an m x m grid of cells.
// Labels: 0 = (0,0), 1 = (3,0), 2 = (3,3), 3 = (0,3), so squares 0/2 and 1/3 are diagonal pairs.
inline FiniteSpace four_squares(int points_per_side) {
  require(points_per_side >= 1, "four-squares: points-per-side must be positive");
  const int m = points_per_side;
  const double h = 1.0 / m;
  const double off[4][2] = {{0, 0}, {3, 0}, {3, 3}, {0, 3}};
  const long n = 4L * m * m;
  Eigen::MatrixXd x(n, 2);
  std::vector<int> grp(n);
  long t = 0;
  for (int q = 0; q < 4; ++q)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i, ++t) {
        x(t, 0) = off[q][0] + (i + 0.5) * h;
        x(t, 1) = off[q][1] + (j + 0.5) * h;
        grp[t] = q;
      }
  FiniteSpace s = space_from_points(x, Eigen::VectorXd::Constant(n, h * h));
  s.kind = "four-squares";
  s.group = std::move(grp);
  s.points_per_side = m;
  s.spacing = h;
  return s;
}

// Closed-ball volume mu(B(center, radius)).
inline double ball_volume(const FiniteSpace& s, int center, double radius) {
  require(radius >= 0.0, "ball_volume: radius must be nonnegative");
  double v = 0.0;
  for (int j = 0; j < s.n(); ++j)
    if (s.dist(center, j) <= radius) v += s.mass(j);
  return v;
}

// Distances from x sorted ascending, with cumulative closed-ball masses.
struct BallProfile {
  std::vector<double> radius;  // distinct realized distances, ascending (radius[0] = 0)
  std::vector<double> volume;  // volume[i] = mu(B(x, radius[i]))
  std::vector<int> order;      // points sorted by distance (ties by index)

  double at(double r) const {
    auto it = std::upper_bound(radius.begin(), radius.end(), r);
    if (it == radius.begin()) return 0.0;
    return volume[static_cast<std::size_t>(it - radius.begin()) - 1];
  }
};

inline BallProfile ball_profile(const FiniteSpace& s, int x) {
  BallProfile b;
  b.order.resize(s.n());
  std::iota(b.order.begin(), b.order.end(), 0);
  std::stable_sort(b.order.begin(), b.order.end(), [&](int a, int c) { return s.dist(x, a) < s.dist(x, c); });
  double acc = 0.0;
  for (std::size_t t = 0; t < b.order.size(); ++t) {
    const int j = b.order[t];
    acc += s.mass(j);
    const bool last = t + 1 == b.order.size() || s.dist(x, b.order[t + 1]) > s.dist(x, j);
    if (last) {
      b.radius.push_back(s.dist(x, j));
      b.volume.push_back(acc);
    }
  }
  return b;
}

// Row x of V(x,y) = mu(B(x, rho(x,y))); V(x,x) = mass(x).
inline Eigen::VectorXd ball_volume_row(const FiniteSpace& s, int x) {
  const BallProfile b = ball_profile(s, x);
  Eigen::VectorXd v(s.n());
  for (int j = 0; j < s.n(); ++j) v(j) = b.at(s.dist(x, j));
  return v;
}

inline Eigen::MatrixXd ball_volume_matrix(const FiniteSpace& s) {
  Eigen::MatrixXd v(s.n(), s.n());
  for (int x = 0; x < s.n(); ++x) v.row(x) = ball_volume_row(s, x).transpose();
  return v;
}

struct ScaleRange {
  double r_min = 0.0;
  double r_max = 0.0;
  double ratio = 2.0;

  std::vector<double> ladder() const {
    std::vector<double> r;
    for (double t = r_min; t <= r_max * (1.0 + 1e-12); t *= ratio) r.push_back(t);
    return r;
  }
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  require(n >= 2 && y.size() == n, "fit_line: need at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
  mx /= n, my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) sxx += (x[i] - mx) * (x[i] - mx), sxy += (x[i] - mx) * (y[i] - my);
  require(sxx > 0.0, "fit_line: abscissae must not all coincide");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double r2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - f.intercept - f.slope * x[i];
    r2 += e * e;
  }
  f.rms = std::sqrt(r2 / n);
  return f;
}

struct DimensionEstimate {
  double d_lower = 0.0;
  double d_sep = 0.0;
  double d_upper = 0.0;
  LineFit fit_lower, fit_sep, fit_upper;
  double tol = 0.15;
  std::vector<double> radii;

  bool ordered() const { return d_lower <= d_sep + tol && d_sep <= d_upper + tol; }
};

struct DimensionOptions {
  double lower_quantile = 0.0;  // envelope over centers for d
  double upper_quantile = 1.0;  // envelope over centers for D and Delta
  int max_centers = 512;        // volume envelopes
  int max_net_centers = 64;     // greedy separated-set counts
  double min_pair_ratio = 1.0;  // only pairs with R/r >= this enter the fits
  double tol = 0.15;
};

namespace detail {
inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

inline std::vector<int> spread_centers(int n, int cap) {
  std::vector<int> c;
  if (n <= cap) {
    c.resize(n);
    std::iota(c.begin(), c.end(), 0);
  } else {
    for (int t = 0; t < cap; ++t) c.push_back(static_cast<int>((static_cast<long>(t) * n) / cap));
  }
  return c;
}
}  // namespace detail

// Fits log V(x,R)/V(x,r) and log #(greedy r-net of B(x,R)) against log(R/r) over all ladder pairs.
inline DimensionEstimate estimate_dimensions(const FiniteSpace& s, const ScaleRange& range,
                                             const DimensionOptions& opt = {}) {
  require(range.r_min > 0.0 && range.ratio > 1.0, "estimate_dimensions: need r_min > 0 and ratio > 1");
  const std::vector<double> r = range.ladder();
  require(r.size() >= 2, "estimate_dimensions: scale range must contain at least two scales");
  const std::size_t L = r.size();

  const std::vector<int> centers = detail::spread_centers(s.n(), opt.max_centers);
  std::vector<std::vector<double>> logratio(L * L);
  for (int x : centers) {
    const BallProfile b = ball_profile(s, x);
    std::vector<double> lv(L);
    for (std::size_t i = 0; i < L; ++i) lv[i] = std::log(b.at(r[i]));
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t j = i + 1; j < L; ++j) logratio[i * L + j].push_back(lv[j] - lv[i]);
  }

  const std::vector<int> net_centers = detail::spread_centers(s.n(), opt.max_net_centers);
  std::vector<std::vector<double>> lognet(L * L);
  for (int x : net_centers) {
    const BallProfile b = ball_profile(s, x);
    for (std::size_t j = 1; j < L; ++j) {
      std::vector<int> ball;
      for (int p : b.order) {
        if (s.dist(x, p) > r[j]) break;
        ball.push_back(p);
      }
      for (std::size_t i = 0; i < j; ++i) {
        std::vector<int> net;
        for (int p : ball) {
          bool far = true;
          for (int q : net)
            if (s.dist(p, q) < r[i]) { far = false; break; }
          if (far) net.push_back(p);
        }
        lognet[i * L + j].push_back(std::log(static_cast<double>(net.size())));
      }
    }
  }

  std::vector<double> lx, ylo, yup, ysep;
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = i + 1; j < L; ++j) {
      if (r[j] / r[i] < opt.min_pair_ratio * (1.0 - 1e-12)) continue;
      lx.push_back(std::log(r[j] / r[i]));
      ylo.push_back(detail::quantile(logratio[i * L + j], opt.lower_quantile));
      yup.push_back(detail::quantile(logratio[i * L + j], opt.upper_quantile));
      ysep.push_back(detail::quantile(lognet[i * L + j], opt.upper_quantile));
    }
  DimensionEstimate e;
  e.fit_lower = fit_line(lx, ylo);
  e.fit_upper = fit_line(lx, yup);
  e.fit_sep = fit_line(lx, ysep);
  e.d_lower = e.fit_lower.slope;
  e.d_upper = e.fit_upper.slope;
  e.d_sep = e.fit_sep.slope;
  e.tol = opt.tol;
  e.radii = r;
  return e;
}

struct Weight {
  Eigen::VectorXd values;
  double a2 = 1.0;
};

// sup over closed balls of (mean w)(mean 1/w), enumerating every realized radius per center.
inline double a2_constant(const FiniteSpace& s, const Eigen::VectorXd& w) {
  require(w.size() == s.n(), "a2_constant: weight length mismatch");
  double best = 1.0;
  for (int x = 0; x < s.n(); ++x) {
    const BallProfile b = ball_profile(s, x);
    double m = 0, sw = 0, ss = 0;
    for (std::size_t t = 0; t < b.order.size(); ++t) {
      const int j = b.order[t];
      m += s.mass(j);
      sw += w(j) * s.mass(j);
      ss += s.mass(j) / w(j);
      const bool last = t + 1 == b.order.size() || s.dist(x, b.order[t + 1]) > s.dist(x, j);
      if (last) best = std::max(best, (sw / m) * (ss / m));
    }
  }
  return best;
}

inline Weight make_weight(const FiniteSpace& s, Eigen::VectorXd values) {
  require(values.size() == s.n(), "weight: length mismatch");
  for (Eigen::Index i = 0; i < values.size(); ++i)
    require(std::isfinite(values(i)) && values(i) > 0.0, "weight: values must be positive and finite");
  Weight w;
  w.values = std::move(values);
  w.a2 = a2_constant(s, w.values);
  return w;
}

// |x - origin|^a using point coordinates.
inline Weight power_weight(const FiniteSpace& s, double a, Eigen::VectorXd origin = {}) {
  require(s.has_coords(), "power weight: space has no coordinates");
  if (origin.size() == 0) origin = Eigen::VectorXd::Zero(s.coords.cols());
  Eigen::VectorXd v(s.n());
  for (int i = 0; i < s.n(); ++i) v(i) = std::pow((s.coords.row(i).transpose() - origin).norm(), a);
  return make_weight(s, std::move(v));
}

// Weak l^{1,infty}(mu) quasinorm of y -> 1/V(x,y) over y != x.
inline double weak_L1_V_inverse(const FiniteSpace& s, int x) {
  const BallProfile b = ball_profile(s, x);
  // Level sets {1/V > lambda} are balls around x minus x itself; scan radii outward.
  double best = 0.0;
  for (std::size_t i = 1; i < b.radius.size(); ++i) {
    const double value = 1.0 / b.volume[i];
    const double level_mass = b.volume[i] - s.mass(x);
    best = std::max(best, value * level_mass);
  }
  return best;
}

}  // namespace czlab
