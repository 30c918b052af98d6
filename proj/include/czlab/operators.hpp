#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "czlab/dyadic.hpp"
#include "czlab/errors.hpp"
#include "czlab/haar.hpp"
#include "czlab/matrix.hpp"
#include "czlab/norms.hpp"
#include "czlab/space.hpp"

namespace czlab {

enum class KernelFamily { hilbert, riesz, beurling, power, four_squares };

struct KernelSpec {
  KernelFamily family = KernelFamily::hilbert;
  int riesz_j = 0;              // coordinate of the Riesz kernel
  double eta = 1.0;             // declared regularity, omega(t) = t^eta
  bool real_part = false;       // four-squares / beurling: keep Re 1/(z-w)^2 only
  double r_min = 0.0;           // truncation annulus r_min <= rho < r_max
  double r_max = kInf;

  bool truncated() const { return r_min > 0.0 || std::isfinite(r_max); }
  bool complex_valued() const {
    return (family == KernelFamily::beurling || family == KernelFamily::four_squares) && !real_part;
  }
};

inline KernelFamily parse_kernel_family(const std::string& s) {
  if (s == "hilbert") return KernelFamily::hilbert;
  if (s == "riesz") return KernelFamily::riesz;
  if (s == "beurling") return KernelFamily::beurling;
  if (s == "power") return KernelFamily::power;
  if (s == "four-squares" || s == "four-squares-restricted") return KernelFamily::four_squares;
  throw ValidationError("kernel: unknown family '" + s + "'");
}

inline void check_kernel_geometry(const FiniteSpace& s, const KernelSpec& k) {
  if (!(k.eta > 0.0 && k.eta <= 1.0)) throw ValidationError("kernel: regularity eta must lie in (0,1]");
  if (!s.has_coords()) throw ValidationError("kernel: space has no coordinates");
  const int dim = static_cast<int>(s.coords.cols());
  switch (k.family) {
    case KernelFamily::hilbert:
      if (dim != 1) throw ValidationError("kernel: hilbert needs a one-dimensional space");
      break;
    case KernelFamily::riesz:
      if (k.riesz_j < 0 || k.riesz_j >= dim) throw ValidationError("kernel: riesz coordinate out of range");
      break;
    case KernelFamily::beurling:
      if (dim != 2) throw ValidationError("kernel: beurling needs a planar space");
      break;
    case KernelFamily::four_squares:
      if (dim != 2 || static_cast<int>(s.group.size()) != s.n())
        throw ValidationError("kernel: four-squares kernel needs the four-squares space");
      break;
    case KernelFamily::power:
      break;
  }
}

// K(x_i, x_j) for i != j (zero outside the truncation annulus).
inline std::complex<double> kernel_value(const FiniteSpace& s, const KernelSpec& k, int i, int j) {
  const double r = s.dist(i, j);
  if (i == j || r < k.r_min || r >= k.r_max) return 0.0;
  const Eigen::VectorXd v = (s.coords.row(i) - s.coords.row(j)).transpose();
  const double dim = static_cast<double>(v.size());
  auto beurling = [&]() {
    const std::complex<double> z(v(0), v(1));
    const std::complex<double> val = 1.0 / (z * z);
    return k.real_part ? std::complex<double>(val.real(), 0.0) : val;
  };
  switch (k.family) {
    case KernelFamily::hilbert:
      return 1.0 / v(0);
    case KernelFamily::riesz:
      return v(k.riesz_j) / std::pow(r, dim + 1.0);
    case KernelFamily::beurling:
      return beurling();
    case KernelFamily::power: {
      const double c = v(0) / r;
      return (c > 0 ? 1.0 : (c < 0 ? -1.0 : 0.0)) * std::pow(std::abs(c), k.eta) / std::pow(r, dim);
    }
    case KernelFamily::four_squares: {
      const int a = s.group[i], b = s.group[j];
      const bool linked = a == b || (a % 2 == b % 2);  // squares 0/2 and 1/3 are linked
      return linked ? beurling() : std::complex<double>(0.0);
    }
  }
  return 0.0;
}

// T_ij = K(x_i,x_j) sqrt(mu_i mu_j), zero diagonal.
inline OperatorMatrix assemble_kernel(const FiniteSpace& s, const KernelSpec& k) {
  check_kernel_geometry(s, k);
  const int n = s.n();
  Eigen::MatrixXd re = Eigen::MatrixXd::Zero(n, n), im;
  if (k.complex_valued()) im = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const std::complex<double> K = kernel_value(s, k, i, j) * std::sqrt(s.mass(i) * s.mass(j));
      re(i, j) = K.real();
      if (im.size()) im(i, j) = K.imag();
    }
  return OperatorMatrix(std::move(re), std::move(im), Frame::mu);
}

// (sum_{x != y} |K(x,y)|^2 mu(x) mu(y))^{1/2} straight from the kernel.
inline double kernel_l2_norm(const FiniteSpace& s, const KernelSpec& k) {
  check_kernel_geometry(s, k);
  double acc = 0.0;
  for (int i = 0; i < s.n(); ++i)
    for (int j = 0; j < s.n(); ++j)
      if (i != j) acc += std::norm(kernel_value(s, k, i, j)) * s.mass(i) * s.mass(j);
  return std::sqrt(acc);
}

struct CzConstants {
  double cz0 = 0.0;      // sup |K(x,y)| V(x,y)
  double cz1 = 0.0;      // sup of the smoothness ratio with omega(t) = t^eta
  double nondeg = 0.0;   // inf over (x, r) of sup_{r <= rho(x,y) < 2r} (|K(x,y)| + |K(y,x)|) V(x,y)
};

// Realized CZ constants. The smoothness sup runs over rho(x,x') <= rho(x,y)/(2 a0); exhaustive for
// n <= 128, sampled otherwise.
inline CzConstants measure_cz_constants(const FiniteSpace& s, const KernelSpec& k, std::uint64_t seed = 3) {
  check_kernel_geometry(s, k);
  const int n = s.n();
  const Eigen::MatrixXd V = ball_volume_matrix(s);
  CzConstants c;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      if (x != y) c.cz0 = std::max(c.cz0, std::abs(kernel_value(s, k, x, y)) * V(x, y));
  auto probe = [&](int x, int xp, int y) {
    if (x == xp || y == x || y == xp) return;
    const double r = s.dist(x, y), h = s.dist(x, xp);
    if (h > r / (2.0 * s.a0)) return;
    const double diff = std::abs(kernel_value(s, k, x, y) - kernel_value(s, k, xp, y)) +
                        std::abs(kernel_value(s, k, y, x) - kernel_value(s, k, y, xp));
    c.cz1 = std::max(c.cz1, diff * V(x, y) / std::pow(h / r, k.eta));
  };
  if (n <= 128) {
    for (int x = 0; x < n; ++x)
      for (int xp = 0; xp < n; ++xp)
        for (int y = 0; y < n; ++y) probe(x, xp, y);
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (long t = 0; t < 400000; ++t) {
      const int x = pick(rng), y = pick(rng);
      // choose x' among the nearest neighbours of x so that the constraint is likely to hold
      const int xp = pick(rng);
      probe(x, xp, y);
    }
  }
  const double gap = s.min_gap(), diam = s.diameter();
  c.nondeg = kInf;
  for (int x = 0; x < n; ++x)
    for (double r = gap; r * 2.0 <= diam; r *= 2.0) {
      double best = 0.0;
      for (int y = 0; y < n; ++y) {
        const double d = s.dist(x, y);
        if (y == x || d < r || d >= 2.0 * r) continue;
        best = std::max(best, (std::abs(kernel_value(s, k, x, y)) + std::abs(kernel_value(s, k, y, x))) * V(x, y));
      }
      c.nondeg = std::min(c.nondeg, best);
    }
  if (!std::isfinite(c.nondeg)) c.nondeg = 0.0;
  return c;
}

// [b,T] = diag(b) T - T diag(b).
inline OperatorMatrix commutator(const Eigen::VectorXd& b, const OperatorMatrix& T) {
  require(b.size() == T.n(), "commutator: symbol length mismatch");
  OperatorMatrix C = T;
  for (int i = 0; i < T.n(); ++i)
    for (int j = 0; j < T.n(); ++j) {
      const double f = b(i) - b(j);
      C.re(i, j) *= f;
      if (C.is_complex()) C.im(i, j) *= f;
    }
  return C;
}

// diag(w^{1/2}) T diag(w^{-1/2}): the L^2(w) singular values of T.
inline OperatorMatrix conjugate_to_weighted(const OperatorMatrix& T, const Weight& w) {
  if (T.frame != Frame::mu) throw ValidationError("conjugate_to_weighted: matrix is already in the weighted frame");
  require(w.values.size() == T.n(), "conjugate_to_weighted: weight length mismatch");
  const Eigen::VectorXd sw = w.values.cwiseSqrt(), si = sw.cwiseInverse();
  OperatorMatrix C = T;
  C.re = sw.asDiagonal() * T.re * si.asDiagonal();
  if (T.is_complex()) C.im = sw.asDiagonal() * T.im * si.asDiagonal();
  C.frame = Frame::weighted;
  return C;
}

// One block A_{(R,k)}: coefficient matrix over Haar ids (rows: P in ch^i(R,k), cols: Q in ch^j(R,k)).
struct ShiftBlock {
  int level = 0;            // k
  int cube = 0;             // R at level k
  std::vector<int> rows;    // Haar function ids
  std::vector<int> cols;
  Eigen::MatrixXd a;
};

struct ShiftCoefficients {
  int i = 0, j = 0;
  std::vector<ShiftBlock> blocks;
};

// Haar ids of the level-(k+g) cubes below (R,k).
inline std::vector<int> descendant_haar(const DyadicSystem& D, const HaarBasis& B, int k, int R, int g) {
  std::vector<int> ids;
  const int kk = k + g;
  if (kk > D.depth()) return ids;
  for (std::size_t c = 0; c < D.levels[kk].size(); ++c)
    if (D.ancestor(kk, static_cast<int>(c), g) == R)
      for (int id : B.index[kk][c]) ids.push_back(id);
  return ids;
}

// Admissible levels K_{i,j}(R) = [max(k_min, k_max - min(i,j)), k_max] for the set R.
inline bool admissible_level(const DyadicSystem& D, int k, int R, int i, int j) {
  const CubeSet& S = D.set_of(k, R);
  return k >= std::max(S.k_min, S.k_max - std::min(i, j)) && k <= S.k_max;
}

// All (R,k) with nonempty row and column Haar families, coefficients zero.
inline ShiftCoefficients empty_shift(const DyadicSystem& D, const HaarBasis& B, int i, int j) {
  require(i >= 0 && j >= 0, "shift: complexity must be nonnegative");
  ShiftCoefficients S;
  S.i = i;
  S.j = j;
  for (int k = 0; k <= D.depth(); ++k)
    for (std::size_t R = 0; R < D.levels[k].size(); ++R) {
      ShiftBlock blk;
      blk.level = k;
      blk.cube = static_cast<int>(R);
      blk.rows = descendant_haar(D, B, k, blk.cube, i);
      blk.cols = descendant_haar(D, B, k, blk.cube, j);
      if (blk.rows.empty() || blk.cols.empty()) continue;
      blk.a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(blk.rows.size()), static_cast<Eigen::Index>(blk.cols.size()));
      S.blocks.push_back(std::move(blk));
    }
  return S;
}

inline double haar_cube_mass(const DyadicSystem& D, const HaarBasis& B, int id) {
  return D.levels[B.funcs[id].level][B.funcs[id].cube].mass;
}

// Uniform [-1,1] coefficients times sqrt(mu P mu Q)/mu R; saturated mode uses random signs at equality.
inline ShiftCoefficients random_shift(const DyadicSystem& D, const HaarBasis& B, int i, int j, std::uint64_t seed,
                                      bool saturated = false) {
  ShiftCoefficients S = empty_shift(D, B, i, j);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& blk : S.blocks) {
    const double mR = D.levels[blk.level][blk.cube].mass;
    for (Eigen::Index r = 0; r < blk.a.rows(); ++r)
      for (Eigen::Index c = 0; c < blk.a.cols(); ++c) {
        const double v = u(rng);
        const double amp = saturated ? (v < 0 ? -1.0 : 1.0) : v;
        blk.a(r, c) = amp * std::sqrt(haar_cube_mass(D, B, blk.rows[r]) * haar_cube_mass(D, B, blk.cols[c])) / mR;
      }
  }
  return S;
}

inline void validate_shift(const DyadicSystem& D, const HaarBasis& B, const ShiftCoefficients& S) {
  for (const auto& blk : S.blocks) {
    require(blk.level >= 0 && blk.level <= D.depth(), "shift: block level outside the system");
    require(blk.cube >= 0 && blk.cube < static_cast<int>(D.levels[blk.level].size()), "shift: block cube index");
    require(blk.a.rows() == static_cast<Eigen::Index>(blk.rows.size()) &&
                blk.a.cols() == static_cast<Eigen::Index>(blk.cols.size()),
            "shift: block shape mismatch");
    if (!admissible_level(D, blk.level, blk.cube, S.i, S.j) && blk.a.cwiseAbs().maxCoeff() > 0.0)
      throw ValidationError("shift: coefficient outside the admissible level range");
    auto check = [&](int id, int g) {
      require(id >= 0 && id < B.size(), "shift: Haar id out of range");
      const HaarFunction& h = B.funcs[id];
      if (h.level != blk.level + g || D.ancestor(h.level, h.cube, g) != blk.cube)
        throw ValidationError("shift: Haar index is not a descendant of the block cube at the declared complexity");
    };
    for (int id : blk.rows) check(id, S.i);
    for (int id : blk.cols) check(id, S.j);
  }
}

// S = sum_blocks sum a_{PQR} h_P (x) h_Q.
inline OperatorMatrix build_shift(const DyadicSystem& D, const HaarBasis& B, const ShiftCoefficients& S) {
  validate_shift(D, B, S);
  const Eigen::Index n = B.H.rows();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (const auto& blk : S.blocks) {
    Eigen::MatrixXd Hr(n, blk.a.rows()), Hc(n, blk.a.cols());
    for (std::size_t r = 0; r < blk.rows.size(); ++r) Hr.col(static_cast<Eigen::Index>(r)) = B.H.col(blk.rows[r]);
    for (std::size_t c = 0; c < blk.cols.size(); ++c) Hc.col(static_cast<Eigen::Index>(c)) = B.H.col(blk.cols[c]);
    M += Hr * blk.a * Hc.transpose();
  }
  return OperatorMatrix(std::move(M));
}

// max |a| mu(R) / sqrt(mu(P) mu(Q)).
inline double shift_normalization(const DyadicSystem& D, const HaarBasis& B, const ShiftCoefficients& S) {
  double c = 0.0;
  for (const auto& blk : S.blocks) {
    const double mR = D.levels[blk.level][blk.cube].mass;
    for (Eigen::Index r = 0; r < blk.a.rows(); ++r)
      for (Eigen::Index q = 0; q < blk.a.cols(); ++q)
        c = std::max(c, std::abs(blk.a(r, q)) * mR /
                            std::sqrt(haar_cube_mass(D, B, blk.rows[r]) * haar_cube_mass(D, B, blk.cols[q])));
  }
  return c;
}

// ||a||_{l^p(l^2)} = (sum_blocks ||a_block||_F^p)^{1/p}.
inline double shift_lp_l2(const ShiftCoefficients& S, double p) {
  double acc = 0.0;
  for (const auto& blk : S.blocks) acc += std::pow(blk.a.norm(), p);
  return std::pow(acc, 1.0 / p);
}

// sum_blocks ||A_block||_{S^p}^p.
inline double shift_block_schatten_sum(const ShiftCoefficients& S, double p) {
  double acc = 0.0;
  for (const auto& blk : S.blocks)
    for (double v : singular_values(blk.a)) acc += std::pow(v, p);
  return acc;
}

// sum over levels of the largest block operator norm; caps ||S||_op.
inline double shift_norm_cap(const ShiftCoefficients& S) {
  std::map<int, double> per_level;
  for (const auto& blk : S.blocks) {
    const auto sv = singular_values(blk.a);
    per_level[blk.level] = std::max(per_level[blk.level], sv.empty() ? 0.0 : sv.front());
  }
  double cap = 0.0;
  for (auto& [k, v] : per_level) cap += v;
  return cap;
}

struct ShiftCommutatorParts {
  OperatorMatrix pi_part;                 // [Pi_b, S]
  std::vector<OperatorMatrix> gamma_parts;  // [Gamma_b^alpha, S]
  ShiftCoefficients special;              // a_{PQR}(<b>_P - <b>_Q)
  OperatorMatrix special_shift;
  double residual = 0.0;                  // relative Frobenius residual against diag(b)S - S diag(b)
  double block_constant = 0.0;            // max ||a'_{(R,k)}|| / (avg_R |b - <b>_R|^2)^{1/2}
};

inline ShiftCommutatorParts shift_commutator_decomposition(const FiniteSpace& s, const DyadicSystem& D,
                                                           const HaarBasis& B, const Eigen::VectorXd& b,
                                                           const ShiftCoefficients& S) {
  const OperatorMatrix Sm = build_shift(D, B, S);
  const ParaproductTriple tri = product_decomposition(s, D, B, b);
  ShiftCommutatorParts out;
  out.pi_part = OperatorMatrix(Eigen::MatrixXd(tri.pi * Sm.re - Sm.re * tri.pi));
  for (const auto& g : tri.gamma) out.gamma_parts.emplace_back(Eigen::MatrixXd(g * Sm.re - Sm.re * g));
  out.special = S;
  for (auto& blk : out.special.blocks) {
    const Cube& R = D.levels[blk.level][blk.cube];
    for (Eigen::Index r = 0; r < blk.a.rows(); ++r)
      for (Eigen::Index c = 0; c < blk.a.cols(); ++c) {
        const HaarFunction& P = B.funcs[blk.rows[r]];
        const HaarFunction& Q = B.funcs[blk.cols[c]];
        blk.a(r, c) *= average(s, b, D.levels[P.level][P.cube].points) - average(s, b, D.levels[Q.level][Q.cube].points);
      }
    const double avg = average(s, b, R.points);
    double var = 0.0;
    for (int x : R.points) var += (b(x) - avg) * (b(x) - avg) * s.mass(x);
    var /= R.mass;
    const double nrm = blk.a.norm();
    if (var > 0.0) out.block_constant = std::max(out.block_constant, nrm / std::sqrt(var));
  }
  out.special_shift = build_shift(D, B, out.special);
  const Eigen::MatrixXd direct = b.asDiagonal() * Sm.re - Sm.re * b.asDiagonal();
  Eigen::MatrixXd sum = out.pi_part.re + out.special_shift.re;
  for (const auto& g : out.gamma_parts) sum += g.re;
  const double scale = std::max(direct.norm(), 1e-300);
  out.residual = (direct - sum).norm() / (direct.norm() > 0.0 ? scale : 1.0);
  return out;
}

// Two-sided square function constant on L^2(w): the smallest C with
// ||f||^2/C <= ||<f>_X||^2 + sum_Q ||D_Q f||^2 <= C ||f||^2, all norms in L^2(w).
// Exact, from the generalized eigenproblem of the two quadratic forms.
struct SquareFunctionBounds {
  double lower = 0.0, upper = 0.0, constant = 0.0;
};

inline SquareFunctionBounds weighted_square_function(const FiniteSpace& s, const DyadicSystem& D, const HaarBasis& B,
                                                     const Weight& w) {
  const int n = s.n();
  require(w.values.size() == n, "square function: weight length mismatch");
  const Eigen::VectorXd om = w.values.cwiseProduct(s.mass);  // ||g||^2 = sum g^2 w mu
  const Eigen::VectorXd sq = s.mass.cwiseSqrt();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < D.depth(); ++k)
    for (std::size_t i = 0; i < D.levels[k].size(); ++i) {
      const auto& ids = B.index[k][i];
      if (ids.empty()) continue;
      const auto& pts = D.levels[k][i].points;
      const Eigen::Index m = static_cast<Eigen::Index>(pts.size());
      // D_Q on function values, restricted to Q: diag(mu^{-1/2}) H_Q H_Q^T diag(mu^{1/2}).
      Eigen::MatrixXd HQ(m, static_cast<Eigen::Index>(ids.size()));
      for (Eigen::Index r = 0; r < m; ++r)
        for (std::size_t c = 0; c < ids.size(); ++c) HQ(r, static_cast<Eigen::Index>(c)) = B.H(pts[r], ids[c]);
      Eigen::MatrixXd MQ = HQ * HQ.transpose();
      for (Eigen::Index r = 0; r < m; ++r)
        for (Eigen::Index c = 0; c < m; ++c) MQ(r, c) *= sq(pts[c]) / sq(pts[r]);
      Eigen::VectorXd oq(m);
      for (Eigen::Index r = 0; r < m; ++r) oq(r) = om(pts[r]);
      const Eigen::MatrixXd G = MQ.transpose() * oq.asDiagonal() * MQ;
      for (Eigen::Index r = 0; r < m; ++r)
        for (Eigen::Index c = 0; c < m; ++c) A(pts[r], pts[c]) += G(r, c);
    }
  // <f>_X 1 = 1 mu^T f / mu(X).
  const Eigen::VectorXd avg = s.mass / B.total_mass;
  A += om.sum() * avg * avg.transpose();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(A, Eigen::MatrixXd(om.asDiagonal()));
  if (ges.info() != Eigen::Success) throw ConstructionError("square function: generalized eigensolver failed");
  SquareFunctionBounds out;
  out.lower = ges.eigenvalues().minCoeff();
  out.upper = ges.eigenvalues().maxCoeff();
  out.constant = std::max(out.upper, 1.0 / out.lower);
  return out;
}

// a_n(sum lambda_Q e_Q (x) h_Q) against (Car lambda)^*(n) with e_Q = mu(Q)^{-1/2} 1_Q and h_Q the
// first cancellative Haar function of Q at its top level. Returns max_n of the ratio; sets without a
// Haar function carry lambda = 0.
inline double nwo_rank_ratio(const FiniteSpace& s, const DyadicSystem& D, const HaarBasis& B, CubeSequence lambda) {
  require(lambda.size() == D.sets.size(), "nwo: sequence length must equal the number of cube sets");
  const int n = s.n();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t id = 0; id < lambda.size(); ++id) {
    const CubeSet& S = D.sets[id];
    const Cube& Q0 = D.levels[S.k_min][S.index];
    const int top = D.label[S.k_max][Q0.points.front()];
    if (B.index[S.k_max][top].empty()) {
      lambda[id] = 0.0;
      continue;
    }
    if (lambda[id] == 0.0) continue;
    const Eigen::VectorXd e = indicator_frame(s, Q0.points) / std::sqrt(Q0.mass);
    A += lambda[id] * e * B.H.col(B.index[S.k_max][top].front()).transpose();
  }
  const std::vector<double> sv = singular_values(A);
  std::vector<double> car = carleson_transform(D, lambda);
  std::sort(car.begin(), car.end(), std::greater<>());
  double ratio = 0.0;
  const double tiny = 1e-12 * (sv.empty() ? 0.0 : sv.front());
  for (std::size_t i = 0; i < sv.size(); ++i) {
    const double c = i < car.size() ? car[i] : 0.0;
    if (c > 0.0) ratio = std::max(ratio, sv[i] / c);
    else if (sv[i] > tiny) return kInf;
  }
  return ratio;
}

// Largest nwo_rank_ratio over random lambda (single cubes, sparse, dense heavy-tailed).
inline double nwo_rank_constant(const FiniteSpace& s, const DyadicSystem& D, const HaarBasis& B, int samples,
                                std::uint64_t seed = 1) {
  const std::size_t S = D.sets.size();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, S - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double best = 0.0;
  for (int t = 0; t < samples; ++t) {
    CubeSequence lam(S, 0.0);
    const int kind = t % 3;
    if (kind == 0) {
      lam[pick(rng)] = 1.0;
    } else if (kind == 1) {
      const int support = 1 + static_cast<int>(rng() % 8);
      for (int a = 0; a < support; ++a) lam[pick(rng)] = unif(rng) - 0.5;
    } else {
      for (auto& v : lam) v = std::pow(unif(rng), 4.0) * (unif(rng) < 0.5 ? -1.0 : 1.0);
    }
    best = std::max(best, nwo_rank_ratio(s, D, B, lam));
  }
  return best;
}

// Binary export: one JSON header line {n, frame, complex}, then row-major float64 (real block, then imaginary).
inline void write_matrix_binary(std::ostream& os, const OperatorMatrix& T) {
  nlohmann::json h{{"n", T.n()}, {"frame", frame_tag(T.frame)}, {"complex", T.is_complex()}};
  os << h.dump() << '\n';
  auto dump = [&](const Eigen::MatrixXd& M) {
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      for (Eigen::Index j = 0; j < M.cols(); ++j) {
        const double v = M(i, j);
        os.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
  };
  dump(T.re);
  if (T.is_complex()) dump(T.im);
}

inline OperatorMatrix read_matrix_binary(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("matrix file: missing header");
  const nlohmann::json h = nlohmann::json::parse(line);
  const int n = h.at("n").get<int>();
  const bool cplx = h.at("complex").get<bool>();
  const Frame f = h.at("frame").get<std::string>() == "L2(w)" ? Frame::weighted : Frame::mu;
  auto load = [&]() {
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v;
        if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw ValidationError("matrix file: truncated data");
        M(i, j) = v;
      }
    return M;
  };
  Eigen::MatrixXd re = load(), im;
  if (cplx) im = load();
  return OperatorMatrix(std::move(re), std::move(im), f);
}

inline void write_matrix_csv(std::ostream& os, const OperatorMatrix& T) {
  os.precision(17);
  for (int i = 0; i < T.n(); ++i) {
    for (int j = 0; j < T.n(); ++j) {
      if (j) os << ',';
      os << T.re(i, j);
      if (T.is_complex()) os << (T.im(i, j) < 0 ? "" : "+") << T.im(i, j) << 'i';
    }
    os << '\n';
  }
}

}  // namespace czlab
