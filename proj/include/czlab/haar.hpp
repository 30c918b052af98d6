#pragma once

#include <cmath>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "czlab/dyadic.hpp"
#include "czlab/errors.hpp"
#include "czlab/space.hpp"

namespace czlab {

// Conversions between point values f(x_i) and frame coordinates f(x_i) sqrt(mu_i).
inline Eigen::VectorXd to_frame(const FiniteSpace& s, const Eigen::VectorXd& f) {
  return f.cwiseProduct(s.mass.cwiseSqrt());
}
inline Eigen::VectorXd from_frame(const FiniteSpace& s, const Eigen::VectorXd& v) {
  return v.cwiseQuotient(s.mass.cwiseSqrt());
}

struct HaarFunction {
  int level = 0;
  int cube = 0;
  int alpha = 1;  // 1 <= alpha < M_Q
};

// Cancellative Haar functions of every (Q,k), as orthonormal frame vectors (columns of H).
struct HaarBasis {
  std::vector<HaarFunction> funcs;
  std::vector<std::vector<std::vector<int>>> index;  // index[k][i] = column ids of (Q,k), alpha order
  Eigen::MatrixXd H;                                 // n x funcs.size()
  Eigen::VectorXd mean_dir;                          // frame vector of mu(X)^{-1/2} 1
  Eigen::VectorXd sqrt_mass;
  double total_mass = 0.0;
  int max_alpha = 0;                                 // max_Q (M_Q - 1)

  int size() const { return static_cast<int>(funcs.size()); }
  Eigen::VectorXd column(int id) const { return H.col(id); }
};

// Frame vector of 1_Q (not normalized).
inline Eigen::VectorXd indicator_frame(const FiniteSpace& s, const std::vector<int>& pts) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(s.n());
  for (int x : pts) v(x) = std::sqrt(s.mass(x));
  return v;
}

inline HaarBasis build_haar(const FiniteSpace& s, const DyadicSystem& D) {
  require(D.n() == s.n(), "build_haar: system and space sizes differ");
  HaarBasis B;
  B.sqrt_mass = s.mass.cwiseSqrt();
  B.total_mass = s.total_mass();
  B.mean_dir = B.sqrt_mass / std::sqrt(B.total_mass);
  B.index.resize(D.depth() + 1);
  std::vector<Eigen::VectorXd> cols;
  for (int k = 0; k <= D.depth(); ++k) {
    B.index[k].resize(D.levels[k].size());
    if (k == D.depth()) continue;
    for (std::size_t i = 0; i < D.levels[k].size(); ++i) {
      const Cube& Q = D.levels[k][i];
      const int M = static_cast<int>(Q.children.size());
      B.max_alpha = std::max(B.max_alpha, M - 1);
      // tail[t] = mu(Q_t cup ... cup Q_M)
      std::vector<double> tail(M + 1, 0.0);
      for (int t = M - 1; t >= 0; --t) tail[t] = tail[t + 1] + D.levels[k + 1][Q.children[t]].mass;
      for (int t = 0; t + 1 < M; ++t) {
        const Cube& Qi = D.levels[k + 1][Q.children[t]];
        const double mi = Qi.mass, rest = tail[t + 1];
        const double scale = std::sqrt(mi * rest / tail[t]);
        Eigen::VectorXd v = Eigen::VectorXd::Zero(s.n());
        for (int x : Qi.points) v(x) = scale / mi;
        for (int u = t + 1; u < M; ++u)
          for (int x : D.levels[k + 1][Q.children[u]].points) v(x) = -scale / rest;
        B.index[k][i].push_back(static_cast<int>(cols.size()));
        B.funcs.push_back({k, static_cast<int>(i), t + 1});
        cols.push_back(v.cwiseProduct(B.sqrt_mass));
      }
    }
  }
  B.H.resize(s.n(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) B.H.col(static_cast<Eigen::Index>(c)) = cols[c];
  return B;
}

// <f, h> for every cancellative Haar function; f given by point values.
inline Eigen::VectorXd haar_coefficients(const FiniteSpace& s, const HaarBasis& B, const Eigen::VectorXd& f) {
  return B.H.transpose() * to_frame(s, f);
}

inline double average(const FiniteSpace& s, const Eigen::VectorXd& f, const std::vector<int>& pts) {
  double a = 0.0, m = 0.0;
  for (int x : pts) a += f(x) * s.mass(x), m += s.mass(x);
  return a / m;
}

enum class Projection { E_Q, D_Q, E_k, D_k };

// Martingale projections on point values. For E_Q/D_Q, `cube` selects (Q,k); for E_k/D_k it is ignored.
inline Eigen::VectorXd martingale_project(const FiniteSpace& s, const DyadicSystem& D, const HaarBasis& B,
                                          const Eigen::VectorXd& f, Projection which, int level, int cube = 0) {
  require(f.size() == s.n(), "martingale_project: function length mismatch");
  const int K = D.depth();
  const bool is_diff = which == Projection::D_Q || which == Projection::D_k;
  if (level < 0 || level > K) throw ValidationError("martingale_project: level outside system range");
  if (is_diff && level == K) return Eigen::VectorXd::Zero(s.n());  // singletons have no cancellative part
  auto expect = [&](int k, int i) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(s.n());
    const Cube& Q = D.levels[k][i];
    const double a = average(s, f, Q.points);
    for (int x : Q.points) g(x) = a;
    return g;
  };
  auto diff = [&](int k, int i) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(s.n());
    const Eigen::VectorXd fr = to_frame(s, f);
    for (int id : B.index[k][i]) v += B.H.col(id).dot(fr) * B.H.col(id);
    return from_frame(s, v);
  };
  switch (which) {
    case Projection::E_Q:
      require(cube >= 0 && cube < static_cast<int>(D.levels[level].size()), "martingale_project: cube index");
      return expect(level, cube);
    case Projection::D_Q:
      require(cube >= 0 && cube < static_cast<int>(D.levels[level].size()), "martingale_project: cube index");
      return diff(level, cube);
    case Projection::E_k: {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(s.n());
      for (std::size_t i = 0; i < D.levels[level].size(); ++i) g += expect(level, static_cast<int>(i));
      return g;
    }
    case Projection::D_k: {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(s.n());
      for (std::size_t i = 0; i < D.levels[level].size(); ++i) g += diff(level, static_cast<int>(i));
      return g;
    }
  }
  return {};
}

// Frame matrices of the projections.
inline Eigen::MatrixXd expectation_matrix(const FiniteSpace& s, const std::vector<int>& pts) {
  Eigen::VectorXd u = indicator_frame(s, pts);
  u /= u.norm();
  return u * u.transpose();
}

inline Eigen::MatrixXd difference_matrix(const HaarBasis& B, int k, int i) {
  const Eigen::Index n = B.H.rows();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int id : B.index[k][i]) M += B.H.col(id) * B.H.col(id).transpose();
  return M;
}

inline Eigen::MatrixXd level_expectation_matrix(const FiniteSpace& s, const DyadicSystem& D, int k) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(s.n(), s.n());
  for (const Cube& Q : D.levels[k]) M += expectation_matrix(s, Q.points);
  return M;
}

// Frame vector of the functional f -> <f>_Q, i.e. 1_Q sqrt(mu)/mu(Q).
inline Eigen::VectorXd average_functional(const FiniteSpace& s, const Cube& Q) {
  return indicator_frame(s, Q.points) / Q.mass;
}

struct ParaproductTriple {
  Eigen::MatrixXd pi;                  // Pi_b
  std::vector<Eigen::MatrixXd> gamma;  // Gamma_b^alpha, alpha = 1..max_alpha
  Eigen::MatrixXd h_avg;               // sum_P <b>_P D_P
  double avg_b = 0.0;                  // <b>_X
  Eigen::MatrixXd avg_term;            // f -> <b>_X <f>_X

  Eigen::MatrixXd sum() const {
    Eigen::MatrixXd S = pi + h_avg + avg_term;
    for (const auto& g : gamma) S += g;
    return S;
  }
};

// Pi_b = sum_P D_P b (x) 1_P/mu(P) as a frame matrix (its adjoint when requested).
inline Eigen::MatrixXd paraproduct_operator(const FiniteSpace& s, const DyadicSystem& D, const HaarBasis& B,
                                            const Eigen::VectorXd& symbol, bool adjoint = false) {
  require(symbol.size() == s.n(), "paraproduct: symbol length mismatch");
  const Eigen::VectorXd beta = to_frame(s, symbol);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(s.n(), s.n());
  for (int k = 0; k < D.depth(); ++k)
    for (std::size_t i = 0; i < D.levels[k].size(); ++i) {
      if (B.index[k][i].empty()) continue;
      Eigen::VectorXd db = Eigen::VectorXd::Zero(s.n());
      for (int id : B.index[k][i]) db += B.H.col(id).dot(beta) * B.H.col(id);
      P += db * average_functional(s, D.levels[k][i]).transpose();
    }
  if (adjoint) P.transposeInPlace();
  return P;
}

inline ParaproductTriple product_decomposition(const FiniteSpace& s, const DyadicSystem& D, const HaarBasis& B,
                                               const Eigen::VectorXd& b) {
  require(b.size() == s.n(), "product_decomposition: symbol length mismatch");
  const int n = s.n();
  ParaproductTriple T;
  T.pi = paraproduct_operator(s, D, B, b);
  T.gamma.assign(B.max_alpha, Eigen::MatrixXd::Zero(n, n));
  T.h_avg = Eigen::MatrixXd::Zero(n, n);
  const Eigen::VectorXd beta = to_frame(s, b);
  for (int k = 0; k < D.depth(); ++k)
    for (std::size_t i = 0; i < D.levels[k].size(); ++i) {
      const auto& ids = B.index[k][i];
      if (ids.empty()) continue;
      Eigen::VectorXd db = Eigen::VectorXd::Zero(n);
      for (int id : ids) db += B.H.col(id).dot(beta) * B.H.col(id);
      const Eigen::VectorXd db_values = from_frame(s, db);
      for (int id : ids) {
        const Eigen::VectorXd h = B.H.col(id);
        // (D_P b) h_P^alpha as a function, mapped to frame coordinates.
        const Eigen::VectorXd prod = db_values.cwiseProduct(from_frame(s, h)).cwiseProduct(B.sqrt_mass);
        T.gamma[B.funcs[id].alpha - 1] += prod * h.transpose();
      }
      T.h_avg += average(s, b, D.levels[k][i].points) * difference_matrix(B, k, static_cast<int>(i));
    }
  T.avg_b = b.dot(s.mass) / B.total_mass;
  T.avg_term = T.avg_b * B.mean_dir * B.mean_dir.transpose();
  return T;
}

struct ParaproductBmoAudit {
  double ratio = 0.0;       // max_Q ||D_Q b||_inf / m_b(Q)
  double doubling = 0.0;    // max_Q mu(Q)/mu(child)
};

inline ParaproductBmoAudit paraproduct_bmo_audit(const FiniteSpace& s, const DyadicSystem& D, const Eigen::VectorXd& b) {
  ParaproductBmoAudit a;
  for (int k = 0; k < D.depth(); ++k)
    for (const Cube& Q : D.levels[k]) {
      if (Q.children.size() < 2) continue;
      const double avg = average(s, b, Q.points);
      double osc = 0.0;
      for (int x : Q.points) osc += std::abs(b(x) - avg) * s.mass(x);
      osc /= Q.mass;
      double sup = 0.0;
      for (int c : Q.children) {
        const Cube& C = D.levels[k + 1][c];
        sup = std::max(sup, std::abs(average(s, b, C.points) - avg));
        a.doubling = std::max(a.doubling, Q.mass / C.mass);
      }
      if (osc > 0.0) a.ratio = std::max(a.ratio, sup / osc);
    }
  return a;
}

// CSV rows: cube-id, level, alpha, coefficient.
inline void write_haar_csv(std::ostream& os, const FiniteSpace& s, const HaarBasis& B, const Eigen::VectorXd& f) {
  const Eigen::VectorXd c = haar_coefficients(s, B, f);
  os << "cube_id,level,alpha,coefficient\n";
  os.precision(17);
  for (int id = 0; id < B.size(); ++id)
    os << B.funcs[id].cube << ',' << B.funcs[id].level << ',' << B.funcs[id].alpha << ',' << c(id) << '\n';
}

}  // namespace czlab
