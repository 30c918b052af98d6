#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "czlab/dyadic.hpp"
#include "czlab/errors.hpp"
#include "czlab/haar.hpp"
#include "czlab/operators.hpp"
#include "czlab/space.hpp"

namespace czlab {

// Columns: frame vectors of the indicators of the level-k cubes.
inline Eigen::MatrixXd level_indicators(const FiniteSpace& s, const DyadicSystem& D, int k) {
  Eigen::MatrixXd U(s.n(), static_cast<Eigen::Index>(D.levels[k].size()));
  for (std::size_t i = 0; i < D.levels[k].size(); ++i) U.col(static_cast<Eigen::Index>(i)) = indicator_frame(s, D.levels[k][i].points);
  return U;
}

inline Eigen::MatrixXd level_difference_matrix(const DyadicSystem& D, const HaarBasis& B, int k) {
  const Eigen::Index n = B.H.rows();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  if (k >= D.depth()) return M;
  for (std::size_t i = 0; i < D.levels[k].size(); ++i) M += difference_matrix(B, k, static_cast<int>(i));
  return M;
}

struct ParaproductSymbols {
  Eigen::VectorXd t1;      // T1 as a function
  Eigen::VectorXd tstar1;  // T*1 as a function
};

inline ParaproductSymbols paraproduct_symbols(const FiniteSpace& s, const Eigen::MatrixXd& T) {
  require(T.rows() == s.n() && T.cols() == s.n(), "paraproduct_symbols: size mismatch");
  const Eigen::VectorXd one = s.mass.cwiseSqrt();
  return {from_frame(s, T * one), from_frame(s, T.transpose() * one)};
}

// sup_Q ||D_Q f||_inf.
inline double dyadic_bmo(const FiniteSpace& s, const DyadicSystem& D, const HaarBasis& B, const Eigen::VectorXd& f) {
  const Eigen::VectorXd fr = to_frame(s, f);
  double best = 0.0;
  for (int k = 0; k < D.depth(); ++k)
    for (std::size_t i = 0; i < D.levels[k].size(); ++i) {
      Eigen::VectorXd d = Eigen::VectorXd::Zero(s.n());
      for (int id : B.index[k][i]) d += B.H.col(id).dot(fr) * B.H.col(id);
      best = std::max(best, from_frame(s, d).cwiseAbs().maxCoeff());
    }
  return best;
}

struct LevelBlocks {
  Eigen::MatrixXd dd;  // sum_{P,Q} D_P T D_Q
  Eigen::MatrixXd pq;  // sum_{P,Q} D*_{P,Q} T D_Q
  Eigen::MatrixXd qp;  // sum_{P,Q} D_P T D_{Q,P}
};

struct Decomposition {
  int a = 0, b = 0;
  Eigen::MatrixXd target;          // E_b T E_b - E_a T E_a
  Eigen::MatrixXd t1;              // <T1,1> mu(X)^{-2} 1 (x) 1
  Eigen::MatrixXd pi_t1;           // Pi_{T1} over levels [a, b)
  Eigen::MatrixXd pi_star_tstar1;  // (Pi_{T*1})^*
  std::vector<LevelBlocks> t00_blocks;  // index k - a
  double telescoping_residual = 0.0;    // ||target - sum_k (DTD + ETD + DTE)||_F
  double regrouped_residual = 0.0;      // ||target - (Pi + Pi* + T00)||_F
  double full_residual = -1.0;          // ||T - target - t1||_F when [a,b] = [0,K]

  Eigen::MatrixXd t00() const {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(target.rows(), target.cols());
    for (const auto& L : t00_blocks) M += L.dd + L.pq + L.qp;
    return M;
  }
};

inline Decomposition telescoping_decomposition(const FiniteSpace& s, const DyadicSystem& D, const HaarBasis& B,
                                               const Eigen::MatrixXd& T, int a, int b) {
  require(T.rows() == s.n() && T.cols() == s.n(), "telescoping: size mismatch");
  if (a < 0 || b > D.depth() || a > b) throw ValidationError("telescoping: level range outside the system");
  const int n = s.n();
  const Eigen::VectorXd one = s.mass.cwiseSqrt();
  const Eigen::VectorXd T1 = T * one, Ts1 = T.transpose() * one;
  Decomposition out;
  out.a = a;
  out.b = b;
  const Eigen::MatrixXd Ea = level_expectation_matrix(s, D, a), Eb = level_expectation_matrix(s, D, b);
  out.target = Eb * T * Eb - Ea * T * Ea;
  out.t1 = (B.mean_dir.dot(T * B.mean_dir)) * B.mean_dir * B.mean_dir.transpose();
  out.pi_t1 = Eigen::MatrixXd::Zero(n, n);
  out.pi_star_tstar1 = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd telescoped = Eigen::MatrixXd::Zero(n, n);
  for (int k = a; k < b; ++k) {
    const Eigen::MatrixXd Ek = level_expectation_matrix(s, D, k);
    const Eigen::MatrixXd Dk = level_difference_matrix(D, B, k);
    const Eigen::MatrixXd TDk = T * Dk, DkT = Dk * T;
    telescoped += Dk * TDk + Ek * TDk + DkT * Ek;
    // Paraproduct parts: sum_P (D_P T1) (x) 1_P/mu(P) and its dual counterpart.
    Eigen::MatrixXd pik = Eigen::MatrixXd::Zero(n, n), pisk = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < D.levels[k].size(); ++i) {
      const Cube& P = D.levels[k][i];
      if (B.index[k][i].empty()) continue;
      const Eigen::MatrixXd DP = difference_matrix(B, k, static_cast<int>(i));
      const Eigen::VectorXd avgP = average_functional(s, P);
      pik += (DP * T1) * avgP.transpose();
      pisk += avgP * (DP * Ts1).transpose();
    }
    // Sum over Q of D_{Q,P} is E_k - 1 (x) 1_P/mu(P); the 1_P part is the paraproduct.
    LevelBlocks L;
    L.dd = Dk * TDk;
    L.qp = DkT * Ek - pik;
    L.pq = Ek * TDk - pisk;
    out.pi_t1 += pik;
    out.pi_star_tstar1 += pisk;
    out.t00_blocks.push_back(std::move(L));
  }
  out.telescoping_residual = (out.target - telescoped).norm();
  out.regrouped_residual = (out.target - out.pi_t1 - out.pi_star_tstar1 - out.t00()).norm();
  if (a == 0 && b == D.depth()) out.full_residual = (T - out.target - out.t1).norm();
  return out;
}

// |<T h_P, h_Q>| against omega(l/(l+rho)) sqrt(mu P mu Q)/V(z_P, l+rho) for same-level pairs.
struct HaarDecayAudit {
  double constant = 0.0;
  std::vector<double> per_level;
  long pairs = 0;
};

inline HaarDecayAudit haar_decay_audit(const FiniteSpace& s, const DyadicSystem& D, const HaarBasis& B,
                                       const Eigen::MatrixXd& T, double eta) {
  require(eta > 0.0 && eta <= 1.0, "haar_decay_audit: eta must lie in (0,1]");
  HaarDecayAudit out;
  for (int k = 0; k < D.depth(); ++k) {
    std::vector<int> ids;
    for (const auto& v : B.index[k]) ids.insert(ids.end(), v.begin(), v.end());
    double best = 0.0;
    if (!ids.empty()) {
      Eigen::MatrixXd Hk(B.H.rows(), static_cast<Eigen::Index>(ids.size()));
      for (std::size_t c = 0; c < ids.size(); ++c) Hk.col(static_cast<Eigen::Index>(c)) = B.H.col(ids[c]);
      const Eigen::MatrixXd C = Hk.transpose() * T * Hk;  // C(q, p) = <T h_p, h_q>
      const double l = D.scale[k];
      for (std::size_t p = 0; p < ids.size(); ++p)
        for (std::size_t q = 0; q < ids.size(); ++q) {
          const Cube& P = D.levels[k][B.funcs[ids[p]].cube];
          const Cube& Q = D.levels[k][B.funcs[ids[q]].cube];
          const double rho = s.dist(P.center, Q.center);
          const double bound = std::pow(l / (l + rho), eta) * std::sqrt(P.mass * Q.mass) /
                               ball_volume(s, P.center, l + rho);
          best = std::max(best, std::abs(C(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(p))) / bound);
          ++out.pairs;
        }
    }
    out.per_level.push_back(best);
    out.constant = std::max(out.constant, best);
  }
  return out;
}

// Distance-doubling probe at one level: P is the first cube with a Haar function, Q ranges over
// same-level cubes at least two side lengths away. Slopes are least-squares fits of log|coef| on log rho.
struct DoublingProbe {
  std::vector<double> separation;
  std::vector<double> one_sided;  // max_alpha |<T h_P^alpha, h_Q^0>|
  std::vector<double> two_sided;  // max_{alpha,beta} |<T h_P^alpha, h_Q^beta>|
  double slope_one = 0.0, slope_two = 0.0;
};

inline DoublingProbe distance_doubling_probe(const FiniteSpace& s, const DyadicSystem& D, const HaarBasis& B,
                                             const Eigen::MatrixXd& T, int level) {
  require(level >= 0 && level < D.depth(), "doubling probe: level out of range");
  int p = -1;
  for (std::size_t i = 0; i < D.levels[level].size() && p < 0; ++i)
    if (!B.index[level][i].empty()) p = static_cast<int>(i);
  require(p >= 0, "doubling probe: no Haar function on this level");
  const Cube& P = D.levels[level][p];
  const double l = D.scale[level];
  DoublingProbe out;
  std::vector<double> lx, l1, l2;
  for (std::size_t q = 0; q < D.levels[level].size(); ++q) {
    const Cube& Q = D.levels[level][q];
    const double rho = s.dist(P.center, Q.center);
    if (rho < 2.0 * l) continue;
    const Eigen::VectorXd hq0 = indicator_frame(s, Q.points) / std::sqrt(Q.mass);
    double one = 0.0, two = 0.0;
    for (int a : B.index[level][p]) {
      const Eigen::VectorXd Th = T * B.H.col(a);
      one = std::max(one, std::abs(hq0.dot(Th)));
      for (int bb : B.index[level][q]) two = std::max(two, std::abs(B.H.col(bb).dot(Th)));
    }
    out.separation.push_back(rho);
    out.one_sided.push_back(one);
    out.two_sided.push_back(two);
    if (one > 0) { lx.push_back(std::log(rho)); l1.push_back(std::log(one)); }
  }
  if (lx.size() >= 2) out.slope_one = fit_line(lx, l1).slope;
  std::vector<double> tx, t2;
  for (std::size_t i = 0; i < out.separation.size(); ++i)
    if (out.two_sided[i] > 0) { tx.push_back(std::log(out.separation[i])); t2.push_back(std::log(out.two_sided[i])); }
  if (tx.size() >= 2) out.slope_two = fit_line(tx, t2).slope;
  return out;
}

enum class ShiftFamily { mm, mi, im, j0, zj };

inline std::string family_name(ShiftFamily f) {
  switch (f) {
    case ShiftFamily::mm: return "(m,m)";
    case ShiftFamily::mi: return "(m,i)";
    case ShiftFamily::im: return "(i,m)";
    case ShiftFamily::j0: return "(j,0)";
    case ShiftFamily::zj: return "(0,j)";
  }
  return "?";
}

// One pigeonholed family. m is the distance annulus (omega(delta^m) scale), n the generation of the
// common ancestor R that the pair was filed under, (i, j) the shift complexity.
struct ExtractedFamily {
  ShiftFamily family = ShiftFamily::mm;
  int m = 0, n = 0;
  ShiftCoefficients coeffs;
  double constant = 0.0;  // max |a| mu(top) / (sqrt(mu row mu col) omega(delta^m))
  double s2 = 0.0;        // Frobenius norm of the coefficients = S^2 norm of the shift
};

struct ExtractionOptions {
  int m_max = -1;       // -1: the level span
  int m0 = -1;          // -1: take from the system, else 1
  double eps0 = -1.0;   // -1: take from the system, else 0.25
  double eta = 1.0;     // omega(t) = t^eta for the normalization audit
};

struct ShiftExtraction {
  int m0 = 0, m_max = 0;
  double eps0 = 0.0, eta = 1.0;
  std::vector<ExtractedFamily> families;
  std::vector<Eigen::MatrixXi> annulus;  // annulus[k](P,Q) = m with chi_m(P,Q) = 1 (theta = chi here)
  Eigen::MatrixXd tail;                  // pairs beyond m_max, kept so that nothing is dropped
  Eigen::MatrixXd reconstruction;        // families + tail + paraproducts + T1
  double residual = 0.0;                 // ||T - reconstruction||_F
  double constant = 0.0;                 // max over families

  Eigen::MatrixXd shifts_sum(const HaarBasis& B) const;
};

namespace detail {

struct FamilyKey {
  ShiftFamily f;
  int m, n, i, j;
  auto tie() const { return std::tie(f, m, n, i, j); }
  bool operator<(const FamilyKey& o) const { return tie() < o.tie(); }
};

struct BlockAcc {
  std::map<std::pair<int, int>, double> entries;  // (row Haar id, col Haar id)
  double top_mass = 0.0;                          // mu of the reference cube for the audit
};

}  // namespace detail

inline Eigen::MatrixXd ShiftExtraction::shifts_sum(const HaarBasis& B) const {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(B.size(), B.size());
  for (const auto& F : families)
    for (const auto& blk : F.coeffs.blocks)
      for (std::size_t r = 0; r < blk.rows.size(); ++r)
        for (std::size_t c = 0; c < blk.cols.size(); ++c)
          C(blk.rows[r], blk.cols[c]) += blk.a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return B.H * C * B.H.transpose();
}

// Fixed-system pigeonholing of T00 into shift families, with theta_m = chi_m. A same-level pair
// (P,Q) with annulus m and least common ancestor generation g is filed under its ancestor R at
// generation n = max(m, g), so every pair lands somewhere and the rearrangement is lossless.
inline ShiftExtraction extract_shifts(const FiniteSpace& s, const DyadicSystem& D, const HaarBasis& B,
                                      const Eigen::MatrixXd& T, const ExtractionOptions& opt = {}) {
  require(T.rows() == s.n() && T.cols() == s.n(), "extract_shifts: size mismatch");
  const int K = D.depth();
  ShiftExtraction out;
  out.m0 = opt.m0 >= 0 ? opt.m0 : (D.m0 >= 0 ? D.m0 : 1);
  out.eps0 = opt.eps0 > 0 ? opt.eps0 : (D.eps0 > 0 ? D.eps0 : 0.25);
  out.eta = opt.eta;
  auto annulus_of = [&](int k, int p, int q) {
    const double d = s.dist(D.levels[k][p].center, D.levels[k][q].center);
    int m = out.m0;
    while (d >= out.eps0 * std::pow(D.delta, -m) * D.scale[k]) ++m;
    return m;
  };
  // The level span: the largest annulus index any same-level pair reaches.
  int span = out.m0;
  for (int k = 0; k < K; ++k)
    for (std::size_t p = 0; p < D.levels[k].size(); ++p)
      for (std::size_t q = 0; q < D.levels[k].size(); ++q)
        span = std::max(span, annulus_of(k, static_cast<int>(p), static_cast<int>(q)));
  out.m_max = opt.m_max < 0 ? span : opt.m_max;
  if (out.m_max > span) throw ValidationError("extract_shifts: m_max exceeds the level span");
  require(out.m0 <= out.m_max, "extract_shifts: m0 exceeds m_max");
  const int nh = B.size();
  const Eigen::MatrixXd TH = T * B.H;
  Eigen::MatrixXd tailC = Eigen::MatrixXd::Zero(nh, nh);
  std::map<detail::FamilyKey, std::map<std::pair<int, int>, detail::BlockAcc>> acc;  // block key (level, cube)

  // <1_S/mu(S), h_U^beta> for a child S of U.
  auto child_coeff = [&](int kS, int iS, int id) {
    const Cube& S = D.levels[kS][iS];
    return indicator_frame(s, S.points).dot(B.H.col(id)) / S.mass;
  };
  auto omega = [&](int m) { return std::pow(D.delta, out.eta * m); };
  auto add = [&](const detail::FamilyKey& key, int blevel, int bcube, double top, int row, int col, double v,
                 bool in_range) {
    if (!in_range) {
      tailC(row, col) += v;
      return;
    }
    auto& blk = acc[key][{blevel, bcube}];
    blk.entries[{row, col}] += v;
    blk.top_mass = top;
  };

  for (int k = 0; k < K; ++k) {
    const int N = static_cast<int>(D.levels[k].size());
    Eigen::MatrixXi ann(N, N);
    const Eigen::MatrixXd U = level_indicators(s, D, k);
    const Eigen::MatrixXd TU = T * U, TtU = T.transpose() * U;
    for (int p = 0; p < N; ++p)
      for (int q = 0; q < N; ++q) {
        const int m = annulus_of(k, p, q);
        ann(p, q) = m;
        int g = 0;
        while (D.ancestor(k, p, g) != D.ancestor(k, q, g)) ++g;
        const int n = std::min(std::max(m, g), k);
        const bool in_range = m <= out.m_max;
        const int R = D.ancestor(k, p, n);
        const int Rlevel = k - n;
        const double muTopP = D.levels[k - std::min(m, k)][D.ancestor(k, p, std::min(m, k))].mass;
        const double muTopQ = D.levels[k - std::min(m, k)][D.ancestor(k, q, std::min(m, k))].mass;
        const auto& hp = B.index[k][p];
        const auto& hq = B.index[k][q];
        // (n,n): <h_P, T h_Q>.
        for (int a : hp)
          for (int bq : hq)
            add({ShiftFamily::mm, m, n, n, n}, Rlevel, R, muTopP, a, bq, B.H.col(a).dot(TH.col(bq)), in_range);
        // D_P T D_{Q,P}: c_alpha = <h_P^alpha, T 1_Q>, expanded along the Q and P chains.
        for (int a : hp) {
          const double c = B.H.col(a).dot(TU.col(q));
          if (c == 0.0) continue;
          for (int j = 1; j <= n; ++j) {
            const int Sq = D.ancestor(k, q, j - 1), Uq = D.ancestor(k, q, j);
            for (int beta : B.index[k - j][Uq])
              add({ShiftFamily::mi, m, n, n, n - j}, Rlevel, R, muTopP, a, beta, c * child_coeff(k - j + 1, Sq, beta),
                  in_range);
            const int Sp = D.ancestor(k, p, j - 1), Up = D.ancestor(k, p, j);
            for (int beta : B.index[k - j][Up])
              add({ShiftFamily::j0, m, n, j, 0}, k - j, Up, D.levels[k - j][Up].mass, a, beta,
                  -c * child_coeff(k - j + 1, Sp, beta), in_range);
          }
        }
        // D*_{P,Q} T D_Q: d_beta = <1_P, T h_Q^beta>, symmetric expansion.
        for (int bq : hq) {
          const double c = TtU.col(p).dot(B.H.col(bq));
          if (c == 0.0) continue;
          for (int j = 1; j <= n; ++j) {
            const int Sp = D.ancestor(k, p, j - 1), Up = D.ancestor(k, p, j);
            for (int beta : B.index[k - j][Up])
              add({ShiftFamily::im, m, n, n - j, n}, Rlevel, R, muTopQ, beta, bq, c * child_coeff(k - j + 1, Sp, beta),
                  in_range);
            const int Sq = D.ancestor(k, q, j - 1), Uq = D.ancestor(k, q, j);
            for (int beta : B.index[k - j][Uq])
              add({ShiftFamily::zj, m, n, 0, j}, k - j, Uq, D.levels[k - j][Uq].mass, beta, bq,
                  -c * child_coeff(k - j + 1, Sq, beta), in_range);
          }
        }
      }
    out.annulus.push_back(std::move(ann));
  }

  auto cube_mass = [&](int id) { return D.levels[B.funcs[id].level][B.funcs[id].cube].mass; };
  for (auto& [key, blocks] : acc) {
    ExtractedFamily F;
    F.family = key.f;
    F.m = key.m;
    F.n = key.n;
    F.coeffs.i = key.i;
    F.coeffs.j = key.j;
    double s2 = 0.0;
    for (auto& [bk, ba] : blocks) {
      ShiftBlock blk;
      blk.level = bk.first;
      blk.cube = bk.second;
      std::map<int, int> rpos, cpos;
      for (auto& [rc, v] : ba.entries) {
        rpos.emplace(rc.first, 0);
        cpos.emplace(rc.second, 0);
      }
      for (auto& [id, pos] : rpos) { pos = static_cast<int>(blk.rows.size()); blk.rows.push_back(id); }
      for (auto& [id, pos] : cpos) { pos = static_cast<int>(blk.cols.size()); blk.cols.push_back(id); }
      blk.a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(blk.rows.size()), static_cast<Eigen::Index>(blk.cols.size()));
      for (auto& [rc, v] : ba.entries) {
        blk.a(rpos[rc.first], cpos[rc.second]) = v;
        F.constant = std::max(F.constant, std::abs(v) * ba.top_mass /
                                              (std::sqrt(cube_mass(rc.first) * cube_mass(rc.second)) * omega(key.m)));
        s2 += v * v;
      }
      F.coeffs.blocks.push_back(std::move(blk));
    }
    F.s2 = std::sqrt(s2);
    out.constant = std::max(out.constant, F.constant);
    out.families.push_back(std::move(F));
  }

  const Decomposition dec = telescoping_decomposition(s, D, B, T, 0, K);
  out.tail = B.H * tailC * B.H.transpose();
  out.reconstruction = out.shifts_sum(B) + out.tail + dec.pi_t1 + dec.pi_star_tstar1 + dec.t1;
  out.residual = (T - out.reconstruction).norm();
  return out;
}

// Per (family, m): realized normalization constant, block count and S^2 mass.
inline nlohmann::json extraction_report(const ShiftExtraction& E) {
  std::map<std::pair<std::string, int>, nlohmann::json> rows;
  for (const auto& F : E.families) {
    auto& r = rows[{family_name(F.family), F.m}];
    if (r.is_null()) r = {{"family", family_name(F.family)}, {"m", F.m}, {"constant", 0.0}, {"blocks", 0}, {"s2_mass", 0.0}};
    r["constant"] = std::max(r["constant"].get<double>(), F.constant);
    r["blocks"] = r["blocks"].get<int>() + static_cast<int>(F.coeffs.blocks.size());
    r["s2_mass"] = std::hypot(r["s2_mass"].get<double>(), F.s2);
  }
  nlohmann::json fam = nlohmann::json::array();
  for (auto& [k, v] : rows) fam.push_back(v);
  return {{"m0", E.m0},           {"m_max", E.m_max},     {"eps0", E.eps0},
          {"eta", E.eta},         {"constant", E.constant}, {"residual", E.residual},
          {"tail_s2", E.tail.norm()}, {"families", fam}};
}

// Monte Carlo check of E[1_{P^(m)=Q^(m)} X] / pi_m = E[X] with X = ||D_P T D_Q||_F, P and Q the
// level-k cubes containing fixed reference points.
struct ThetaPair {
  int xp = 0, xq = 0;
  double pi_hat = 0.0;
  double lhs = 0.0, rhs = 0.0;  // E[1_A X]/pi_hat, E[X]
  double stderr_ = 0.0;
  bool agree = false;
};

struct ThetaReport {
  int level = 0, m = 0, trials = 0;
  std::vector<ThetaPair> pairs;
  double frac_pi_half = 0.0;  // fraction of pairs with pi_hat >= 1/2
  bool all_agree = true;
};

struct ThetaOptions {
  int level = -1;        // -1: deepest level with Haar functions
  int pairs = 8;
  double eps0 = 0.25;
  std::uint64_t seed = 11;
};

inline ThetaReport monte_carlo_theta(const FiniteSpace& s, double delta, const Eigen::MatrixXd& T, int m, int trials,
                                     const ThetaOptions& opt = {}) {
  require(trials >= 100, "monte_carlo_theta: need at least 100 trials");
  require(T.rows() == s.n() && T.cols() == s.n(), "monte_carlo_theta: size mismatch");
  std::vector<DyadicSystem> draws;
  std::vector<HaarBasis> bases;
  for (int t = 0; t < trials; ++t) {
    draws.push_back(random_dyadic_system(s, delta, opt.seed * 7919ULL + static_cast<std::uint64_t>(t)));
    bases.push_back(build_haar(s, draws.back()));
  }
  const int K = draws.front().depth();
  for (const auto& d : draws) require(d.depth() == K, "monte_carlo_theta: random draws disagree on depth");
  ThetaReport out;
  out.level = opt.level < 0 ? K - 1 : opt.level;
  out.m = m;
  out.trials = trials;
  require(m >= 0 && m <= out.level && out.level < K, "monte_carlo_theta: level or m out of range");
  const double bound = m == 0 ? 0.0 : opt.eps0 * std::pow(delta, -m) * draws.front().scale[out.level];

  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<int> pick(0, s.n() - 1);
  for (int t = 0; t < opt.pairs; ++t) {
    const int xp = pick(rng);
    int xq = xp;
    if (m > 0) {
      std::vector<int> near;
      for (int y = 0; y < s.n(); ++y)
        if (y != xp && s.dist(xp, y) < bound) near.push_back(y);
      if (!near.empty()) xq = near[std::uniform_int_distribution<std::size_t>(0, near.size() - 1)(rng)];
    }
    std::vector<double> X(trials), A(trials);
    for (int tr = 0; tr < trials; ++tr) {
      const DyadicSystem& D = draws[tr];
      const HaarBasis& B = bases[tr];
      const int p = D.label[out.level][xp], q = D.label[out.level][xq];
      A[tr] = D.label[out.level - m][xp] == D.label[out.level - m][xq] ? 1.0 : 0.0;
      double x = 0.0;
      if (!B.index[out.level][p].empty() && !B.index[out.level][q].empty()) {
        Eigen::MatrixXd Hp(s.n(), static_cast<Eigen::Index>(B.index[out.level][p].size()));
        Eigen::MatrixXd Hq(s.n(), static_cast<Eigen::Index>(B.index[out.level][q].size()));
        for (std::size_t c = 0; c < B.index[out.level][p].size(); ++c) Hp.col(static_cast<Eigen::Index>(c)) = B.H.col(B.index[out.level][p][c]);
        for (std::size_t c = 0; c < B.index[out.level][q].size(); ++c) Hq.col(static_cast<Eigen::Index>(c)) = B.H.col(B.index[out.level][q][c]);
        x = (Hp.transpose() * T * Hq).norm();
      }
      X[tr] = x;
    }
    ThetaPair r;
    r.xp = xp;
    r.xq = xq;
    for (int tr = 0; tr < trials; ++tr) r.pi_hat += A[tr];
    r.pi_hat /= trials;
    double ex = 0.0, eax = 0.0;
    for (int tr = 0; tr < trials; ++tr) { ex += X[tr]; eax += A[tr] * X[tr]; }
    ex /= trials;
    eax /= trials;
    r.rhs = ex;
    r.lhs = r.pi_hat > 0 ? eax / r.pi_hat : 0.0;
    double mean = 0.0, var = 0.0;
    std::vector<double> Z(trials);
    for (int tr = 0; tr < trials; ++tr) {
      Z[tr] = r.pi_hat > 0 ? X[tr] * (A[tr] / r.pi_hat - 1.0) : 0.0;
      mean += Z[tr];
    }
    mean /= trials;
    for (double z : Z) var += (z - mean) * (z - mean);
    r.stderr_ = std::sqrt(var / (trials - 1.0) / trials);
    r.agree = std::abs(mean) <= 3.0 * r.stderr_ + 1e-12 * std::max(1.0, std::abs(ex));
    out.all_agree = out.all_agree && r.agree;
    out.frac_pi_half += r.pi_hat >= 0.5;
    out.pairs.push_back(r);
  }
  out.frac_pi_half /= std::max<std::size_t>(1, out.pairs.size());
  return out;
}

}  // namespace czlab
