#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "czlab/representation.hpp"
#include "czlab/sweeps.hpp"

using namespace czlab;

namespace {

FiniteSpace grid1(int n) { return euclidean_grid(1, n, 1.0 / n); }

struct Binary {
  FiniteSpace s;
  DyadicSystem D;
  HaarBasis B;
  explicit Binary(int n) : s(grid1(n)), D(build_dyadic_system(s, 0.5)), B(build_haar(s, D)) {}
};

Eigen::MatrixXd random_matrix(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd M(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) M(i, j) = g(rng);
  return M;
}

Eigen::MatrixXd hilbert(const FiniteSpace& s) { return assemble_kernel(s, KernelSpec{}).re; }

}  // namespace

TEST(Telescoping, IdentityOperator) {
  const Binary S(32);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(32, 32);
  const Decomposition d = telescoping_decomposition(S.s, S.D, S.B, I, 0, S.D.depth());
  EXPECT_LE(d.telescoping_residual, 1e-12);
  EXPECT_LE(d.full_residual, 1e-12);
  // Cross terms vanish: only the diagonal D_P D_P pieces survive.
  for (const auto& L : d.t00_blocks) {
    EXPECT_LE(L.pq.norm(), 1e-12);
    EXPECT_LE(L.qp.norm(), 1e-12);
  }
  EXPECT_LE(d.pi_t1.norm(), 1e-12);
}

TEST(Telescoping, RandomMatrixEveryLevelRange) {
  const Binary S(32);
  const Eigen::MatrixXd T = random_matrix(32, 1);
  const int K = S.D.depth();
  ASSERT_EQ(K, 5);
  for (int a = 0; a <= K; ++a)
    for (int b = a; b <= K; ++b) {
      const Decomposition d = telescoping_decomposition(S.s, S.D, S.B, T, a, b);
      EXPECT_LE(d.telescoping_residual, 1e-11 * T.norm()) << a << "," << b;
      EXPECT_LE(d.regrouped_residual, 1e-11 * T.norm()) << a << "," << b;
    }
  EXPECT_LE(telescoping_decomposition(S.s, S.D, S.B, T, 0, K).full_residual, 1e-11 * T.norm());
}

TEST(Telescoping, NullSymbolsKillParaproducts) {
  const Binary S(32);
  const Eigen::VectorXd u = S.s.mass.cwiseSqrt().normalized();
  const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(32, 32) - u * u.transpose();
  const Eigen::MatrixXd T = P * random_matrix(32, 2) * P;
  const Decomposition d = telescoping_decomposition(S.s, S.D, S.B, T, 0, S.D.depth());
  EXPECT_LE(d.pi_t1.norm(), 1e-12 * T.norm());
  EXPECT_LE(d.pi_star_tstar1.norm(), 1e-12 * T.norm());
  EXPECT_LE(d.regrouped_residual, 1e-11 * T.norm());
}

TEST(Telescoping, LevelRangeOutsideSystemThrows) {
  const Binary S(16);
  const Eigen::MatrixXd T = random_matrix(16, 3);
  EXPECT_THROW(telescoping_decomposition(S.s, S.D, S.B, T, -1, 2), ValidationError);
  EXPECT_THROW(telescoping_decomposition(S.s, S.D, S.B, T, 0, S.D.depth() + 1), ValidationError);
  EXPECT_THROW(telescoping_decomposition(S.s, S.D, S.B, T, 3, 2), ValidationError);
}

TEST(ParaproductSymbols, AntisymmetricKernelIsOddUnderReflection) {
  const Binary S(32);
  const ParaproductSymbols p = paraproduct_symbols(S.s, hilbert(S.s));
  EXPECT_LE((p.t1 + p.t1.reverse()).norm(), 1e-12 * p.t1.norm());
  EXPECT_LE((p.tstar1 + p.t1).norm(), 1e-12 * p.t1.norm());
}

TEST(ParaproductSymbols, RankOneAveragingOperator) {
  const Binary S(32);
  const Eigen::VectorXd u = S.s.mass.cwiseSqrt() / std::sqrt(S.s.total_mass());
  const Eigen::MatrixXd T = u * u.transpose();
  const ParaproductSymbols p = paraproduct_symbols(S.s, T);
  EXPECT_LE((p.t1 - Eigen::VectorXd::Ones(32)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(dyadic_bmo(S.s, S.D, S.B, p.t1), 1e-12);
  EXPECT_LE(telescoping_decomposition(S.s, S.D, S.B, T, 0, S.D.depth()).pi_t1.norm(), 1e-12);
}

TEST(ParaproductSymbols, DifferenceOfSymbolMatchesBlockSums) {
  const Binary S(16);
  const Eigen::MatrixXd T = random_matrix(16, 4);
  const Eigen::VectorXd t1 = to_frame(S.s, paraproduct_symbols(S.s, T).t1);
  for (int k = 0; k < S.D.depth(); ++k) {
    const Eigen::MatrixXd U = level_indicators(S.s, S.D, k);
    for (std::size_t i = 0; i < S.D.levels[k].size(); ++i) {
      const Eigen::MatrixXd DP = difference_matrix(S.B, k, static_cast<int>(i));
      EXPECT_LE((DP * t1 - DP * T * U.rowwise().sum()).norm(), 1e-12 * T.norm());
    }
  }
}

TEST(ParaproductSymbols, FourSquaresSymbolIsBounded) {
  const FiniteSpace s = four_squares(3);
  const DyadicSystem D = build_dyadic_system(s, 0.5);
  const HaarBasis B = build_haar(s, D);
  KernelSpec k;
  k.family = KernelFamily::four_squares;
  k.real_part = true;
  const ParaproductSymbols p = paraproduct_symbols(s, assemble_kernel(s, k).re);
  EXPECT_TRUE(std::isfinite(p.t1.cwiseAbs().maxCoeff()));
  const double bmo = dyadic_bmo(s, D, B, p.t1);
  EXPECT_TRUE(std::isfinite(bmo));
  EXPECT_GT(bmo, 0.0);
}

TEST(HaarDecay, ZeroOperatorHasZeroConstant) {
  const Binary S(16);
  const HaarDecayAudit a = haar_decay_audit(S.s, S.D, S.B, Eigen::MatrixXd::Zero(16, 16), 1.0);
  EXPECT_EQ(a.constant, 0.0);
  EXPECT_GT(a.pairs, 0);
  EXPECT_THROW(haar_decay_audit(S.s, S.D, S.B, Eigen::MatrixXd::Zero(16, 16), 0.0), ValidationError);
}

TEST(HaarDecay, HilbertConstantStableAcrossDepths) {
  std::vector<double> c;
  for (int depth = 4; depth <= 6; ++depth) {
    const Binary S(1 << depth);
    c.push_back(haar_decay_audit(S.s, S.D, S.B, hilbert(S.s), 1.0).constant);
  }
  double mean = 0.0;
  for (double v : c) mean += v / c.size();
  for (double v : c) EXPECT_NEAR(v, mean, 0.5 * mean);
}

TEST(HaarDecay, DoublingDistanceDecayIsAtLeastTheKernelRate) {
  const Binary S(256);
  KernelSpec k;
  k.family = KernelFamily::power;
  k.eta = 1.0;
  const DoublingProbe p = distance_doubling_probe(S.s, S.D, S.B, assemble_kernel(S.s, k).re, 5);
  ASSERT_GE(p.separation.size(), 4u);
  // Bound scales like (l/rho)^eta / V(rho) ~ rho^{-2} in one dimension.
  EXPECT_LE(p.slope_one, -2.0 + 0.2);
  EXPECT_LE(p.slope_two, p.slope_one + 0.2);
}

TEST(Extraction, LosslessOnRandomMatrix) {
  const Binary S(32);
  const Eigen::MatrixXd T = random_matrix(32, 5);
  const ShiftExtraction E = extract_shifts(S.s, S.D, S.B, T);
  EXPECT_LE(E.residual, 1e-10 * T.norm());
  EXPECT_LE(E.tail.norm(), 1e-12 * T.norm());
  for (const auto& F : E.families) EXPECT_GE(F.m, E.m0);
}

TEST(Extraction, TailKeepsPairsBeyondCutoff) {
  const Binary S(32);
  const Eigen::MatrixXd T = random_matrix(32, 6);
  const ShiftExtraction full = extract_shifts(S.s, S.D, S.B, T);
  ExtractionOptions o;
  o.m_max = full.m0;
  const ShiftExtraction cut = extract_shifts(S.s, S.D, S.B, T, o);
  EXPECT_LE(cut.residual, 1e-10 * T.norm());
  EXPECT_GT(cut.tail.norm(), 0.0);
  for (const auto& F : cut.families) EXPECT_LE(F.m, o.m_max);
}

TEST(Extraction, MmaxBeyondSpanThrows) {
  const Binary S(16);
  const Eigen::MatrixXd T = random_matrix(16, 7);
  const ShiftExtraction E = extract_shifts(S.s, S.D, S.B, T);
  ExtractionOptions o;
  o.m_max = E.m_max + 1;
  EXPECT_THROW(extract_shifts(S.s, S.D, S.B, T, o), ValidationError);
}

TEST(Extraction, AnnulusRespectsSeparation) {
  const Binary S(64);
  const ShiftExtraction E = extract_shifts(S.s, S.D, S.B, hilbert(S.s));
  for (int k = 0; k < S.D.depth(); ++k) {
    const auto& ann = E.annulus[k];
    for (int p = 0; p < ann.rows(); ++p)
      for (int q = 0; q < ann.cols(); ++q) {
        const int m = ann(p, q);
        const double d = S.s.dist(S.D.levels[k][p].center, S.D.levels[k][q].center);
        const double l = S.D.scale[k];
        EXPECT_LT(d, E.eps0 * std::pow(S.D.delta, -m) * l);
        if (m > E.m0) EXPECT_GE(d, E.eps0 * std::pow(S.D.delta, -(m - 1)) * l);
      }
  }
}

TEST(Extraction, BlockDiagonalOperatorPopulatesOnlySmallAnnuli) {
  const Binary S(64);
  // T supported inside the level-2 cubes.
  const Eigen::MatrixXd R = random_matrix(64, 8);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(64, 64);
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j)
      if (S.D.label[2][i] == S.D.label[2][j]) T(i, j) = R(i, j);
  const ShiftExtraction E = extract_shifts(S.s, S.D, S.B, T);
  const ShiftExtraction Er = extract_shifts(S.s, S.D, S.B, R);
  EXPECT_LE(E.residual, 1e-10 * T.norm());
  auto top = [](const ShiftExtraction& X) {
    int m = 0;
    for (const auto& F : X.families)
      if (F.s2 > 1e-12) m = std::max(m, F.m);
    return m;
  };
  EXPECT_LT(top(E), top(Er));
}

TEST(Extraction, NormalizationBoundedOverAnnuliForPowerKernel) {
  const Binary S(64);
  KernelSpec k;
  k.family = KernelFamily::power;
  const ShiftExtraction E = extract_shifts(S.s, S.D, S.B, assemble_kernel(S.s, k).re);
  std::map<int, double> per_m;
  for (const auto& F : E.families) per_m[F.m] = std::max(per_m[F.m], F.constant);
  ASSERT_GE(per_m.size(), 3u);
  double lo = kInf, hi = 0.0;
  for (auto& [m, c] : per_m) {
    EXPECT_TRUE(std::isfinite(c)) << m;
    if (c > 0) lo = std::min(lo, c), hi = std::max(hi, c);
  }
  EXPECT_LE(hi / lo, 10.0);
  const nlohmann::json rep = extraction_report(E);
  EXPECT_EQ(rep["m0"].get<int>(), E.m0);
  EXPECT_FALSE(rep["families"].empty());
}

TEST(Extraction, CommutatorFromPiecesMatchesDirect) {
  const Binary S(32);
  const Eigen::MatrixXd T = hilbert(S.s);
  const Eigen::VectorXd b = haar_mixture_symbol(S.s, 4, 0.6, 1);
  const ShiftExtraction E = extract_shifts(S.s, S.D, S.B, T);
  const double direct = schatten(commutator(b, OperatorMatrix(T)), 2.0);
  const double pieces = schatten(commutator(b, OperatorMatrix(E.reconstruction)), 2.0);
  EXPECT_LE(std::abs(direct - pieces), 2.0 * b.cwiseAbs().maxCoeff() * E.residual + 1e-12 * direct);
}

TEST(Theta, TooFewTrialsThrows) {
  const FiniteSpace s = grid1(16);
  EXPECT_THROW(monte_carlo_theta(s, 0.5, hilbert(s), 1, 99), ValidationError);
}

TEST(Theta, SameCubeIsExact) {
  const FiniteSpace s = grid1(32);
  ThetaOptions o;
  o.pairs = 4;
  const ThetaReport r = monte_carlo_theta(s, 0.5, hilbert(s), 0, 100, o);
  for (const auto& p : r.pairs) {
    EXPECT_EQ(p.xp, p.xq);
    EXPECT_EQ(p.pi_hat, 1.0);
    EXPECT_DOUBLE_EQ(p.lhs, p.rhs);
  }
  EXPECT_TRUE(r.all_agree);
  EXPECT_EQ(r.frac_pi_half, 1.0);
}

TEST(Theta, ClosePairsAgreeWithinThreeStandardErrors) {
  const FiniteSpace s = grid1(32);
  ThetaOptions o;
  o.pairs = 6;
  const ThetaReport r = monte_carlo_theta(s, 0.5, hilbert(s), 1, 1000, o);
  for (const auto& p : r.pairs) {
    EXPECT_GT(p.pi_hat, 0.0);
    EXPECT_TRUE(p.agree) << p.lhs << " vs " << p.rhs << " se " << p.stderr_;
  }
}
