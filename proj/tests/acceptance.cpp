// Acceptance harness: one PASS/FAIL line per criterion. Tolerances and time budgets are pinned below.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "czlab/config.hpp"
#include "czlab/dyadic.hpp"
#include "czlab/haar.hpp"
#include "czlab/norms.hpp"
#include "czlab/operators.hpp"
#include "czlab/representation.hpp"
#include "czlab/space.hpp"
#include "czlab/sweeps.hpp"
#include "oracles.hpp"

using namespace czlab;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

FiniteSpace grid1(int n) { return euclidean_grid(1, n, 1.0 / n); }

Eigen::VectorXd random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

// ---------------------------------------------------------------------------------------------

Outcome haar_parseval() {
  const double tol = 1e-12;
  double gram = 0.0, pars = 0.0;
  std::mt19937_64 rng(5);
  for (const FiniteSpace& s : {grid1(256), cantor(2, 1.0 / 3.0, 8), cantor(3, 0.2, 5)}) {
    const DyadicSystem D = build_dyadic_system(s, s.kind == "cantor" ? 1.0 / 3.0 : 0.5);
    const HaarBasis B = build_haar(s, D);
    const Eigen::Index m = B.size();
    gram = std::max(gram, (B.H.transpose() * B.H - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff());
    gram = std::max(gram, (B.H.transpose() * B.mean_dir).cwiseAbs().maxCoeff());
    for (int t = 0; t < 20; ++t) {
      const Eigen::VectorXd f = random_vector(s.n(), rng);
      const double lhs = f.cwiseProduct(f).dot(s.mass);
      const double avg = f.dot(s.mass) / s.total_mass();
      const double rhs = haar_coefficients(s, B, f).squaredNorm() + avg * avg * s.total_mass();
      pars = std::max(pars, std::abs(lhs - rhs) / lhs);
    }
  }
  return {gram <= tol && pars <= tol, fmt("gram dev %.2e, parseval rel %.2e (tol 1e-12)", gram, pars)};
}

Outcome product_decomposition_residual() {
  const double tol = 1e-10;
  double worst = 0.0;
  std::mt19937_64 rng(6);
  for (const FiniteSpace& s : {grid1(64), cantor(2, 1.0 / 3.0, 6), euclidean_grid(2, 8, 0.125)}) {
    const DyadicSystem D = build_dyadic_system(s, s.kind == "cantor" ? 1.0 / 3.0 : 0.5);
    const HaarBasis B = build_haar(s, D);
    for (int t = 0; t < 100; ++t) {
      const Eigen::VectorXd b = random_vector(s.n(), rng), f = random_vector(s.n(), rng);
      const ParaproductTriple P = product_decomposition(s, D, B, b);
      const Eigen::VectorXd v = to_frame(s, f);
      const Eigen::VectorXd want = b.cwiseProduct(v);
      worst = std::max(worst, (P.sum() * v - want).norm() / want.norm());
    }
  }
  return {worst <= tol, fmt("max relative residual %.2e over 300 pairs (tol 1e-10)", worst)};
}

Outcome telescoping() {
  const double tol = 1e-11;
  double worst = 0.0;
  std::mt19937_64 rng(7);
  for (const FiniteSpace& s : {grid1(64), cantor(2, 1.0 / 3.0, 6)}) {
    const DyadicSystem D = build_dyadic_system(s, s.kind == "cantor" ? 1.0 / 3.0 : 0.5);
    const HaarBasis B = build_haar(s, D);
    for (int t = 0; t < 3; ++t) {
      Eigen::MatrixXd T(64, 64);
      for (int i = 0; i < 64; ++i) T.col(i) = random_vector(64, rng);
      const Decomposition dec = telescoping_decomposition(s, D, B, T, 0, D.depth());
      const double r = std::max({dec.telescoping_residual, dec.regrouped_residual, dec.full_residual});
      worst = std::max(worst, r / T.norm());
    }
  }
  return {worst <= tol, fmt("max residual / ||T||_S2 = %.2e (tol 1e-11)", worst)};
}

Outcome shift_extraction() {
  const double tol = 1e-10, factor = 2.0;
  double worst = 0.0;
  std::vector<double> constants;
  std::string per;
  for (int depth : {4, 5, 6}) {
    const FiniteSpace s = grid1(1 << depth);
    const DyadicSystem D = build_dyadic_system(s, 0.5);
    const HaarBasis B = build_haar(s, D);
    KernelSpec k;
    const Eigen::MatrixXd T = assemble_kernel(s, k).re;
    const ShiftExtraction E = extract_shifts(s, D, B, T);
    worst = std::max(worst, E.residual / T.norm());
    constants.push_back(E.constant);
    per += fmt(" %.3g", E.constant);
  }
  const double f = stability_factor(constants);
  const bool finite = std::all_of(constants.begin(), constants.end(), [](double c) { return std::isfinite(c) && c > 0; });
  return {worst <= tol && finite && f <= factor,
          fmt("relative residual %.2e (tol 1e-10); constants depths 4-6:", worst) + per +
              fmt(", factor %.3f (limit 2)", f)};
}

Outcome hilbert_schmidt() {
  const double tol = 1e-12;
  double worst = 0.0;
  auto check = [&](const FiniteSpace& s, KernelSpec k) {
    const double a = kernel_l2_norm(s, k), b = schatten(assemble_kernel(s, k), 2.0);
    worst = std::max(worst, std::abs(a - b) / a);
  };
  check(grid1(128), KernelSpec{});
  KernelSpec r;
  r.family = KernelFamily::riesz;
  check(euclidean_grid(2, 12, 1.0 / 12), r);
  KernelSpec z;
  z.family = KernelFamily::beurling;
  check(euclidean_grid(2, 12, 1.0 / 12), z);
  check(bessel_grid({1.0}, {1}, 96), KernelSpec{});
  return {worst <= tol, fmt("max relative gap %.2e (tol 1e-12)", worst)};
}

Outcome shift_schatten_bound() {
  const FiniteSpace s = grid1(64);
  const DyadicSystem D = build_dyadic_system(s, 0.5);
  const HaarBasis B = build_haar(s, D);
  int violations = 0, total = 0;
  double worst = 0.0;
  std::uint64_t seed = 100;
  for (int rep = 0; rep < 200; ++rep) {
    const int i = rep % 3, j = (rep / 3) % 3;
    const ShiftCoefficients S = random_shift(D, B, i, j, seed++, rep % 2 == 1);
    const SingularValues sv = svd(build_shift(D, B, S));
    for (double p : {2.0, 3.0, 4.0}) {
      const double lhs = schatten_lorentz(sv, p, p), rhs = shift_lp_l2(S, p);
      ++total;
      if (lhs > rhs * (1.0 + 1e-12)) ++violations;
      worst = std::max(worst, lhs / rhs);
    }
  }
  return {violations == 0, fmt("%g violations in %g checks, max ratio %.4f", violations, total, worst)};
}

Outcome direct_sum() {
  const double tol = 1e-10;
  const FiniteSpace s = grid1(64);
  const DyadicSystem D = build_dyadic_system(s, 0.5);
  const HaarBasis B = build_haar(s, D);
  double worst = 0.0;
  for (int rep = 0; rep < 27; ++rep) {
    const ShiftCoefficients S = random_shift(D, B, rep % 3, (rep / 3) % 3, 500 + rep);
    const SingularValues sv = svd(build_shift(D, B, S));
    for (double p : {1.0, 2.0, 3.0, 4.0}) {
      double lhs = 0.0;
      for (double v : sv) lhs += std::pow(v, p);
      const double rhs = shift_block_schatten_sum(S, p);
      worst = std::max(worst, std::abs(lhs - rhs) / rhs);
    }
  }
  return {worst <= tol, fmt("max relative gap %.2e (tol 1e-10)", worst)};
}

Outcome carleson() {
  const FiniteSpace s = grid1(256);
  const DyadicSystem D = build_dyadic_system(s, 0.5);
  const double c = D.strict_c;
  bool ok = std::abs(c - 2.0) < 1e-12;
  std::string detail = fmt("c = %.3f;", c);
  for (double p : {0.5, 1.0, 2.0, 4.0}) {
    const double probe = carleson_operator_norm_probe(D, p, p, 1000, 17);
    const double bound = carleson_bound(2.0, p), holder = carleson_bound_holder(2.0, p);
    // Pinned to the stated bound. For p > 1 it is violated by lambda = 1; the Holder bound is reported alongside.
    const bool within = probe <= bound * (1.0 + 1e-12);
    ok = ok && within;
    detail += fmt(" p=%g: %.4f vs %.4f", p, probe, bound) + (within ? "" : " EXCEEDED") + fmt(" (holder %.4f);", holder);
  }
  return {ok, detail};
}

Outcome nwo() {
  const double factor = 2.0;
  std::vector<double> cs;
  std::string detail = "C by depth:";
  for (int depth : {4, 5, 6, 7}) {
    const FiniteSpace s = grid1(1 << depth);
    const DyadicSystem D = build_dyadic_system(s, 0.5);
    const HaarBasis B = build_haar(s, D);
    cs.push_back(nwo_rank_constant(s, D, B, 60, 23));
    detail += fmt(" %.3f", cs.back());
  }
  const double f = stability_factor(cs);
  const bool finite = std::all_of(cs.begin(), cs.end(), [](double v) { return std::isfinite(v); });
  return {finite && f <= factor, detail + fmt(", factor %.3f (limit 2)", f)};
}

Outcome osc_besov() {
  const double factor = 3.0;
  double worst_besov = 1.0, worst_inner = 1.0;
  for (int seed = 1; seed <= 50; ++seed) {
    std::vector<double> rb2, rb3, ri2, ri3;
    for (int depth = 3; depth <= 6; ++depth) {
      const FiniteSpace s = grid1(1 << depth);
      const DyadicSystem D = build_dyadic_system(s, 0.5);
      const Eigen::VectorXd b = haar_mixture_symbol(s, 6, 0.6, static_cast<std::uint64_t>(seed));
      rb2.push_back(osc_norm(s, D, b, 2, 2, 2) / besov_norm(s, b, 2));
      rb3.push_back(osc_norm(s, D, b, 3, 3, 3) / besov_norm(s, b, 3));
      ri2.push_back(osc_norm(s, D, b, 2, 2, 1) / osc_norm(s, D, b, 2, 2, 2));
      ri3.push_back(osc_norm(s, D, b, 3, 3, 1) / osc_norm(s, D, b, 3, 3, 2));
    }
    worst_besov = std::max({worst_besov, stability_factor(rb2), stability_factor(rb3)});
    worst_inner = std::max({worst_inner, stability_factor(ri2), stability_factor(ri3)});
  }
  return {worst_besov <= factor && worst_inner <= factor,
          fmt("worst factor Osc/B %.3f, Osc(r=1)/Osc(r=2) %.3f over 50 symbols, p in {2,3} (limit 3)", worst_besov,
              worst_inner)};
}

Outcome weak_cantor() {
  const double factor = 4.0;
  const double d = std::log(2.0) / std::log(3.0);
  double worst = 1.0;
  for (int seed = 1; seed <= 5; ++seed) {
    std::vector<double> r;
    for (int depth = 4; depth <= 7; ++depth) {
      const FiniteSpace s = cantor(2, 1.0 / 3.0, depth);
      const DyadicSystem D = build_dyadic_system(s, 1.0 / 3.0);
      const Eigen::VectorXd b = haar_mixture_symbol(s, 6, 0.6, static_cast<std::uint64_t>(seed));
      const std::vector<double> ladder = geometric_ladder(s.min_gap(), s.diameter(), std::sqrt(2.0));
      const double w = weak_nu_norm(s, mean_oscillation_field(s, b, ladder), ladder, d);
      r.push_back(w / osc_norm(s, D, b, d, kInf, 1.0));
    }
    worst = std::max(worst, stability_factor(r));
  }
  return {worst <= factor, fmt("worst factor %.3f over 5 symbols, depths 4-7 (limit 4)", worst)};
}

Outcome weighted_conjugation() {
  const double tol = 1e-12;
  const FiniteSpace s = grid1(64);
  KernelSpec k;
  const OperatorMatrix T = assemble_kernel(s, k);
  const Weight one = make_weight(s, Eigen::VectorXd::Ones(s.n()));
  const double exact = (conjugate_to_weighted(T, one).re - T.re).cwiseAbs().maxCoeff();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.2, 5.0);
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    Eigen::VectorXd wv(s.n());
    for (int i = 0; i < s.n(); ++i) wv(i) = u(rng);
    const Weight w = make_weight(s, wv);
    // Operator on point values, A = D^{-1/2} M D^{1/2}; the weighted singular values come from
    // the generalized problem A^T W A v = sigma^2 W v with W = diag(w mu).
    Eigen::MatrixXd M(s.n(), s.n());
    for (int i = 0; i < s.n(); ++i) M.col(i) = random_vector(s.n(), rng);
    M += 8.0 * Eigen::MatrixXd::Identity(s.n(), s.n());
    const Eigen::VectorXd sq = s.mass.cwiseSqrt();
    const Eigen::MatrixXd A = sq.cwiseInverse().asDiagonal() * M * sq.asDiagonal();
    const std::vector<double> want = oracle::weighted_singular_values(A, wv.cwiseProduct(s.mass));
    const std::vector<double> got = singular_values(conjugate_to_weighted(OperatorMatrix(M), w));
    for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(want[i] - got[i]) / want.front());
  }
  return {exact == 0.0 && worst <= tol, fmt("w=1 max deviation %.1e; random-w singular value gap %.2e (tol 1e-12)", exact, worst)};
}

Outcome weighted_square_function_stability() {
  const double factor = 2.0;
  bool ok = true;
  std::string detail;
  for (double a : {0.3, 0.6}) {
    std::vector<double> cs;
    detail += fmt(" a=%.1f:", a);
    for (int depth = 4; depth <= 7; ++depth) {
      const FiniteSpace s = grid1(1 << depth);
      const DyadicSystem D = build_dyadic_system(s, 0.5);
      const HaarBasis B = build_haar(s, D);
      cs.push_back(weighted_square_function(s, D, B, power_weight(s, a)).constant);
      detail += fmt(" %.3f", cs.back());
    }
    const double f = stability_factor(cs);
    ok = ok && f <= factor;
    detail += fmt(" (factor %.3f)", f);
  }
  return {ok, detail + "; limit 2"};
}

Outcome four_squares_degenerate() {
  const FiniteSpace s = four_squares(6);
  KernelSpec k;
  k.family = KernelFamily::four_squares;
  const OperatorMatrix T = assemble_kernel(s, k);
  const double b1 = 1.5, b2 = -0.5;
  Eigen::VectorXd b(s.n());
  for (int i = 0; i < s.n(); ++i) b(i) = s.group[i] % 2 == 0 ? b1 : b2;
  const OperatorMatrix C = commutator(b, T);
  const double zero = std::max(C.re.cwiseAbs().maxCoeff(), C.is_complex() ? C.im.cwiseAbs().maxCoeff() : 0.0);
  std::vector<int> all(s.n());
  std::iota(all.begin(), all.end(), 0);
  const double avg = average(s, b, all);
  double mbx = 0.0;
  for (int i = 0; i < s.n(); ++i) mbx += std::abs(b(i) - avg) * s.mass(i);
  mbx /= s.total_mass();
  const double target = std::abs(b1 - b2) / 2.0;
  const bool nonzero_T = T.frobenius() > 0.0;
  return {zero <= 1e-14 && nonzero_T && std::abs(mbx - target) <= 1e-12,
          fmt("max |[b,T]| = %.1e (tol 1e-14); m_b(X) = %.4f vs |b1-b2|/2 = %.4f", zero, mbx, target)};
}

Outcome cutoff() {
  ExperimentConfig c = parse_config(nlohmann::json::parse(R"({
    "space": {"kind": "euclidean-grid", "dim": 2},
    "kernel": {"family": "riesz", "riesz_j": 0},
    "symbol": {"kind": "coordinate", "axis": 0},
    "p_grid": [2, 3],
    "depths": [2, 3, 4, 5, 6]
  })"));
  const SweepResult r = run_cutoff_probe(c, 1);
  bool ok = true;
  std::string detail;
  for (const auto& sl : r.summary["slopes"]) {
    const double p = sl["p"], ls = sl["log_depth_slope"], decay = sl["increment_decay"];
    // p = d: B^d grows like log(1/h), so increments stay comparable; p > d: increments die out.
    std::vector<double> v;
    for (const auto& row : r.rows)
      if (row.quantity == "besov" && row.p == p) v.push_back(*row.value);
    const bool increasing = std::is_sorted(v.begin(), v.end()) && std::adjacent_find(v.begin(), v.end()) == v.end();
    if (p == 2.0)
      ok = ok && increasing && ls > 0.0 && decay >= 0.5;
    else
      ok = ok && decay <= 0.25;
    detail += fmt("p=%g: log-depth slope %.3f, last/first increment %.3f; ", p, ls, decay);
  }
  return {ok, detail + "(p=2: slope > 0, ratio >= 0.5; p=3: ratio <= 0.25)"};
}

Outcome hajlasz_oracle() {
  const double tol = 1e-3;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int cases = 0;
  for (int n = 2; n <= 4; ++n)
    for (int rep = 0; rep < 6; ++rep)
      for (double p : {1.5, 2.0, 3.0}) {
        Eigen::MatrixXd x(n, 2);
        Eigen::VectorXd mu(n), b(n);
        for (int i = 0; i < n; ++i) {
          x(i, 0) = u(rng), x(i, 1) = u(rng);
          mu(i) = 0.2 + u(rng);
          b(i) = 2.0 * u(rng) - 1.0;
        }
        const FiniteSpace s = space_from_points(x, mu);
        const double got = hajlasz_norm(s, b, p).value;
        const double want = oracle::hajlasz_brute_force(s, b, p);
        worst = std::max(worst, std::abs(got - want) / std::max(want, 1e-300));
        ++cases;
      }
  return {worst <= tol, fmt("max relative gap %.2e over %g cases (tol 1e-3)", worst, cases)};
}

Outcome dimensions() {
  const double tol = 0.15, loose_tol = 0.25;
  struct Case {
    std::string name;
    FiniteSpace s;
    double lo_gaps, hi;  // scale range [lo_gaps * gap, hi]
    double d, delta, D;  // expected values, NaN when only the ordering is checked
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<Case> cases;
  {
    FiniteSpace s = grid1(256);
    cases.push_back({"grid-1d", s, 1, s.diameter() / 2, nan, nan, nan});
  }
  {
    FiniteSpace s = euclidean_grid(2, 32, 1.0 / 32);
    cases.push_back({"grid-2d", s, 1, s.diameter() / 2, nan, nan, nan});
  }
  {
    FiniteSpace s = cantor(2, 1.0 / 3.0, 8);
    cases.push_back({"cantor", s, 1, s.diameter() / 2, nan, nan, nan});
  }
  {
    FiniteSpace s = four_squares(32);
    cases.push_back({"four-squares", s, 1, 4.0, nan, nan, nan});
  }
  for (double lam : {1.0, -0.25}) {
    FiniteSpace s = bessel_grid({lam}, {1}, 1024);
    cases.push_back({fmt("bessel(%g)", lam), s, 4, s.diameter() / 4, 1.0 + 2.0 * std::min(lam, 0.0), 1.0,
                     1.0 + 2.0 * std::max(lam, 0.0)});
  }
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    DimensionOptions o;
    o.max_net_centers = 32;
    if (c.name.rfind("bessel", 0) == 0) o.min_pair_ratio = 4.0;
    const DimensionEstimate e = estimate_dimensions(c.s, {c.lo_gaps * c.s.min_gap(), c.hi, 2.0}, o);
    bool good = e.d_lower <= e.d_sep + tol && e.d_sep <= e.d_upper + tol;
    if (!std::isnan(c.d))
      good = good && std::abs(e.d_lower - c.d) <= loose_tol && std::abs(e.d_sep - c.delta) <= loose_tol &&
             std::abs(e.d_upper - c.D) <= loose_tol;
    ok = ok && good;
    detail += c.name + fmt(" (%.2f, %.2f, %.2f)", e.d_lower, e.d_sep, e.d_upper) + (good ? "; " : " !; ");
  }
  return {ok, detail + "ordering tol 0.15, Bessel tol 0.25"};
}

Outcome ancestor_probability_check() {
  const double eps0 = 0.25;
  bool ok = true;
  std::string detail;
  struct Case {
    std::string name;
    FiniteSpace s;
    double delta;
  };
  for (const Case& c : {Case{"1d", grid1(64), 0.5}, Case{"cantor", cantor(2, 1.0 / 3.0, 6), 1.0 / 3.0}}) {
    const Calibration cal = calibrate_m0(c.s, c.delta, eps0, 200, 1);
    const DyadicSystem ref = random_dyadic_system(c.s, c.delta, 0);
    const int K = ref.depth();
    double worst_margin = kInf;
    int pairs = 0;
    for (int m = cal.m0; m <= std::min(cal.m0 + 1, K); ++m)
      for (int k = std::max(m, K - 2); k <= K; ++k) {
        const double bound = eps0 * std::pow(c.delta, -m) * ref.scale[k];
        // Hardest admissible pair: the farthest partner of a few reference points.
        for (int x = 0; x < c.s.n(); x += c.s.n() / 4) {
          int far = x;
          for (int y = 0; y < c.s.n(); ++y)
            if (c.s.dist(x, y) <= bound && c.s.dist(x, y) > c.s.dist(x, far)) far = y;
          if (far == x) continue;
          const AncestorEstimate e = ancestor_probability(c.s, c.delta, x, k, far, k, m, 1000, 777);
          worst_margin = std::min(worst_margin, e.estimate - (0.5 - 3.0 * e.stderr_));
          ++pairs;
        }
      }
    ok = ok && pairs > 0 && worst_margin >= 0.0;
    detail += c.name + fmt(": m0 = %g, %g pairs, min(pi - (1/2 - 3 se)) = %.3f; ", cal.m0, pairs, worst_margin);
  }
  return {ok, detail};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget;  // seconds
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"haar orthonormality and Parseval", 5, haar_parseval},
      {"product decomposition", 5, product_decomposition_residual},
      {"telescoping decomposition", 10, telescoping},
      {"fixed-system shift extraction", 60, shift_extraction},
      {"Hilbert-Schmidt identity", 1, hilbert_schmidt},
      {"shift Schatten bound", 60, shift_schatten_bound},
      {"direct-sum singular values", 10, direct_sum},
      {"Carleson bound", 10, carleson},
      {"NWO rank-truncation bound", 30, nwo},
      {"Osc/Besov and inner-exponent equivalence", 60, osc_besov},
      {"weak-space identification on Cantor", 60, weak_cantor},
      {"weighted conjugation identity", 5, weighted_conjugation},
      {"weighted square function", 30, weighted_square_function_stability},
      {"four-squares degenerate example", 5, four_squares_degenerate},
      {"cutoff probe", 120, cutoff},
      {"Hajlasz solver vs brute force", 10, hajlasz_oracle},
      {"dimension ordering", 60, dimensions},
      {"ancestor probability", 60, ancestor_probability_check},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget;
    const bool pass = o.ok && in_time;
    failed += !pass;
    std::printf("%s %s: %s [%.2fs, budget %gs%s]\n", pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs, c.budget,
                in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failed;
}
