#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "czlab/errors.hpp"
#include "czlab/lorentz.hpp"
#include "czlab/space.hpp"

namespace czlab {

struct Cube {
  std::vector<int> points;    // ascending
  int center = -1;            // z_Q
  int parent = -1;            // index at level k-1
  std::vector<int> children;  // indices at level k+1, ordered by minimal point index
  int set = -1;               // distinct-set id
  double mass = 0.0;
};

// A cube as a point set, with the range of levels on which it appears.
struct CubeSet {
  int k_min = 0;
  int k_max = 0;
  int index = 0;               // cube index at level k_min
  double mass = 0.0;
  int strict_parent = -1;      // set id of Q^{[1]}
  std::vector<int> strict_children;
};

struct DyadicSystem {
  double delta = 0.5;
  std::vector<double> scale;               // l(Q) for cubes of level k
  std::vector<std::vector<Cube>> levels;   // level 0 is the single cube X
  std::vector<std::vector<int>> label;     // label[k][x] = index of the level-k cube containing x
  std::vector<CubeSet> sets;               // set ids are assigned top-down
  double c0 = 0.0, C0 = 0.0;               // realized ball-sandwich constants
  double strict_c = kInf;                  // min mu(Q^{[1]})/mu(Q)
  std::string mode = "nets";
  // Calibration metadata (filled by calibrate_m0).
  int m0 = -1;
  double eps0 = 0.0;

  int depth() const { return static_cast<int>(levels.size()) - 1; }
  int n() const { return static_cast<int>(label.empty() ? 0 : label[0].size()); }
  const Cube& cube(int k, int i) const { return levels[k][i]; }
  int cube_of(int k, int x) const { return label[k][x]; }

  // Index of the level-(k-m) ancestor of cube (k, i).
  int ancestor(int k, int i, int m) const {
    require(m >= 0 && m <= k, "dyadic: ancestor generation out of range");
    for (int t = 0; t < m; ++t) i = levels[k - t][i].parent;
    return i;
  }
  const CubeSet& set_of(int k, int i) const { return sets[levels[k][i].set]; }
};

namespace detail {

inline std::vector<int> seeded_permutation(int n, std::optional<std::uint64_t> seed) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  if (seed) {
    std::mt19937_64 rng(*seed);
    std::shuffle(p.begin(), p.end(), rng);
  }
  return p;
}

}  // namespace detail

// Builds the system from per-level labelings (labels[k][x] arbitrary ids) and per-point center choice.
// center_of(k, members) returns the designated center of a cube.
template <class CenterRule>
DyadicSystem assemble_system(const FiniteSpace& s, double delta, std::vector<double> scale,
                             const std::vector<std::vector<int>>& raw, CenterRule center_of) {
  const int n = s.n(), K = static_cast<int>(raw.size()) - 1;
  DyadicSystem D;
  D.delta = delta;
  D.scale = std::move(scale);
  D.levels.resize(K + 1);
  D.label.assign(K + 1, std::vector<int>(n, -1));
  for (int k = 0; k <= K; ++k) {
    // Cubes are ordered by minimal point index; points are scanned in order.
    std::map<int, int> remap;
    for (int x = 0; x < n; ++x) {
      auto [it, fresh] = remap.emplace(raw[k][x], static_cast<int>(remap.size()));
      if (fresh) D.levels[k].emplace_back();
      Cube& c = D.levels[k][it->second];
      c.points.push_back(x);
      c.mass += s.mass(x);
      D.label[k][x] = it->second;
    }
    for (auto& c : D.levels[k]) c.center = center_of(k, c.points);
  }
  if (D.levels[0].size() != 1) throw ConstructionError("dyadic: top level must be the single cube X");
  for (int k = 1; k <= K; ++k)
    for (std::size_t i = 0; i < D.levels[k].size(); ++i) {
      Cube& c = D.levels[k][i];
      const int p = D.label[k - 1][c.points.front()];
      for (int x : c.points)
        if (D.label[k - 1][x] != p) {
          std::ostringstream os;
          os << "dyadic: cube " << i << " at level " << k << " straddles two parents";
          throw ConstructionError(os.str());
        }
      c.parent = p;
      D.levels[k - 1][p].children.push_back(static_cast<int>(i));
    }
  for (int k = 0; k < K; ++k)
    for (auto& c : D.levels[k])
      if (c.children.empty()) throw ConstructionError("dyadic: a cube has no children");
  for (auto& c : D.levels[K])
    if (c.points.size() != 1) throw ConstructionError("dyadic: bottom level must consist of singletons");

  // Ball sandwich.
  D.c0 = kInf;
  D.C0 = 0.0;
  for (int k = 0; k <= K; ++k)
    for (std::size_t i = 0; i < D.levels[k].size(); ++i) {
      const Cube& c = D.levels[k][i];
      if (D.label[k][c.center] != static_cast<int>(i)) {
        std::ostringstream os;
        os << "dyadic: center of cube " << i << " at level " << k << " lies outside the cube";
        throw ConstructionError(os.str());
      }
      double outer = 0.0, inner = kInf;
      for (int x : c.points) outer = std::max(outer, s.dist(c.center, x));
      if (static_cast<int>(c.points.size()) < n)
        for (int y = 0; y < n; ++y)
          if (D.label[k][y] != static_cast<int>(i)) inner = std::min(inner, s.dist(c.center, y));
      D.C0 = std::max(D.C0, outer / D.scale[k]);
      if (std::isfinite(inner)) D.c0 = std::min(D.c0, inner / D.scale[k]);
    }
  if (!(D.c0 > 0.0) && n > 1) throw ConstructionError("dyadic: inner ball-sandwich constant is zero");
  if (!std::isfinite(D.c0)) D.c0 = 1.0;

  // Distinct sets, strict parents.
  D.levels[0][0].set = 0;
  D.sets.push_back({0, 0, 0, D.levels[0][0].mass, -1, {}});
  for (int k = 1; k <= K; ++k)
    for (std::size_t i = 0; i < D.levels[k].size(); ++i) {
      Cube& c = D.levels[k][i];
      const Cube& p = D.levels[k - 1][c.parent];
      if (p.points.size() == c.points.size()) {
        c.set = p.set;
        D.sets[c.set].k_max = k;
      } else {
        c.set = static_cast<int>(D.sets.size());
        D.sets.push_back({k, k, static_cast<int>(i), c.mass, p.set, {}});
        D.sets[p.set].strict_children.push_back(c.set);
      }
    }
  D.strict_c = kInf;
  for (std::size_t id = 1; id < D.sets.size(); ++id)
    D.strict_c = std::min(D.strict_c, D.sets[D.sets[id].strict_parent].mass / D.sets[id].mass);
  return D;
}

struct NetOptions {
  std::optional<std::uint64_t> seed;  // net ordering permutation; identity when absent
  bool random_parents = false;
  std::uint64_t parent_seed = 0;
};

// Number of levels so that diam * delta^K <= min gap (all points separated at the bottom).
inline int net_depth(const FiniteSpace& s, double delta) {
  if (s.n() <= 1) return 0;
  const double diam = s.diameter(), gap = s.min_gap();
  int K = 1;
  while (diam * std::pow(delta, K) > gap * (1.0 - 1e-12)) ++K;
  return K;
}

// Greedy nested nets in permutation order at scales diam * delta^k; parent = nearest coarser
// net point (ties by point index), or a uniformly random admissible one.
inline DyadicSystem build_net_system(const FiniteSpace& s, double delta, const NetOptions& opt) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("dyadic: delta must lie in (0,1)");
  const int n = s.n();
  require(n >= 1, "dyadic: space must be nonempty");
  const std::vector<int> perm = detail::seeded_permutation(n, opt.seed);
  const int K = net_depth(s, delta);
  const double diam = n > 1 ? s.diameter() : 1.0;
  std::vector<double> scale(K + 1);
  for (int k = 0; k <= K; ++k) scale[k] = diam * std::pow(delta, k);

  std::vector<std::vector<int>> nets(K + 1);
  std::vector<char> in(n, 0);
  nets[0] = {perm[0]};
  in[perm[0]] = 1;
  for (int k = 1; k <= K; ++k) {
    nets[k] = nets[k - 1];
    for (int p : perm) {
      if (in[p]) continue;
      bool far = true;
      for (int q : nets[k])
        if (s.dist(p, q) < scale[k]) { far = false; break; }
      if (far) {
        nets[k].push_back(p);
        in[p] = 1;
      }
    }
  }
  if (static_cast<int>(nets[K].size()) != n) throw ConstructionError("dyadic: bottom net misses points");

  std::mt19937_64 rng(opt.parent_seed);
  // up[k][z] = parent net point at level k-1 of the level-k net point z.
  std::vector<std::vector<int>> up(K + 1, std::vector<int>(n, -1));
  for (int k = 1; k <= K; ++k) {
    std::vector<char> coarse(n, 0);
    for (int q : nets[k - 1]) coarse[q] = 1;
    for (int z : nets[k]) {
      if (coarse[z]) { up[k][z] = z; continue; }
      int best = -1;
      std::vector<int> admissible;
      for (int q : nets[k - 1]) {
        if (best < 0 || s.dist(z, q) < s.dist(z, best) || (s.dist(z, q) == s.dist(z, best) && q < best)) best = q;
        if (s.dist(z, q) < scale[k - 1]) admissible.push_back(q);
      }
      if (opt.random_parents && !admissible.empty()) {
        std::sort(admissible.begin(), admissible.end());
        std::uniform_int_distribution<std::size_t> pick(0, admissible.size() - 1);
        up[k][z] = admissible[pick(rng)];
      } else {
        up[k][z] = best;
      }
    }
  }
  std::vector<std::vector<int>> raw(K + 1, std::vector<int>(n));
  for (int x = 0; x < n; ++x) {
    int a = x;
    for (int k = K; k >= 0; --k) {
      raw[k][x] = a;
      if (k > 0) a = up[k][a];
    }
  }
  // The raw label of a cube is its net point, which is also its center.
  return assemble_system(s, delta, scale, raw, [&](int k, const std::vector<int>& pts) { return raw[k][pts.front()]; });
}

inline DyadicSystem build_dyadic_system(const FiniteSpace& s, double delta, std::optional<std::uint64_t> seed = {}) {
  NetOptions opt;
  opt.seed = seed;
  return build_net_system(s, delta, opt);
}

enum class RandomMode { automatic, nets, translation };

inline bool translation_capable(const FiniteSpace& s, double delta) {
  if (s.kind != "euclidean-grid" || s.dim != 1 || delta != 0.5) return false;
  const int n = s.n();
  return n >= 2 && (n & (n - 1)) == 0;
}

// Randomly translated dyadic intervals on a 1D grid of 2^K points. Level j >= 1 cuts the grid
// into blocks of 2^{K-j+1} points starting at offset o_j = sum_{i=j}^{K} omega_i 2^{K-i};
// level 0 is X. With all omega_i = 0 level 1 is X as well.
inline DyadicSystem build_translated_system(const FiniteSpace& s, std::uint64_t omega) {
  const int n = s.n();
  int K = 0;
  while ((1 << K) < n) ++K;
  std::mt19937_64 rng(omega);
  std::vector<int> bit(K + 2, 0);
  for (int i = 1; i <= K; ++i) bit[i] = static_cast<int>(rng() & 1u);
  const int levels = K + 2;
  std::vector<double> scale(levels);
  std::vector<std::vector<int>> raw(levels, std::vector<int>(n, 0));
  scale[0] = 2.0 * n * s.spacing;
  for (int j = 1; j < levels; ++j) {
    const int L = 1 << (K - j + 1);
    int o = 0;
    for (int i = j; i <= K; ++i) o += bit[i] << (K - i);
    scale[j] = L * s.spacing;
    for (int x = 0; x < n; ++x) raw[j][x] = (x - o + L) / L;
  }
  DyadicSystem D = assemble_system(s, 0.5, scale, raw, [](int, const std::vector<int>& pts) {
    return pts[pts.size() / 2];
  });
  D.mode = "translation";
  return D;
}

inline DyadicSystem random_dyadic_system(const FiniteSpace& s, double delta, std::uint64_t omega,
                                         RandomMode mode = RandomMode::automatic) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("dyadic: delta must lie in (0,1)");
  if (mode == RandomMode::translation && !translation_capable(s, delta))
    throw ValidationError("dyadic: translation mode needs a 1D grid of 2^K points and delta = 1/2");
  if (s.n() > 1 && (mode == RandomMode::translation ||
                    (mode == RandomMode::automatic && translation_capable(s, delta))))
    return build_translated_system(s, omega);
  NetOptions opt;
  opt.seed = omega;
  opt.random_parents = true;
  opt.parent_seed = omega ^ 0x9e3779b97f4a7c15ULL;
  DyadicSystem D = build_net_system(s, delta, opt);
  D.mode = "random-nets";
  return D;
}

// Distinct sets that appear on more than one level (excluding X and singletons).
inline int repeated_sets(const DyadicSystem& D) {
  int count = 0;
  for (std::size_t id = 1; id < D.sets.size(); ++id) {
    const CubeSet& q = D.sets[id];
    if (q.k_max > q.k_min && D.levels[q.k_min][q.index].points.size() > 1) ++count;
  }
  return count;
}

// sum_{k>=0} (mu(Q)/mu(Q^{[k]}))^alpha along the strict-ancestor chain of set id.
inline double strict_ancestor_sum(const DyadicSystem& D, int id, double alpha) {
  double acc = 0.0;
  const double m = D.sets[id].mass;
  for (int a = id; a >= 0; a = D.sets[a].strict_parent) acc += std::pow(m / D.sets[a].mass, alpha);
  return acc;
}

// Fraction of (point, level) pairs whose distance to the complement of their cube is < eps * l_k.
inline double boundary_fraction(const FiniteSpace& s, const DyadicSystem& D, double eps) {
  long hits = 0, total = 0;
  for (int k = 1; k <= D.depth(); ++k)
    for (int x = 0; x < s.n(); ++x) {
      double d = kInf;
      for (int y = 0; y < s.n(); ++y)
        if (D.label[k][y] != D.label[k][x]) d = std::min(d, s.dist(x, y));
      ++total;
      if (d < eps * D.scale[k]) ++hits;
    }
  return total ? static_cast<double>(hits) / total : 0.0;
}

// Sequences over distinct cube sets (indexed by set id).
using CubeSequence = std::vector<double>;

// Car lambda(P) = mu(P)^{-1} sum_{Q subset P} |lambda_Q| mu(Q), one bottom-up pass over set ids.
inline CubeSequence carleson_transform(const DyadicSystem& D, const CubeSequence& lambda) {
  require(lambda.size() == D.sets.size(), "carleson_transform: sequence length must equal the number of cube sets");
  std::vector<double> acc(lambda.size());
  for (std::size_t id = 0; id < lambda.size(); ++id) acc[id] = std::abs(lambda[id]) * D.sets[id].mass;
  for (std::size_t id = lambda.size(); id-- > 1;) acc[D.sets[id].strict_parent] += acc[id];
  for (std::size_t id = 0; id < lambda.size(); ++id) acc[id] /= D.sets[id].mass;
  return acc;
}

// c / (c^{p^} - 1)^{1/p^}, p^ = min(p, 1).
inline double carleson_bound(double c, double p) {
  const double ph = std::min(p, 1.0);
  return c / std::pow(std::pow(c, ph) - 1.0, 1.0 / ph);
}

// What the Holder weighting a_k = c^{-k/(p+p')} actually yields for p > 1: sum_k c^{-k/p}.
// Agrees with carleson_bound for p <= 1. For p > 1 carleson_bound is too small: lambda = 1 on a
// binary tree of depth 8 already gives ||Car lambda||_2 / ||lambda||_2 = 2.40 > 2.
inline double carleson_bound_holder(double c, double p) {
  if (p <= 1.0) return carleson_bound(c, p);
  const double r = std::pow(c, 1.0 / p);
  return r / (r - 1.0);
}

// Empirical sup of ||Car lambda||_{p,q}/||lambda||_{p,q} over random sparse lambda
// (single cubes, small random supports, dense heavy-tailed draws) and lambda = 1.
inline double carleson_operator_norm_probe(const DyadicSystem& D, double p, double q, int samples,
                                           std::uint64_t seed = 1) {
  check_lorentz_indices(p, q);
  const std::size_t S = D.sets.size();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, S - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double best = 0.0;
  for (int t = 0; t < samples; ++t) {
    CubeSequence lam(S, 0.0);
    const int kind = t % 4;
    if (kind == 0) {
      lam[pick(rng)] = 1.0;
    } else if (kind == 1) {
      const int support = 1 + static_cast<int>(rng() % 8);
      for (int a = 0; a < support; ++a) lam[pick(rng)] = unif(rng) - 0.5;
    } else if (kind == 2) {
      for (auto& v : lam) v = std::pow(unif(rng), 4.0) * (unif(rng) < 0.5 ? -1.0 : 1.0);
    } else {
      lam.assign(S, 1.0);
    }
    const double den = lorentz_sequence_norm(lam, p, q);
    if (den > 0.0) best = std::max(best, lorentz_sequence_norm(carleson_transform(D, lam), p, q) / den);
  }
  return best;
}

struct AncestorEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  int trials = 0;
};

// Monte Carlo pi_m(P,Q) = Prob(P^{(m)} = Q^{(m)}) where P, Q are the level-k cubes containing
// the reference points xp, xq in each random draw.
inline AncestorEstimate ancestor_probability(const FiniteSpace& s, double delta, int xp, int kp, int xq, int kq,
                                             int m, int trials, std::uint64_t seed = 1) {
  if (kp != kq) throw ValidationError("ancestor_probability: P and Q must lie on the same level");
  require(trials >= 1, "ancestor_probability: need at least one trial");
  require(m >= 0 && m <= kp, "ancestor_probability: generation m out of range");
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    const DyadicSystem D = random_dyadic_system(s, delta, seed * 1000003ULL + t);
    require(kp <= D.depth(), "ancestor_probability: level outside the system");
    const int a = D.label[kp - m][xp], b = D.label[kp - m][xq];
    hits += a == b;
  }
  AncestorEstimate e;
  e.trials = trials;
  e.estimate = static_cast<double>(hits) / trials;
  e.stderr_ = std::sqrt(std::max(e.estimate * (1.0 - e.estimate), 0.0) / trials);
  return e;
}

struct Calibration {
  int m0 = 0;
  double eps0 = 0.25;
  double worst_estimate = 1.0;  // smallest pi-hat over checked pairs for m >= m0
  int pairs_checked = 0;
};

// Smallest m0 such that every sampled same-level pair with dist <= eps0 delta^{-m} l_k
// has pi-hat_m >= 1/2 + margin for all m0 <= m <= m0 + 2. Draws are shared across pairs.
inline Calibration calibrate_m0(const FiniteSpace& s, double delta, double eps0, int trials,
                                std::uint64_t seed = 1, double margin = 0.05) {
  std::vector<DyadicSystem> draws;
  for (int t = 0; t < trials; ++t) draws.push_back(random_dyadic_system(s, delta, seed * 1000003ULL + t));
  const int K = draws.front().depth();
  for (const auto& d : draws) require(d.depth() == K, "calibrate_m0: random draws disagree on depth");
  const std::vector<double>& scale = draws.front().scale;
  const int n = s.n();
  auto pi_hat = [&](int x, int y, int k, int m) {
    int hits = 0;
    for (const auto& d : draws) hits += d.label[k - m][x] == d.label[k - m][y];
    return static_cast<double>(hits) / draws.size();
  };
  Calibration best;
  best.eps0 = eps0;
  for (int m0 = 0; m0 <= K; ++m0) {
    double worst = 1.0;
    int checked = 0;
    for (int m = m0; m <= std::min(m0 + 2, K); ++m)
      for (int k = m; k <= K; ++k) {
        const double bound = eps0 * std::pow(delta, -m) * scale[k];
        // For each x the farthest partner within the bound is the hardest case.
        for (int x = 0; x < n; x += std::max(1, n / 32)) {
          int far = x;
          for (int y = 0; y < n; ++y)
            if (s.dist(x, y) <= bound && s.dist(x, y) > s.dist(x, far)) far = y;
          if (far == x) continue;
          worst = std::min(worst, pi_hat(x, far, k, m));
          ++checked;
        }
      }
    if (worst >= 0.5 + margin) {
      best.m0 = m0;
      best.worst_estimate = worst;
      best.pairs_checked = checked;
      return best;
    }
  }
  best.m0 = K;
  best.worst_estimate = 0.0;
  return best;
}

}  // namespace czlab
