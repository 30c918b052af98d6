#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "czlab/config.hpp"
#include "czlab/dyadic.hpp"
#include "czlab/norms.hpp"
#include "czlab/operators.hpp"
#include "czlab/space.hpp"

namespace czlab {

// Long-format row: one quantity per row, so every sweep shares one CSV schema.
struct SweepRow {
  std::string cell;
  int depth = -1;
  int n = 0;
  std::uint64_t seed = 0;
  double p = 0.0, q = 0.0;
  std::string quantity;
  std::optional<double> value;  // empty: not defined (flag says why)
  std::string flag;
};

struct SweepResult {
  std::string op;
  std::string config_hash;
  std::vector<SweepRow> rows;
  nlohmann::json summary = nlohmann::json::object();
};

inline void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << "op,config_hash,cell,depth,n,seed,p,q,quantity,value,flag\n";
  os.precision(17);
  for (const auto& w : r.rows) {
    os << r.op << ',' << r.config_hash << ',' << w.cell << ',' << w.depth << ',' << w.n << ',' << w.seed << ',' << w.p
       << ',' << (std::isinf(w.q) ? std::string("inf") : [&] { std::ostringstream t; t.precision(17); t << w.q; return t.str(); }())
       << ',' << w.quantity << ',';
    if (w.value) os << *w.value;
    os << ',' << w.flag << '\n';
  }
}

// Runs cells on up to `threads` workers; output order is the cell order regardless of scheduling.
// A failing cell contributes one row flagged with the error message.
inline std::vector<SweepRow> run_cells(const std::vector<std::function<std::vector<SweepRow>()>>& cells, int threads) {
  std::vector<std::vector<SweepRow>> out(cells.size());
  auto run_one = [&](std::size_t i) {
    try {
      out[i] = cells[i]();
    } catch (const std::exception& e) {
      SweepRow r;
      r.cell = "cell" + std::to_string(i);
      r.quantity = "error";
      std::string msg = e.what();
      std::replace(msg.begin(), msg.end(), ',', ';');
      r.flag = "error: " + msg;
      out[i] = {r};
    }
  };
  threads = std::max(1, std::min<int>(threads, static_cast<int>(cells.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < cells.size();) run_one(i);
      });
    for (auto& th : pool) th.join();
  }
  std::vector<SweepRow> rows;
  for (auto& v : out) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

// max/min of a positive series; the depth-stability factor.
inline double stability_factor(const std::vector<double>& v) {
  if (v.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*lo <= 0.0) return kInf;
  return *hi / *lo;
}

// Stability of every (quantity, seed, p, q, cell-tag) series across depths.
inline nlohmann::json depth_stability(const std::vector<SweepRow>& rows, const std::vector<std::string>& quantities) {
  std::map<std::string, std::vector<double>> series;
  for (const auto& r : rows) {
    if (!r.value || std::find(quantities.begin(), quantities.end(), r.quantity) == quantities.end()) continue;
    std::ostringstream key;
    key << r.quantity << "|seed=" << r.seed << "|p=" << r.p << "|q=" << r.q;
    const auto tag = r.cell.find('|');
    if (tag != std::string::npos) key << '|' << r.cell.substr(tag + 1);
    series[key.str()].push_back(*r.value);
  }
  nlohmann::json out = nlohmann::json::array();
  for (auto& [k, v] : series) {
    const double f = stability_factor(v);
    out.push_back({{"series", k}, {"points", v.size()}, {"factor", std::isfinite(f) ? nlohmann::json(f) : nlohmann::json(nullptr)}});
  }
  return out;
}

namespace detail {

inline SweepRow make_row(const std::string& cell, int depth, int n, std::uint64_t seed, double p, double q,
                         const std::string& quantity, std::optional<double> value, std::string flag = "") {
  SweepRow r;
  r.cell = cell;
  r.depth = depth;
  r.n = n;
  r.seed = seed;
  r.p = p;
  r.q = q;
  r.quantity = quantity;
  r.value = value;
  r.flag = std::move(flag);
  return r;
}

inline double config_delta(const ExperimentConfig& c) { return get_or<double>(c.dyadic, "delta", 0.5, "dyadic."); }

inline DyadicSystem config_system(const FiniteSpace& s, const ExperimentConfig& c) {
  std::optional<std::uint64_t> seed;
  if (c.dyadic.contains("seed") && !c.dyadic["seed"].is_null()) seed = get_as<std::uint64_t>(c.dyadic, "seed", "dyadic.");
  return build_dyadic_system(s, config_delta(c), seed);
}

// Envelopes fitted between the minimal gap and half the diameter.
inline DimensionEstimate fitted_dimensions(const FiniteSpace& s) {
  DimensionOptions o;
  o.max_centers = 128;
  o.max_net_centers = 32;
  return estimate_dimensions(s, {s.min_gap(), s.diameter() / 2.0, std::sqrt(2.0)}, o);
}

inline std::optional<double> ratio(double a, double b) {
  if (b == 0.0) return std::nullopt;
  return a / b;
}

inline std::vector<int> require_depths(const ExperimentConfig& c) {
  if (c.depths.empty()) config_fail("depths", "this sweep needs a list of refinement depths");
  return c.depths;
}

}  // namespace detail

// r_upper = ||[b,T]||_{S^p} / ||b||_{B^p}, r_lower = ||b||_{B^p} / ||[b,T]||_{S^p}, plus the
// Osc^{p,p}/B^p ratio. Rows with p <= p(eta) carry the flag upper_not_asserted.
inline SweepResult run_equivalence_sweep(const ExperimentConfig& c, int threads = 1) {
  using namespace detail;
  SweepResult res;
  res.op = "sweep-equivalence";
  res.config_hash = config_hash(c.raw);
  const std::vector<double> ps = c.p_grid.empty() ? std::vector<double>{2.0, 3.0, 4.0} : c.p_grid;
  const KernelSpec ks = build_kernel_spec(c.kernel);
  std::vector<std::function<std::vector<SweepRow>()>> cells;
  for (int depth : require_depths(c))
    for (std::uint64_t seed : c.seeds)
      cells.push_back([&, depth, seed] {
        const FiniteSpace s = build_space(c.space, depth);
        const DyadicSystem D = config_system(s, c);
        const Eigen::VectorXd b = build_symbol(s, c.symbol, seed);
        const SingularValues sv = svd(commutator(b, assemble_kernel(s, ks)));
        const double Delta = fitted_dimensions(s).d_sep;
        const double p_eta = std::max(1.0, 1.0 / (ks.eta / Delta + 0.5));
        std::vector<SweepRow> rows;
        const std::string cell = "d" + std::to_string(depth) + "s" + std::to_string(seed);
        rows.push_back(make_row(cell, depth, s.n(), seed, 0, 0, "Delta", Delta));
        rows.push_back(make_row(cell, depth, s.n(), seed, 0, 0, "p_eta", p_eta));
        for (double p : ps) {
          const double S = schatten_lorentz(sv, p, p), B = besov_norm(s, b, p), O = osc_norm(s, D, b, p, p, 1.0);
          const bool null_symbol = B == 0.0;
          const std::string flag = null_symbol ? "null_symbol" : (p <= p_eta ? "upper_not_asserted" : "");
          rows.push_back(make_row(cell, depth, s.n(), seed, p, p, "schatten", S, flag));
          rows.push_back(make_row(cell, depth, s.n(), seed, p, p, "besov", B, flag));
          rows.push_back(make_row(cell, depth, s.n(), seed, p, p, "osc", O, flag));
          rows.push_back(make_row(cell, depth, s.n(), seed, p, p, "r_upper", ratio(S, B), flag));
          rows.push_back(make_row(cell, depth, s.n(), seed, p, p, "r_lower", ratio(B, S), flag));
          rows.push_back(make_row(cell, depth, s.n(), seed, p, p, "osc_over_besov", ratio(O, B), flag));
        }
        return rows;
      });
  res.rows = run_cells(cells, threads);
  res.summary["stability"] = depth_stability(res.rows, {"r_upper", "r_lower", "osc_over_besov"});
  return res;
}

// B^p norms (and S^p commutator norms where n <= 1024) across depths; the summary fits the p-th power
// of the Besov norm against depth.
inline SweepResult run_cutoff_probe(const ExperimentConfig& c, int threads = 1) {
  using namespace detail;
  SweepResult res;
  res.op = "sweep-cutoff";
  res.config_hash = config_hash(c.raw);
  const std::vector<double> ps = c.p_grid.empty() ? std::vector<double>{2.0, 3.0} : c.p_grid;
  const KernelSpec ks = build_kernel_spec(c.kernel);
  const std::uint64_t seed = c.seeds.front();
  std::vector<std::function<std::vector<SweepRow>()>> cells;
  for (int depth : require_depths(c))
    cells.push_back([&, depth] {
      const FiniteSpace s = build_space(c.space, depth);
      const Eigen::VectorXd b = build_symbol(s, c.symbol.empty() ? nlohmann::json{{"kind", "coordinate"}} : c.symbol, seed);
      std::vector<SweepRow> rows;
      const std::string cell = "d" + std::to_string(depth);
      std::optional<SingularValues> sv;
      if (s.n() <= 1024) sv = svd(commutator(b, assemble_kernel(s, ks)));
      for (double p : ps) {
        const double B = besov_norm(s, b, p);
        rows.push_back(make_row(cell, depth, s.n(), seed, p, p, "besov", B, B == 0.0 ? "null_symbol" : ""));
        rows.push_back(make_row(cell, depth, s.n(), seed, p, p, "besov_pow", std::pow(B, p)));
        if (sv)
          rows.push_back(make_row(cell, depth, s.n(), seed, p, p, "schatten", schatten_lorentz(*sv, p, p)));
        else
          rows.push_back(make_row(cell, depth, s.n(), seed, p, p, "schatten", std::nullopt, "skipped_size"));
      }
      return rows;
    });
  res.rows = run_cells(cells, threads);
  nlohmann::json slopes = nlohmann::json::array();
  for (double p : ps) {
    std::vector<double> x, y;
    for (const auto& r : res.rows)
      if (r.quantity == "besov_pow" && r.p == p && r.value) {
        x.push_back(r.depth);
        y.push_back(*r.value);
      }
    if (x.size() < 2) continue;
    const double slope = fit_line(x, y).slope;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (y[i] > 0.0) {
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
      }
    const std::optional<double> log_slope = lx.size() >= 2 ? std::optional<double>(fit_line(lx, ly).slope) : std::nullopt;
    const double first = y[1] - y[0], last = y.back() - y[y.size() - 2];
    slopes.push_back({{"p", p},
                      {"slope", slope},
                      {"relative_slope", y.back() != 0.0 ? nlohmann::json(slope / y.back()) : nlohmann::json(nullptr)},
                      {"log_depth_slope", log_slope ? nlohmann::json(*log_slope) : nlohmann::json(nullptr)},
                      {"first_increment", first},
                      {"last_increment", last},
                      {"increment_decay", first != 0.0 ? nlohmann::json(last / first) : nlohmann::json(nullptr)}});
  }
  res.summary["slopes"] = slopes;
  return res;
}

// ||[b,T]||_{S^{p,q}(L^2(w))} / ||b||_{Osc^{p,q}} against [w]_{A2}.
inline SweepResult run_weighted_sweep(const ExperimentConfig& c, int threads = 1) {
  using namespace detail;
  SweepResult res;
  res.op = "sweep-weighted";
  res.config_hash = config_hash(c.raw);
  const auto norms = c.norms.empty() ? std::vector<std::pair<double, double>>{{2.0, 2.0}} : c.norms;
  const KernelSpec ks = build_kernel_spec(c.kernel);
  const std::uint64_t seed = c.seeds.front();
  std::vector<std::function<std::vector<SweepRow>()>> cells;
  for (int depth : require_depths(c))
    cells.push_back([&, depth] {
      const FiniteSpace s = build_space(c.space, depth);
      const DyadicSystem D = config_system(s, c);
      const Eigen::VectorXd b = build_symbol(s, c.symbol, seed);
      const OperatorMatrix C = commutator(b, assemble_kernel(s, ks));
      std::vector<SweepRow> rows;
      for (const auto& [name, w] : build_weights(s, c.weight)) {
        const std::string cell = "d" + std::to_string(depth) + "|" + name;
        rows.push_back(make_row(cell, depth, s.n(), seed, 0, 0, "a2", w.a2));
        const SingularValues sv = svd(conjugate_to_weighted(C, w));
        for (auto [p, q] : norms) {
          const double S = schatten_lorentz(sv, p, q), O = osc_norm(s, D, b, p, q, 1.0);
          const std::string flag = O == 0.0 ? "null_symbol" : "";
          rows.push_back(make_row(cell, depth, s.n(), seed, p, q, "schatten_w", S, flag));
          rows.push_back(make_row(cell, depth, s.n(), seed, p, q, "osc", O, flag));
          rows.push_back(make_row(cell, depth, s.n(), seed, p, q, "ratio", ratio(S, O), flag));
        }
      }
      return rows;
    });
  res.rows = run_cells(cells, threads);
  res.summary["stability"] = depth_stability(res.rows, {"ratio"});
  return res;
}

// (||[b,T]||_{S^{d,inf}}, ||b||_{Osc^{d,inf}}, Hajlasz M^{1,d} norm) and their pairwise ratios.
inline SweepResult run_critical_index_probe(const ExperimentConfig& c, int threads = 1) {
  using namespace detail;
  SweepResult res;
  res.op = "probe-critical";
  res.config_hash = config_hash(c.raw);
  const KernelSpec ks = build_kernel_spec(c.kernel);
  const std::uint64_t seed = c.seeds.front();
  std::vector<std::function<std::vector<SweepRow>()>> cells;
  for (int depth : require_depths(c))
    cells.push_back([&, depth] {
      const FiniteSpace s = build_space(c.space, depth);
      const DyadicSystem D = config_system(s, c);
      const Eigen::VectorXd b = build_symbol(s, c.symbol.empty() ? nlohmann::json{{"kind", "bump"}} : c.symbol, seed);
      // Grids are Ahlfors regular of their dimension; elsewhere use the fitted envelopes.
      double d = s.kind == "euclidean-grid" ? static_cast<double>(s.coords.cols()) : 0.0;
      std::string flag;
      if (d == 0.0) {
        const DimensionEstimate e = fitted_dimensions(s);
        d = e.d_sep;
        if (std::abs(e.d_upper - e.d_lower) > 0.25) flag = "not_regular";
      }
      if (!(d > 1.0)) flag = flag.empty() ? "d_le_1" : flag + ";d_le_1";
      const std::string cell = "d" + std::to_string(depth);
      const double S = schatten(commutator(b, assemble_kernel(s, ks)), d, kInf);
      const double O = osc_norm(s, D, b, d, kInf, 1.0);
      const HajlaszResult H = hajlasz_norm(s, b, d);
      std::vector<SweepRow> rows;
      rows.push_back(make_row(cell, depth, s.n(), seed, d, kInf, "schatten_weak", S, flag));
      rows.push_back(make_row(cell, depth, s.n(), seed, d, kInf, "osc_weak", O, flag));
      rows.push_back(make_row(cell, depth, s.n(), seed, d, d, "hajlasz", H.value, H.converged ? flag : flag + ";hajlasz_not_converged"));
      rows.push_back(make_row(cell, depth, s.n(), seed, d, kInf, "schatten_over_osc", ratio(S, O), flag));
      rows.push_back(make_row(cell, depth, s.n(), seed, d, kInf, "schatten_over_hajlasz", ratio(S, H.value), flag));
      rows.push_back(make_row(cell, depth, s.n(), seed, d, kInf, "osc_over_hajlasz", ratio(O, H.value), flag));
      return rows;
    });
  res.rows = run_cells(cells, threads);
  res.summary["stability"] =
      depth_stability(res.rows, {"schatten_over_osc", "schatten_over_hajlasz", "osc_over_hajlasz"});
  return res;
}

// (sum_I ||[b,T_{E_I}]||_{S^p}^p)^{1/p} over disjoint annuli E_I, against ||b||_{B^p}.
inline SweepResult run_variational_probe(const ExperimentConfig& c, int threads = 1) {
  using namespace detail;
  SweepResult res;
  res.op = "probe-variational";
  res.config_hash = config_hash(c.raw);
  const std::vector<double> ps = c.p_grid.empty() ? std::vector<double>{3.0} : c.p_grid;
  for (double p : ps)
    if (!(p > 2.0)) config_fail("p_grid", "the variational estimate needs p > 2");
  auto annuli = kernel_annuli(c.kernel);
  if (annuli.empty()) annuli.emplace_back(0.0, kInf);
  const KernelSpec base = build_kernel_spec(c.kernel);
  const std::uint64_t seed = c.seeds.front();
  std::vector<std::function<std::vector<SweepRow>()>> cells;
  for (int depth : require_depths(c))
    cells.push_back([&, depth] {
      const FiniteSpace s = build_space(c.space, depth);
      const Eigen::VectorXd b = build_symbol(s, c.symbol, seed);
      const std::string cell = "d" + std::to_string(depth);
      std::vector<SweepRow> rows;
      std::vector<SingularValues> svs;
      for (std::size_t i = 0; i < annuli.size(); ++i) {
        KernelSpec k = base;
        k.r_min = annuli[i].first;
        k.r_max = annuli[i].second;
        svs.push_back(svd(commutator(b, assemble_kernel(s, k))));
      }
      const SingularValues full = svd(commutator(b, assemble_kernel(s, base)));
      for (double p : ps) {
        double agg = 0.0;
        for (std::size_t i = 0; i < annuli.size(); ++i) {
          const double v = schatten_lorentz(svs[i], p, p);
          agg += std::pow(v, p);
          rows.push_back(make_row(cell + "|annulus" + std::to_string(i), depth, s.n(), seed, p, p, "annulus_schatten", v));
        }
        agg = std::pow(agg, 1.0 / p);
        const double B = besov_norm(s, b, p);
        const std::string flag = B == 0.0 ? "null_symbol" : "";
        rows.push_back(make_row(cell, depth, s.n(), seed, p, p, "aggregate", agg, flag));
        rows.push_back(make_row(cell, depth, s.n(), seed, p, p, "full_schatten", schatten_lorentz(full, p, p), flag));
        rows.push_back(make_row(cell, depth, s.n(), seed, p, p, "besov", B, flag));
        rows.push_back(make_row(cell, depth, s.n(), seed, p, p, "constant", ratio(agg, B), flag));
      }
      return rows;
    });
  res.rows = run_cells(cells, threads);
  res.summary["stability"] = depth_stability(res.rows, {"constant"});
  return res;
}

}  // namespace czlab
