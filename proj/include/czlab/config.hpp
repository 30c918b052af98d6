#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "czlab/dyadic.hpp"
#include "czlab/errors.hpp"
#include "czlab/lorentz.hpp"
#include "czlab/operators.hpp"
#include "czlab/space.hpp"

namespace czlab {

using json = nlohmann::json;

// Experiment configuration. Every sub-spec is kept as JSON and resolved on demand so that the
// offending key can be named when something does not resolve.
struct ExperimentConfig {
  json raw;
  json space;
  json dyadic;
  json kernel;
  json symbol;
  json weight;
  std::vector<std::pair<double, double>> norms;  // (p, q), q may be kInf
  std::vector<double> p_grid;
  std::vector<int> depths;
  std::vector<std::uint64_t> seeds;
  std::string output = "out";
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& key, const std::string& what) {
  throw ValidationError("config: key '" + key + "': " + what);
}

template <class T>
T get_as(const json& j, const std::string& key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_fail(path + key, j.contains(key) ? "has the wrong type" : "is missing");
  }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& path) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return get_as<T>(j, key, path);
}

inline double parse_index(const json& v, const std::string& key) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return kInf;
    config_fail(key, "expected a number or \"inf\"");
  }
  if (!v.is_number()) config_fail(key, "expected a number or \"inf\"");
  return v.get<double>();
}

inline void check_known(const json& j, const std::vector<std::string>& keys, const std::string& path) {
  if (!j.is_object()) config_fail(path.empty() ? "<root>" : path.substr(0, path.size() - 1), "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) config_fail(path + it.key(), "unknown key");
}

}  // namespace detail

// FNV-1a over the canonical (key-sorted) dump.
inline std::string config_hash(const json& j) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

inline ExperimentConfig parse_config(const json& j) {
  using namespace detail;
  check_known(j, {"space", "dyadic", "kernel", "symbol", "weight", "norms", "p_grid", "depths", "seeds", "output"}, "");
  ExperimentConfig c;
  c.raw = j;
  if (!j.contains("space")) config_fail("space", "is missing");
  c.space = j.at("space");
  c.dyadic = j.value("dyadic", json::object());
  c.kernel = j.value("kernel", json::object());
  c.symbol = j.value("symbol", json::object());
  c.weight = j.value("weight", json::object());
  if (j.contains("norms")) {
    if (!j["norms"].is_array()) config_fail("norms", "expected a list of [p, q] pairs");
    for (std::size_t i = 0; i < j["norms"].size(); ++i) {
      const json& e = j["norms"][i];
      const std::string key = "norms[" + std::to_string(i) + "]";
      if (!e.is_array() || e.size() != 2) config_fail(key, "expected [p, q]");
      const double p = parse_index(e[0], key), q = parse_index(e[1], key);
      try {
        check_lorentz_indices(p, q);
      } catch (const std::exception& ex) {
        config_fail(key, ex.what());
      }
      c.norms.emplace_back(p, q);
    }
  }
  if (j.contains("p_grid")) {
    if (!j["p_grid"].is_array()) config_fail("p_grid", "expected a list");
    for (std::size_t i = 0; i < j["p_grid"].size(); ++i) {
      const double p = parse_index(j["p_grid"][i], "p_grid[" + std::to_string(i) + "]");
      if (!(p > 0.0 && std::isfinite(p))) config_fail("p_grid[" + std::to_string(i) + "]", "p must be positive and finite");
      c.p_grid.push_back(p);
    }
  }
  c.depths = get_or<std::vector<int>>(j, "depths", {}, "");
  for (std::size_t i = 0; i < c.depths.size(); ++i)
    if (c.depths[i] < 1 || c.depths[i] > 12) config_fail("depths[" + std::to_string(i) + "]", "must lie in [1, 12]");
  c.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", {1}, "");
  c.output = get_or<std::string>(j, "output", "out", "");
  // Resolve the sub-specs once so that errors surface before any work starts.
  check_known(c.space, {"kind", "dim", "points_per_side", "spacing", "lambda", "alpha", "branching", "delta", "depth",
                        "path"}, "space.");
  {
    const std::string k = get_as<std::string>(c.space, "kind", "space.");
    if (k != "euclidean-grid" && k != "bessel-grid" && k != "cantor" && k != "four-squares" && k != "points")
      config_fail("space.kind", "unknown generator '" + k + "'");
  }
  detail::get_as<std::string>(c.space, "kind", "space.");
  if (!c.dyadic.is_null()) check_known(c.dyadic, {"delta", "seed", "mode"}, "dyadic.");
  if (!c.kernel.empty()) {
    check_known(c.kernel, {"family", "riesz_j", "eta", "real_part", "r_min", "r_max", "annuli"}, "kernel.");
    try {
      parse_kernel_family(get_or<std::string>(c.kernel, "family", "hilbert", "kernel."));
    } catch (const ValidationError& e) {
      config_fail("kernel.family", e.what());
    }
    const double eta = get_or<double>(c.kernel, "eta", 1.0, "kernel.");
    if (!(eta > 0.0 && eta <= 1.0)) config_fail("kernel.eta", "must lie in (0, 1]");
  }
  if (!c.symbol.empty()) {
    check_known(c.symbol, {"kind", "levels", "decay", "seed", "axis", "values", "center", "radius", "path", "scale"},
                "symbol.");
    const std::string k = get_as<std::string>(c.symbol, "kind", "symbol.");
    if (k != "random-haar-mixture" && k != "coordinate" && k != "piecewise-constant" && k != "bump" && k != "csv" &&
        k != "constant")
      config_fail("symbol.kind", "unknown generator '" + k + "'");
  }
  if (!c.weight.empty()) {
    check_known(c.weight, {"kind", "a", "origin"}, "weight.");
    const std::string k = get_as<std::string>(c.weight, "kind", "weight.");
    if (k != "power" && k != "one") config_fail("weight.kind", "unknown weight '" + k + "'");
    if (c.weight.contains("a")) {
      for (double a : c.weight["a"].is_array() ? c.weight["a"].get<std::vector<double>>()
                                               : std::vector<double>{get_as<double>(c.weight, "a", "weight.")})
        if (!(a > -1.0 && a < 1.0)) config_fail("weight.a", "power weights are A2 only for -1 < a < 1");
    }
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: parse error: ") + e.what());
  }
  return parse_config(j);
}

inline Eigen::VectorXd read_vector_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("csv: cannot open '" + path + "'");
  std::vector<double> v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    try {
      v.push_back(std::stod(cell));
    } catch (const std::exception&) {
      if (!v.empty()) throw ValidationError("csv: non-numeric value '" + cell + "' in '" + path + "'");
    }
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Space for one refinement depth (-1: use the explicit sizes in the space config).
// Grids and Bessel grids take 2^depth points per side on the unit cube; Cantor takes depth generations.
inline FiniteSpace build_space(const json& sp, int depth = -1) {
  using detail::get_or;
  const std::string kind = detail::get_as<std::string>(sp, "kind", "space.");
  auto side = [&]() {
    if (depth >= 0) return 1 << depth;
    return detail::get_as<int>(sp, "points_per_side", "space.");
  };
  if (kind == "euclidean-grid") {
    const int m = side();
    const double h = depth >= 0 ? 1.0 / m : get_or<double>(sp, "spacing", 1.0 / m, "space.");
    return euclidean_grid(get_or<int>(sp, "dim", 1, "space."), m, h);
  }
  if (kind == "bessel-grid") {
    std::vector<double> lambda;
    if (sp.contains("lambda") && sp["lambda"].is_number())
      lambda = {sp["lambda"].get<double>()};
    else
      lambda = get_or<std::vector<double>>(sp, "lambda", {0.0}, "space.");
    std::vector<int> alpha;
    if (sp.contains("alpha") && sp["alpha"].is_number())
      alpha = {sp["alpha"].get<int>()};
    else
      alpha = get_or<std::vector<int>>(sp, "alpha", {}, "space.");
    return bessel_grid(lambda, alpha, side());
  }
  if (kind == "cantor")
    return cantor(get_or<int>(sp, "branching", 2, "space."), get_or<double>(sp, "delta", 1.0 / 3.0, "space."),
                  depth >= 0 ? depth : detail::get_as<int>(sp, "depth", "space."));
  if (kind == "four-squares") return four_squares(side());
  if (kind == "points") {
    // CSV rows: coordinates..., mass
    const std::string path = detail::get_as<std::string>(sp, "path", "space.");
    std::ifstream in(path);
    if (!in) detail::config_fail("space.path", "cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::vector<double> r;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
      rows.push_back(r);
    }
    if (rows.empty() || rows[0].size() < 2) detail::config_fail("space.path", "need rows of coordinates followed by a mass");
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size()), d = static_cast<Eigen::Index>(rows[0].size()) - 1;
    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd mu(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>(rows[i].size()) != d + 1) detail::config_fail("space.path", "ragged rows");
      for (Eigen::Index a = 0; a < d; ++a) x(i, a) = rows[i][a];
      mu(i) = rows[i][d];
    }
    return space_from_points(x, mu);
  }
  detail::config_fail("space.kind", "unknown generator '" + kind + "'");
}

// Kernel spec; annulus index selects one entry of "annuli" when given.
inline KernelSpec build_kernel_spec(const json& k) {
  using detail::get_or;
  KernelSpec spec;
  spec.family = parse_kernel_family(get_or<std::string>(k, "family", "hilbert", "kernel."));
  spec.riesz_j = get_or<int>(k, "riesz_j", 0, "kernel.");
  spec.eta = get_or<double>(k, "eta", 1.0, "kernel.");
  spec.real_part = get_or<bool>(k, "real_part", false, "kernel.");
  spec.r_min = get_or<double>(k, "r_min", 0.0, "kernel.");
  if (k.contains("r_max")) spec.r_max = detail::parse_index(k["r_max"], "kernel.r_max");
  return spec;
}

inline std::vector<std::pair<double, double>> kernel_annuli(const json& k) {
  std::vector<std::pair<double, double>> out;
  if (!k.contains("annuli")) return out;
  if (!k["annuli"].is_array()) detail::config_fail("kernel.annuli", "expected a list of [r_min, r_max]");
  for (std::size_t i = 0; i < k["annuli"].size(); ++i) {
    const json& e = k["annuli"][i];
    const std::string key = "kernel.annuli[" + std::to_string(i) + "]";
    if (!e.is_array() || e.size() != 2) detail::config_fail(key, "expected [r_min, r_max]");
    const double a = detail::parse_index(e[0], key), b = detail::parse_index(e[1], key);
    if (!(a >= 0.0 && b >= a)) detail::config_fail(key, "need 0 <= r_min <= r_max");
    if (!out.empty() && a < out.back().second) detail::config_fail(key, "annuli must be disjoint and increasing");
    out.emplace_back(a, b);
  }
  return out;
}

// Continuum Haar mixture on the bounding box of the coordinates: at level j the box splits into
// 2^dim congruent subboxes; each gets a mean-zero random value scaled by 2^{-j decay}. The function
// does not depend on the sampling resolution.
inline Eigen::VectorXd haar_mixture_symbol(const FiniteSpace& s, int levels, double decay, std::uint64_t seed) {
  require(s.has_coords(), "symbol: random-haar-mixture needs coordinates");
  const int n = s.n(), dim = static_cast<int>(s.coords.cols());
  const Eigen::RowVectorXd lo = s.coords.colwise().minCoeff(), hi = s.coords.colwise().maxCoeff();
  // pad half a cell so that grid points are strictly inside
  const Eigen::RowVectorXd pad = (hi - lo).cwiseMax(1e-12) * 1e-9;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  const int kids = 1 << dim;
  for (int j = 0; j < levels; ++j) {
    const long boxes_per_axis = 1L << j;
    long boxes = 1;
    for (int a = 0; a < dim; ++a) boxes *= boxes_per_axis;
    std::vector<double> vals(static_cast<std::size_t>(boxes * kids));
    for (long B = 0; B < boxes; ++B) {
      double mean = 0.0;
      for (int c = 0; c < kids; ++c) mean += vals[B * kids + c] = u(rng);
      mean /= kids;
      for (int c = 0; c < kids; ++c) vals[B * kids + c] = (vals[B * kids + c] - mean) * std::pow(2.0, -j * decay);
    }
    for (int i = 0; i < n; ++i) {
      long box = 0, child = 0;
      for (int a = dim - 1; a >= 0; --a) {
        const double t = (s.coords(i, a) - lo(a) + pad(a)) / (hi(a) - lo(a) + 2 * pad(a));
        const long cell = std::min<long>(static_cast<long>(t * boxes_per_axis * 2), boxes_per_axis * 2 - 1);
        box = box * boxes_per_axis + cell / 2;
        child = child * 2 + cell % 2;
      }
      b(i) += vals[box * kids + child];
    }
  }
  return b;
}

inline Eigen::VectorXd build_symbol(const FiniteSpace& s, const json& sym, std::uint64_t seed) {
  using detail::get_or;
  const std::string kind = get_or<std::string>(sym, "kind", "random-haar-mixture", "symbol.");
  const double scale = get_or<double>(sym, "scale", 1.0, "symbol.");
  Eigen::VectorXd b;
  if (kind == "random-haar-mixture") {
    b = haar_mixture_symbol(s, get_or<int>(sym, "levels", 3, "symbol."), get_or<double>(sym, "decay", 0.5, "symbol."),
                            get_or<std::uint64_t>(sym, "seed", seed, "symbol."));
  } else if (kind == "coordinate") {
    const int a = get_or<int>(sym, "axis", 0, "symbol.");
    if (!s.has_coords() || a < 0 || a >= s.coords.cols()) detail::config_fail("symbol.axis", "no such coordinate");
    b = s.coords.col(a);
  } else if (kind == "constant") {
    b = Eigen::VectorXd::Constant(s.n(), get_or<double>(sym, "values", 1.0, "symbol."));
  } else if (kind == "piecewise-constant") {
    // one value per component label (four-squares), or per half along the first axis
    const std::vector<double> v = detail::get_as<std::vector<double>>(sym, "values", "symbol.");
    b.resize(s.n());
    if (!s.group.empty()) {
      for (int i = 0; i < s.n(); ++i) {
        const std::size_t g = static_cast<std::size_t>(s.group[i]);
        if (v.size() == 2) b(i) = v[g % 2];
        else if (g < v.size()) b(i) = v[g];
        else detail::config_fail("symbol.values", "need 2 values or one per component");
      }
    } else {
      if (v.size() != 2 || !s.has_coords()) detail::config_fail("symbol.values", "need exactly 2 values");
      const double mid = 0.5 * (s.coords.col(0).minCoeff() + s.coords.col(0).maxCoeff());
      for (int i = 0; i < s.n(); ++i) b(i) = s.coords(i, 0) < mid ? v[0] : v[1];
    }
  } else if (kind == "bump") {
    if (!s.has_coords()) detail::config_fail("symbol.kind", "bump needs coordinates");
    const int dim = static_cast<int>(s.coords.cols());
    Eigen::RowVectorXd c = 0.5 * (s.coords.colwise().minCoeff() + s.coords.colwise().maxCoeff());
    if (sym.contains("center")) {
      const auto cv = detail::get_as<std::vector<double>>(sym, "center", "symbol.");
      if (static_cast<int>(cv.size()) != dim) detail::config_fail("symbol.center", "dimension mismatch");
      for (int a = 0; a < dim; ++a) c(a) = cv[a];
    }
    const double r = get_or<double>(sym, "radius", 0.4, "symbol.");
    b.resize(s.n());
    for (int i = 0; i < s.n(); ++i) {
      const double t = (s.coords.row(i) - c).norm() / r;
      b(i) = t < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - t * t)) : 0.0;
    }
  } else if (kind == "csv") {
    b = read_vector_csv(detail::get_as<std::string>(sym, "path", "symbol."));
    if (b.size() != s.n()) detail::config_fail("symbol.path", "length does not match the space");
  } else {
    detail::config_fail("symbol.kind", "unknown generator '" + kind + "'");
  }
  return scale * b;
}

// Weights listed in the weight config ("a" may be a list of exponents). w == 1 is always included first.
inline std::vector<std::pair<std::string, Weight>> build_weights(const FiniteSpace& s, const json& w) {
  std::vector<std::pair<std::string, Weight>> out;
  out.emplace_back("one", make_weight(s, Eigen::VectorXd::Ones(s.n())));
  if (w.empty() || detail::get_or<std::string>(w, "kind", "one", "weight.") == "one") return out;
  std::vector<double> as = w["a"].is_array() ? w["a"].get<std::vector<double>>()
                                             : std::vector<double>{detail::get_as<double>(w, "a", "weight.")};
  Eigen::VectorXd origin;
  if (w.contains("origin")) {
    const auto o = detail::get_as<std::vector<double>>(w, "origin", "weight.");
    origin = Eigen::Map<const Eigen::VectorXd>(o.data(), static_cast<Eigen::Index>(o.size()));
    if (origin.size() != s.coords.cols()) detail::config_fail("weight.origin", "dimension mismatch");
  }
  for (double a : as) {
    std::ostringstream name;
    name << "power(" << a << ")";
    out.emplace_back(name.str(), power_weight(s, a, origin));
  }
  return out;
}

inline json space_to_json(const FiniteSpace& s) {
  json j;
  j["kind"] = s.kind;
  j["n"] = s.n();
  j["total_mass"] = s.total_mass();
  j["diameter"] = s.diameter();
  j["a0"] = s.a0;
  j["mass"] = std::vector<double>(s.mass.data(), s.mass.data() + s.n());
  if (s.has_coords()) {
    json pts = json::array();
    for (Eigen::Index i = 0; i < s.coords.rows(); ++i) {
      std::vector<double> row(s.coords.cols());
      for (Eigen::Index a = 0; a < s.coords.cols(); ++a) row[a] = s.coords(i, a);
      pts.push_back(row);
    }
    j["coords"] = pts;
  }
  return j;
}

// {delta, scale, levels: [[{points, center, parent, children}]], c0, C0, strict_c, mode}
inline json dyadic_to_json(const DyadicSystem& D) {
  json j;
  j["delta"] = D.delta;
  j["mode"] = D.mode;
  j["depth"] = D.depth();
  j["scale"] = D.scale;
  j["c0"] = D.c0;
  j["C0"] = D.C0;
  j["strict_c"] = std::isfinite(D.strict_c) ? json(D.strict_c) : json(nullptr);
  if (D.m0 >= 0) {
    j["m0"] = D.m0;
    j["eps0"] = D.eps0;
  }
  json levels = json::array();
  for (const auto& lvl : D.levels) {
    json cubes = json::array();
    for (const auto& q : lvl)
      cubes.push_back({{"points", q.points}, {"center", q.center}, {"parent", q.parent}, {"children", q.children},
                       {"set", q.set}, {"mass", q.mass}});
    levels.push_back(cubes);
  }
  j["levels"] = levels;
  j["label"] = D.label;
  return j;
}

}  // namespace czlab
