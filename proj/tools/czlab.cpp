// czlab: experiment driver. Every subcommand reads a JSON config and writes CSV plus a JSON summary
// into --out.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "czlab/config.hpp"
#include "czlab/haar.hpp"
#include "czlab/norms.hpp"
#include "czlab/operators.hpp"
#include "czlab/representation.hpp"
#include "czlab/sweeps.hpp"

namespace fs = std::filesystem;
using namespace czlab;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> dyadic_seed;
  std::optional<int> depth;
  int threads = 0;
  bool deterministic = false;
};

void add_common(CLI::App* sub, Common& c, bool config_required = true) {
  auto* opt = sub->add_option("--config", c.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  if (config_required) opt->required();
  sub->add_option("--out", c.out, "output directory (default: config \"output\")");
  sub->add_option("--seed", c.seed, "override the symbol seed list with a single seed");
  sub->add_option("--dyadic-seed", c.dyadic_seed, "seed for the dyadic system construction");
  sub->add_option("--depth", c.depth, "refinement depth for single-space commands");
  sub->add_option("--threads", c.threads, "worker threads for sweeps (0: hardware concurrency)");
  sub->add_flag("--deterministic", c.deterministic, "single-threaded, bit-reproducible run");
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.seeds = {*c.seed};
  if (c.dyadic_seed) {
    if (cfg.dyadic.is_null()) cfg.dyadic = json::object();
    cfg.dyadic["seed"] = *c.dyadic_seed;
    cfg.raw["dyadic"] = cfg.dyadic;
  }
  if (!c.out.empty()) cfg.output = c.out;
  fs::create_directories(cfg.output);
  return cfg;
}

int thread_count(const Common& c) {
  if (c.deterministic) return 1;
  if (c.threads > 0) return c.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

int single_depth(const Common& c, const ExperimentConfig& cfg) {
  if (c.depth) return *c.depth;
  if (!cfg.depths.empty()) return cfg.depths.front();
  return -1;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream os(p);
  os << j.dump(2) << '\n';
}

std::string num(double v) {
  std::ostringstream o;
  o.precision(17);
  if (std::isinf(v))
    o << "inf";
  else
    o << v;
  return o.str();
}

void write_sweep(const ExperimentConfig& cfg, const SweepResult& r, int threads) {
  const fs::path dir(cfg.output);
  {
    std::ofstream os(dir / (r.op + ".csv"));
    write_sweep_csv(os, r);
  }
  json j;
  j["op"] = r.op;
  j["config_hash"] = r.config_hash;
  j["seeds"] = cfg.seeds;
  j["depths"] = cfg.depths;
  j["threads"] = threads;
  j["rows"] = r.rows.size();
  std::size_t failed = 0;
  for (const auto& row : r.rows)
    if (row.quantity == "error") ++failed;
  j["failed_cells"] = failed;
  j["summary"] = r.summary;
  write_json(dir / (r.op + ".json"), j);
  std::cout << r.op << ": " << r.rows.size() << " rows -> " << (dir / (r.op + ".csv")).string() << '\n';
}

int cmd_gen_space(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const FiniteSpace s = build_space(cfg.space, single_depth(c, cfg));
  const fs::path dir(cfg.output);
  json j = space_to_json(s);
  j["config_hash"] = config_hash(cfg.raw);
  if (s.n() >= 4) {
    const DimensionEstimate e = detail::fitted_dimensions(s);
    j["dimensions"] = {{"d", e.d_lower}, {"Delta", e.d_sep}, {"D", e.d_upper}};
  }
  write_json(dir / "space.json", j);
  std::ofstream os(dir / "space.csv");
  os.precision(17);
  for (int i = 0; i < s.n(); ++i) {
    if (s.has_coords())
      for (Eigen::Index a = 0; a < s.coords.cols(); ++a) os << s.coords(i, a) << ',';
    os << s.mass(i) << '\n';
  }
  std::cout << "space: " << s.kind << ", n = " << s.n() << '\n';
  return 0;
}

int cmd_build_dyadic(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const FiniteSpace s = build_space(cfg.space, single_depth(c, cfg));
  const DyadicSystem D = detail::config_system(s, cfg);
  json j = dyadic_to_json(D);
  j["config_hash"] = config_hash(cfg.raw);
  write_json(fs::path(cfg.output) / "dyadic.json", j);
  std::cout << "dyadic: depth " << D.depth() << ", C0 = " << D.C0 << '\n';
  return 0;
}

int cmd_norms(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const int depth = single_depth(c, cfg);
  const FiniteSpace s = build_space(cfg.space, depth);
  const DyadicSystem D = detail::config_system(s, cfg);
  const std::string hash = config_hash(cfg.raw);
  const std::string space_id = s.kind + "/n=" + std::to_string(s.n());
  const std::string system_id = "delta=" + num(D.delta) + "/" + D.mode;
  auto norms = cfg.norms;
  for (double p : cfg.p_grid) norms.emplace_back(p, p);
  if (norms.empty()) norms.emplace_back(2.0, 2.0);
  std::ofstream os(fs::path(cfg.output) / "norms.csv");
  write_norm_header(os);
  json rows = json::array();
  const bool have_kernel = !cfg.kernel.is_null();
  std::optional<OperatorMatrix> T;
  if (have_kernel) T = assemble_kernel(s, build_kernel_spec(cfg.kernel));
  for (std::uint64_t seed : cfg.seeds) {
    const Eigen::VectorXd b = build_symbol(s, cfg.symbol, seed);
    std::optional<SingularValues> sv;
    if (T) sv = svd(commutator(b, *T));
    auto emit = [&](const std::string& kind, double p, double q, double v) {
      NormReport r{kind, p, q, v, space_id, system_id, static_cast<long long>(seed)};
      write_norm_row(os, r);
      rows.push_back({{"kind", kind}, {"p", num(p)}, {"q", num(q)}, {"value", v}, {"seed", seed}});
    };
    for (auto [p, q] : norms) {
      emit("osc", p, q, osc_norm(s, D, b, p, q, 1.0));
      if (p == q && p >= 1.0) emit("besov", p, q, besov_norm(s, b, p));
      if (sv) emit("schatten_commutator", p, q, schatten_lorentz(*sv, p, q));
    }
  }
  write_json(fs::path(cfg.output) / "norms.json", {{"config_hash", hash}, {"space", space_id}, {"rows", rows}});
  std::cout << "norms: " << rows.size() << " values\n";
  return 0;
}

int cmd_extract(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const FiniteSpace s = build_space(cfg.space, single_depth(c, cfg));
  const DyadicSystem D = detail::config_system(s, cfg);
  const HaarBasis B = build_haar(s, D);
  KernelSpec ks = build_kernel_spec(cfg.kernel);
  const OperatorMatrix Top = assemble_kernel(s, ks);
  if (Top.is_complex())
    detail::config_fail("kernel.real_part", "the representation needs a real kernel; set real_part to true");
  const Eigen::MatrixXd& T = Top.re;
  const Decomposition dec = telescoping_decomposition(s, D, B, T, 0, D.depth());
  ExtractionOptions eo;
  eo.eta = ks.eta;
  const ShiftExtraction E = extract_shifts(s, D, B, T, eo);
  const HaarDecayAudit audit = haar_decay_audit(s, D, B, T, ks.eta);
  json j;
  j["config_hash"] = config_hash(cfg.raw);
  j["n"] = s.n();
  j["depth"] = D.depth();
  j["operator_s2"] = T.norm();
  j["telescoping_residual"] = dec.telescoping_residual;
  j["regrouped_residual"] = dec.regrouped_residual;
  j["full_residual"] = dec.full_residual;
  j["haar_decay_constant"] = audit.constant;
  j["haar_decay_per_level"] = audit.per_level;
  j["extraction"] = extraction_report(E);
  write_json(fs::path(cfg.output) / "representation.json", j);
  std::ofstream bin(fs::path(cfg.output) / "operator.bin", std::ios::binary);
  write_matrix_binary(bin, Top);
  std::cout << "representation: residual " << E.residual << ", " << E.families.size() << " shift families\n";
  return 0;
}

int cmd_report(const Common& c) {
  const fs::path dir = c.out.empty() ? fs::path(c.config.empty() ? "out" : load_config(c.config).output) : fs::path(c.out);
  if (!fs::is_directory(dir)) throw ValidationError("report: no output directory '" + dir.string() + "'");
  json all = json::object();
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json" && e.path().filename() != "report.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f);
    try {
      all[f.stem().string()] = json::parse(in);
    } catch (const json::exception&) {
      all[f.stem().string()] = {{"error", "unreadable"}};
    }
  }
  write_json(dir / "report.json", all);
  for (const auto& [name, j] : all.items()) {
    std::cout << name;
    if (j.contains("summary") && j["summary"].contains("stability")) {
      double worst = 1.0;
      bool unbounded = false;
      for (const auto& s : j["summary"]["stability"]) {
        if (s["factor"].is_null())
          unbounded = true;
        else
          worst = std::max(worst, s["factor"].get<double>());
      }
      std::cout << ": worst depth-stability factor " << (unbounded ? std::string("inf") : num(worst));
    }
    if (j.contains("failed_cells")) std::cout << ", failed cells " << j["failed_cells"];
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Commutator Schatten-class experiments on finite spaces of homogeneous type"};
  app.require_subcommand(1);
  Common c;
  std::function<int()> action;
  auto sub = [&](const std::string& name, const std::string& help, std::function<int()> f, bool config_required = true) {
    CLI::App* s = app.add_subcommand(name, help);
    add_common(s, c, config_required);
    s->callback([&action, f] { action = f; });
  };
  sub("gen-space", "generate a finite space and write space.json / space.csv", [&] { return cmd_gen_space(c); });
  sub("build-dyadic", "build a dyadic cube system and write dyadic.json", [&] { return cmd_build_dyadic(c); });
  sub("norms", "Besov, oscillation and commutator Schatten norms of the configured symbol", [&] { return cmd_norms(c); });
  auto sweep = [&](SweepResult (*run)(const ExperimentConfig&, int)) {
    return [&c, run] {
      const ExperimentConfig cfg = load(c);
      const int threads = thread_count(c);
      write_sweep(cfg, run(cfg, threads), threads);
      return 0;
    };
  };
  sub("sweep-equivalence", "Schatten/Besov ratios over p, depth and seed", sweep(run_equivalence_sweep));
  sub("sweep-cutoff", "Besov and Schatten norms at p <= d across depths", sweep(run_cutoff_probe));
  sub("sweep-weighted", "weighted Schatten norms against oscillation norms and A2", sweep(run_weighted_sweep));
  sub("probe-critical", "weak Schatten, weak oscillation and Hajlasz norms at p = d", sweep(run_critical_index_probe));
  sub("probe-variational", "annular truncations against the Besov norm", sweep(run_variational_probe));
  sub("extract-representation", "telescoping decomposition and shift extraction of the kernel", [&] { return cmd_extract(c); });
  sub("report", "merge the JSON summaries in --out", [&] { return cmd_report(c); }, false);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    return action ? action() : 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
