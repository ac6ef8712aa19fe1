// Command-line front end: simulate paths, estimate local Hurst curves, run
// MISE studies, and materialize the asymptotic constant tables.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "hurstlab/errors.hpp"
#include "hurstlab/experiments.hpp"
#include "hurstlab/run_config.hpp"
#include "hurstlab/version.hpp"

namespace fs = std::filesystem;
using namespace hurstlab;

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

fs::path table_cache_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("HURSTLAB_TABLE_CACHE")) return env;
  return "table_cache";
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out.good()) throw Error("failed writing " + path.string());
}

void write_sidecar(const fs::path& target, const RunConfig& cfg) {
  write_text(target.string() + ".meta.json", cfg.to_json() + "\n");
}

std::optional<AsymptoticTable> try_load_table(const fs::path& dir) {
  try {
    return AsymptoticTable::load(dir);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// Input CSVs are the ones simulate writes: header k,t,z,h then one row per
// lattice point k = 1..n-1.
SampledPath read_path_csv(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("k,t,z", 0) != 0) {
    throw Error(file.string() + " is not a path CSV (expected header k,t,z,...)");
  }
  std::vector<double> values;
  long expect = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    if (!std::getline(row, field, ',')) throw Error("short row in " + file.string());
    if (std::stol(field) != expect) {
      throw Error("non-contiguous k column in " + file.string());
    }
    if (!std::getline(row, field, ',') || !std::getline(row, field, ',')) {
      throw Error("short row in " + file.string());
    }
    values.push_back(std::stod(field));
    ++expect;
  }
  if (values.size() < 8) throw Error(file.string() + " holds too short a path");
  SampledPath path;
  path.n = static_cast<int>(values.size()) + 1;
  path.values = std::move(values);
  path.provenance.spec_id = file.string();
  return path;
}

std::vector<double> parse_t_grid(const std::string& text, int n, double alpha) {
  if (text == "paper") {
    std::vector<double> ts = paper_t_grid(n, alpha);
    if (ts.empty()) throw Error("the paper t-grid is empty for this n, alpha");
    return ts;
  }
  std::vector<double> ts;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double t = std::stod(item, &used);
    if (used != item.size()) throw Error("bad t value '" + item + "'");
    ts.push_back(t);
  }
  if (ts.empty()) throw Error("empty t grid");
  return ts;
}

int cmd_simulate(const RunConfig& cfg) {
  const MiseCase c = mise_case_from_name(cfg.case_name);
  const HurstField field = make_case_field(c, cfg.field, cfg.master_seed);
  const MbmSpec spec{1.0, 1.0, field, {}, cfg.case_name};
  const Eigen::MatrixXd cov = covariance_matrix(spec, cfg.n);
  const SeedLineage seed{cfg.master_seed, 0, RandomStream::kPath};
  const SampledPath path = sample_gaussian_path(cov, seed);

  std::ostringstream out;
  out << "k,t,z,h\n";
  for (int k = 1; k < cfg.n; ++k) {
    const double t = static_cast<double>(k) / cfg.n;
    out << k << ',' << g17(t) << ',' << g17(path.values[k - 1]) << ','
        << g17(field(t)) << '\n';
  }
  write_text(cfg.out, out.str());
  write_sidecar(cfg.out, cfg);
  std::cout << "wrote " << cfg.out << " (" << cfg.n - 1 << " rows)\n";
  return 0;
}

int cmd_estimate(const RunConfig& cfg) {
  const SampledPath path = read_path_csv(cfg.input);
  const EstimatorKind kind = estimator_from_name(cfg.estimator);
  const EstimatorConfig est_cfg = make_estimator_config(
      kind, cfg.alpha, cfg.p, second_difference_filter());
  const std::vector<double> ts = parse_t_grid(cfg.t_grid, path.n, cfg.alpha);

  std::optional<AsymptoticTable> table =
      try_load_table(table_cache_dir(cfg.table_cache));
  if (kind == EstimatorKind::kIr2 && !table) {
    throw Error(
        "the ir2 estimator needs the asymptotic table; run "
        "`hurstlab tables --what sigma_p` first (cache: " +
        table_cache_dir(cfg.table_cache).string() + ")");
  }

  const EstimateCurve curve =
      estimate(path, est_cfg, ts, table ? &*table : nullptr);

  // Predicted standard errors: the variation estimators get them directly
  // from the Gamma series; the ratio ones need the Monte Carlo table.
  std::vector<std::string> se(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!curve.valid[i]) continue;
    const double h = curve.h_hat[i];
    try {
      double v;
      if (kind == EstimatorKind::kQv || kind == EstimatorKind::kQv2) {
        v = clt_variance(kind, Eigen::MatrixXd(),
                         gamma_matrix(HurstValue(h), cfg.p,
                                      second_difference_filter()),
                         cfg.p);
      } else if (table) {
        v = clt_variance(kind, h, cfg.p, *table);
      } else {
        continue;
      }
      se[i] = g17(std::sqrt(
          v / (2.0 * std::pow(static_cast<double>(path.n), 1.0 - cfg.alpha))));
    } catch (const OutOfTableRange&) {
      // leave the column empty
    }
  }

  std::ostringstream out;
  out << "t,h_hat,clamped,stderr,estimator,alpha,p\n";
  for (std::size_t i = 0; i < ts.size(); ++i) {
    out << g17(ts[i]) << ',';
    if (curve.valid[i]) out << g17(curve.h_hat[i]);
    out << ',' << (curve.clamped[i] ? 1 : 0) << ',' << se[i] << ','
        << cfg.estimator << ',' << g17(cfg.alpha) << ',' << cfg.p << '\n';
  }
  write_text(cfg.out, out.str());
  write_sidecar(cfg.out, cfg);
  std::cout << "wrote " << cfg.out << " (" << ts.size() << " rows)\n";
  return 0;
}

int cmd_mise(const RunConfig& cfg) {
  MiseParams params;
  params.mise_case = mise_case_from_name(cfg.case_name);
  params.n = cfg.n;
  params.alpha = cfg.alpha;
  params.estimator = estimator_from_name(cfg.estimator);
  params.p = cfg.p;
  params.reps = cfg.reps;
  params.n_fields = cfg.n_fields;
  params.master_seed = cfg.master_seed;

  std::optional<AsymptoticTable> table =
      try_load_table(table_cache_dir(cfg.table_cache));
  if (params.estimator == EstimatorKind::kIr2 && !table) {
    throw Error(
        "the ir2 estimator needs the asymptotic table; run "
        "`hurstlab tables --what sigma_p` first");
  }

  const MiseReport report = run_mise(params, table ? &*table : nullptr);

  nlohmann::json doc = nlohmann::json::parse(report.to_json());
  doc["config"] = nlohmann::json::parse(cfg.to_json());
  write_text(cfg.out, doc.dump(2) + "\n");

  fs::path csv = cfg.out;
  csv.replace_extension(".csv");
  if (csv == fs::path(cfg.out)) csv += ".csv";
  std::ostringstream out;
  out << "t,bias,var\n";
  for (std::size_t i = 0; i < report.ts.size(); ++i) {
    out << g17(report.ts[i]) << ',' << g17(report.per_t_bias[i]) << ','
        << g17(report.per_t_var[i]) << '\n';
  }
  write_text(csv, out.str());
  write_sidecar(csv, cfg);
  std::cout << "sqrt_mise " << g17(report.sqrt_mise) << " (mc_se "
            << g17(report.mc_se) << "), wrote " << cfg.out << " and "
            << csv.string() << "\n";
  return 0;
}

int cmd_tables(const RunConfig& cfg, const AsymptoticTableParams& tp) {
  const fs::path cache = table_cache_dir(cfg.table_cache);
  if (cfg.what != "sigma_p" && cfg.out.empty()) {
    throw Error("--out is required for --what " + cfg.what);
  }

  if (cfg.what == "lambda2" || cfg.what == "rho2") {
    std::ostringstream out;
    out << "h,i," << (cfg.what == "lambda2" ? "lambda2,lambda2_deriv" : "rho2")
        << "\n";
    for (int k = 0; k < tp.h_count; ++k) {
      const HurstValue h(tp.h_at(k));
      for (int i = 1; i <= tp.p; ++i) {
        out << g17(h.value()) << ',' << i << ',';
        if (cfg.what == "lambda2") {
          out << g17(lambda2_dilated(i, h)) << ',' << g17(lambda2_derivative(h, i));
        } else {
          out << g17(rho2_dilated(i, h));
        }
        out << '\n';
      }
    }
    write_text(cfg.out, out.str());
  } else if (cfg.what == "gamma") {
    std::ostringstream out;
    out << "h,i,j,gamma\n";
    for (int k = 0; k < tp.h_count; ++k) {
      const double h = tp.h_at(k);
      const Eigen::MatrixXd g = gamma_matrix(HurstValue(h), tp.p,
                                             second_difference_filter(),
                                             tp.truncation);
      for (int i = 0; i < tp.p; ++i)
        for (int j = 0; j < tp.p; ++j)
          out << g17(h) << ',' << i + 1 << ',' << j + 1 << ',' << g17(g(i, j))
              << '\n';
    }
    write_text(cfg.out, out.str());
  } else if (cfg.what == "sigma_p") {
    const AsymptoticTable table = AsymptoticTable::load_or_build(cache, tp);
    std::ostringstream out;
    out << "h,i,j,sigma_p\n";
    for (int k = 0; k < tp.h_count; ++k) {
      const double h = tp.h_at(k);
      const Eigen::MatrixXd s = table.sigma_p_at(h);
      for (int i = 0; i < tp.p; ++i)
        for (int j = 0; j < tp.p; ++j)
          out << g17(h) << ',' << i + 1 << ',' << j + 1 << ',' << g17(s(i, j))
              << '\n';
    }
    if (!cfg.out.empty()) write_text(cfg.out, out.str());
    std::cout << "table cached in " << cache.string() << "\n";
  } else if (cfg.what == "clt") {
    const AsymptoticTable table = AsymptoticTable::load_or_build(cache, tp);
    std::ostringstream out;
    out << "h,estimator,variance\n";
    for (int k = 0; k < tp.h_count; ++k) {
      const double h = tp.h_at(k);
      for (EstimatorKind kind : {EstimatorKind::kIr, EstimatorKind::kQv,
                                 EstimatorKind::kIr2, EstimatorKind::kQv2}) {
        out << g17(h) << ',' << estimator_name(kind) << ','
            << g17(clt_variance(kind, h, tp.p, table)) << '\n';
      }
    }
    write_text(cfg.out, out.str());
  } else {
    throw Error("unknown --what '" + cfg.what +
                "' (expected lambda2|rho2|sigma_p|gamma|clt)");
  }
  if (!cfg.out.empty()) {
    write_sidecar(cfg.out, cfg);
    std::cout << "wrote " << cfg.out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact simulation and local Hurst estimation for "
               "multifractional Brownian motion"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  app.add_option("--threads", cfg.threads, "worker thread count (0 = all cores)");
  app.add_option("--table-cache", cfg.table_cache,
                 "asymptotic table cache directory (default: "
                 "$HURSTLAB_TABLE_CACHE or ./table_cache)");
  app.set_version_flag("--version", std::string(kVersion));

  AsymptoticTableParams tp;

  CLI::App* sim = app.add_subcommand("simulate", "draw one exact path");
  sim->add_option("--case", cfg.case_name, "H1|H2|H3|H4|C15|C06")->required();
  sim->add_option("--n", cfg.n, "lattice size")->required();
  sim->add_option("--seed", cfg.master_seed, "master seed");
  sim->add_option("--field", cfg.field, "random Hurst trajectory index");
  sim->add_option("--out", cfg.out, "output CSV")->required();

  CLI::App* est = app.add_subcommand("estimate", "estimate H(t) from a path CSV");
  est->add_option("--input", cfg.input, "path CSV from simulate")->required();
  est->add_option("--estimator", cfg.estimator, "ir|qv|ir2|qv2")->required();
  est->add_option("--alpha", cfg.alpha, "bandwidth exponent in (0,1)");
  est->add_option("--p", cfg.p, "number of dilatations");
  est->add_option("--t-grid", cfg.t_grid, "'paper' or comma-separated t list");
  est->add_option("--out", cfg.out, "output CSV")->required();

  CLI::App* mise = app.add_subcommand("mise", "Monte Carlo sqrt-MISE study");
  mise->add_option("--case", cfg.case_name, "H1|H2|H3|H4|C15|C06")->required();
  mise->add_option("--n", cfg.n, "lattice size");
  mise->add_option("--alpha", cfg.alpha, "bandwidth exponent");
  mise->add_option("--estimator", cfg.estimator, "ir|qv|ir2|qv2")->required();
  mise->add_option("--reps", cfg.reps, "replications per field");
  mise->add_option("--n-fields", cfg.n_fields, "random Hurst trajectories");
  mise->add_option("--seed", cfg.master_seed, "master seed");
  std::string preset;
  mise->add_option("--preset", preset, "desk|paper scale defaults")
      ->check(CLI::IsMember({"desk", "paper"}));
  mise->add_option("--out", cfg.out, "output report JSON")->required();

  CLI::App* tab = app.add_subcommand("tables", "asymptotic constant tables");
  tab->add_option("--what", cfg.what, "lambda2|rho2|sigma_p|gamma|clt")
      ->required();
  tab->add_option("--out", cfg.out, "output CSV");
  tab->add_option("--h-lo", tp.h_lo, "grid start");
  tab->add_option("--h-step", tp.h_step, "grid step");
  tab->add_option("--h-count", tp.h_count, "grid size");
  tab->add_option("--p", tp.p, "dilatations");
  tab->add_option("--K", tp.K, "lag truncation of the psi-covariance sums");
  tab->add_option("--samples", tp.samples, "Monte Carlo draws per lag");
  tab->add_option("--table-seed", tp.seed, "Monte Carlo seed");
  tab->add_option("--truncation", tp.truncation, "Gamma series truncation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

#ifdef _OPENMP
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif

  try {
    if (sim->parsed()) {
      cfg.subcommand = "simulate";
      return cmd_simulate(cfg);
    }
    if (est->parsed()) {
      cfg.subcommand = "estimate";
      return cmd_estimate(cfg);
    }
    if (mise->parsed()) {
      cfg.subcommand = "mise";
      cfg.preset = preset;
      if (preset == "desk") {
        if (mise->count("--n") == 0) cfg.n = 1024;
        if (mise->count("--reps") == 0) cfg.reps = 50;
        if (mise->count("--n-fields") == 0) cfg.n_fields = 10;
      } else if (preset == "paper") {
        if (mise->count("--n") == 0) cfg.n = 6000;
        if (mise->count("--reps") == 0) cfg.reps = 100;
        if (mise->count("--n-fields") == 0) cfg.n_fields = 50;
      }
      return cmd_mise(cfg);
    }
    cfg.subcommand = "tables";
    return cmd_tables(cfg, tp);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
