#include "hurstlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "hurstlab/errors.hpp"
#include "hurstlab/version.hpp"

namespace hurstlab {
namespace {

using nlohmann::json;

struct CaseRecipe {
  bool random = false;
  HurstCase kind = HurstCase::kH1;
  double base_h = 0.0;   // FBM parameter of the random trajectory
  bool integrate = false;
  double lo = 0.0, hi = 0.0, smoothness = 0.0;
};

CaseRecipe recipe_for(MiseCase c) {
  switch (c) {
    case MiseCase::kH1:
      return {false, HurstCase::kH1, 0, false, 0, 0, 0};
    case MiseCase::kH2:
      return {false, HurstCase::kH2, 0, false, 0, 0, 0};
    case MiseCase::kH3:
      return {false, HurstCase::kH3, 0, false, 0, 0, 0};
    case MiseCase::kH4:
      return {false, HurstCase::kH4, 0, false, 0, 0, 0};
    case MiseCase::kC15:
      return {true, HurstCase::kIntegratedFbm, 0.5, true, 0.1, 0.9, 1.5};
    case MiseCase::kC06:
      return {true, HurstCase::kFbm, 0.6, false, 0.05, 0.55, 0.6};
  }
  throw DomainError("unknown study case");
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json report_json(const MiseReport& r) {
  return json{{"case", r.case_name},
              {"n", r.n},
              {"alpha", r.alpha},
              {"estimator", r.estimator},
              {"p", r.p},
              {"reps", r.reps},
              {"n_fields", r.n_fields},
              {"master_seed", r.master_seed},
              {"t", r.ts},
              {"per_t_bias", r.per_t_bias},
              {"per_t_var", r.per_t_var},
              {"mise", r.mise},
              {"sqrt_mise", r.sqrt_mise},
              {"mc_se", r.mc_se},
              {"n_invalid", r.n_invalid},
              {"runtime", r.runtime_seconds},
              {"version", kVersion}};
}

}  // namespace

std::string mise_case_name(MiseCase c) {
  switch (c) {
    case MiseCase::kH1: return "H1";
    case MiseCase::kH2: return "H2";
    case MiseCase::kH3: return "H3";
    case MiseCase::kH4: return "H4";
    case MiseCase::kC15: return "C15";
    case MiseCase::kC06: return "C06";
  }
  throw DomainError("unknown study case");
}

MiseCase mise_case_from_name(const std::string& name) {
  for (MiseCase c : {MiseCase::kH1, MiseCase::kH2, MiseCase::kH3, MiseCase::kH4,
                     MiseCase::kC15, MiseCase::kC06}) {
    if (mise_case_name(c) == name) return c;
  }
  throw DomainError("unknown study case '" + name +
                    "' (expected H1..H4, C15 or C06)");
}

bool mise_case_is_random(MiseCase c) { return recipe_for(c).random; }

std::vector<HurstField> make_case_fields(MiseCase c, int n_fields,
                                         std::uint64_t master_seed) {
  const CaseRecipe rec = recipe_for(c);
  if (!rec.random) {
    return {make_hurst_field(rec.kind)};
  }
  if (n_fields < 1) throw DomainError("random cases need n_fields >= 1");
  // One factor serves all trajectories; only the draws differ.
  const Eigen::MatrixXd cov =
      fbm_covariance_matrix(HurstValue(rec.base_h), kHurstFieldGrid);
  const CholeskyFactor factor = CholeskyFactor::compute(cov);
  std::vector<HurstField> fields;
  fields.reserve(n_fields);
  for (int f = 0; f < n_fields; ++f) {
    const SeedLineage seed{master_seed, static_cast<std::uint64_t>(f),
                           RandomStream::kHurstField};
    const SampledPath path = factor.sample(seed, "hurst-field");
    fields.push_back(hurst_field_from_fbm(path, rec.integrate, rec.lo, rec.hi,
                                          rec.smoothness));
  }
  return fields;
}

HurstField make_case_field(MiseCase c, int field_index,
                           std::uint64_t master_seed) {
  const CaseRecipe rec = recipe_for(c);
  if (!rec.random) return make_hurst_field(rec.kind);
  if (field_index < 0) throw DomainError("field_index must be >= 0");
  const Eigen::MatrixXd cov =
      fbm_covariance_matrix(HurstValue(rec.base_h), kHurstFieldGrid);
  const CholeskyFactor factor = CholeskyFactor::compute(cov);
  const SeedLineage seed{master_seed, static_cast<std::uint64_t>(field_index),
                         RandomStream::kHurstField};
  return hurst_field_from_fbm(factor.sample(seed, "hurst-field"), rec.integrate,
                              rec.lo, rec.hi, rec.smoothness);
}

std::vector<double> paper_t_grid(int n, double alpha) {
  const double r = std::pow(static_cast<double>(n), -alpha);
  const double cap = std::min(1.0 - r, r + 0.99);
  std::vector<double> ts;
  for (int k = 0; k < 100; ++k) {
    const double t = r + 0.01 * k;
    if (t > cap + 1e-12) break;
    ts.push_back(t);
  }
  return ts;
}

std::vector<MiseReport> run_mise_block(
    MiseCase mise_case, int n, const std::vector<double>& alphas,
    const std::vector<EstimatorKind>& estimators, int p, int reps,
    int n_fields, std::uint64_t master_seed, const AsymptoticTable* table) {
  const auto started = std::chrono::steady_clock::now();
  if (reps < 2) throw DomainError("the study needs at least 2 replications");
  if (alphas.empty() || estimators.empty()) {
    throw DomainError("empty alpha or estimator list");
  }
  const bool needs_table =
      std::any_of(estimators.begin(), estimators.end(),
                  [](EstimatorKind e) { return e == EstimatorKind::kIr2; });
  if (needs_table && !table) {
    throw DomainError("the pooled ratio estimator needs the asymptotic table");
  }

  const CaseRecipe rec = recipe_for(mise_case);
  const int fields_used = rec.random ? n_fields : 1;
  const std::vector<HurstField> fields =
      make_case_fields(mise_case, fields_used, master_seed);
  const std::string case_id = mise_case_name(mise_case);

  const int n_alpha = static_cast<int>(alphas.size());
  const int n_est = static_cast<int>(estimators.size());
  std::vector<std::vector<double>> grids(n_alpha);
  std::vector<EstimatorConfig> configs;
  configs.reserve(static_cast<std::size_t>(n_alpha) * n_est);
  for (int a = 0; a < n_alpha; ++a) {
    grids[a] = paper_t_grid(n, alphas[a]);
    if (grids[a].empty()) {
      throw DomainError("empty evaluation grid for alpha=" +
                        std::to_string(alphas[a]));
    }
    for (int e = 0; e < n_est; ++e) {
      configs.push_back(make_estimator_config(estimators[e], alphas[a], p,
                                              second_difference_filter()));
    }
  }
  std::vector<std::size_t> cell_offset(n_alpha * n_est + 1, 0);
  for (int a = 0; a < n_alpha; ++a) {
    for (int e = 0; e < n_est; ++e) {
      cell_offset[a * n_est + e + 1] =
          cell_offset[a * n_est + e] + grids[a].size();
    }
  }
  const std::size_t per_rep = cell_offset.back();

  // Accumulators per cell: per (field, t) first two moments and counts, plus
  // the per-replication mean squared errors behind the Monte Carlo SE.
  struct CellAcc {
    std::vector<double> s1, s2;  // indexed field * n_t + t
    std::vector<long> cnt;
    std::vector<double> rep_mse;
    std::vector<long> rep_cnt;
    long invalid = 0;
  };
  std::vector<CellAcc> acc(n_alpha * n_est);
  for (int c = 0; c < n_alpha * n_est; ++c) {
    const std::size_t n_t = grids[c / n_est].size();
    acc[c].s1.assign(fields_used * n_t, 0.0);
    acc[c].s2.assign(fields_used * n_t, 0.0);
    acc[c].cnt.assign(fields_used * n_t, 0);
    acc[c].rep_mse.reserve(static_cast<std::size_t>(fields_used) * reps);
    acc[c].rep_cnt.reserve(static_cast<std::size_t>(fields_used) * reps);
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> slots(static_cast<std::size_t>(reps) * per_rep);

  for (int f = 0; f < fields_used; ++f) {
    const MbmSpec spec{1.0, 1.0, fields[f], {}, case_id};
    const Eigen::MatrixXd cov = covariance_matrix(spec, n);
    const CholeskyFactor factor = CholeskyFactor::compute(cov);

    std::fill(slots.begin(), slots.end(), nan);
    std::vector<std::exception_ptr> failures(reps);
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < reps; ++r) {
      const std::uint64_t replication =
          rec.random ? static_cast<std::uint64_t>(f) * reps + r
                     : static_cast<std::uint64_t>(r);
      const SeedLineage seed{master_seed, replication, RandomStream::kPath};
      try {
        const SampledPath path = factor.sample(seed, case_id);
        double* out = slots.data() + static_cast<std::size_t>(r) * per_rep;
        for (int a = 0; a < n_alpha; ++a) {
          for (int e = 0; e < n_est; ++e) {
            const EstimateCurve curve =
                estimate(path, configs[a * n_est + e], grids[a], table);
            double* cell = out + cell_offset[a * n_est + e];
            for (std::size_t t = 0; t < grids[a].size(); ++t) {
              cell[t] = curve.valid[t] ? curve.h_hat[t] : nan;
            }
          }
        }
      } catch (const std::exception& ex) {
        failures[r] = std::make_exception_ptr(Error(
            "replication failed (master_seed=" + std::to_string(master_seed) +
            ", replication=" + std::to_string(replication) +
            ", stream=path): " + ex.what()));
      }
    }
    for (int r = 0; r < reps; ++r) {
      if (failures[r]) std::rethrow_exception(failures[r]);
    }

    // Deterministic reduction in replication order.
    for (int c = 0; c < n_alpha * n_est; ++c) {
      const std::size_t n_t = grids[c / n_est].size();
      std::vector<double> h_true(n_t);
      for (std::size_t t = 0; t < n_t; ++t) h_true[t] = fields[f](grids[c / n_est][t]);
      for (int r = 0; r < reps; ++r) {
        const double* cell =
            slots.data() + static_cast<std::size_t>(r) * per_rep + cell_offset[c];
        double sq_err = 0.0;
        long n_valid = 0;
        for (std::size_t t = 0; t < n_t; ++t) {
          const double h = cell[t];
          if (std::isnan(h)) {
            ++acc[c].invalid;
            continue;
          }
          const std::size_t ft = static_cast<std::size_t>(f) * n_t + t;
          acc[c].s1[ft] += h;
          acc[c].s2[ft] += h * h;
          ++acc[c].cnt[ft];
          const double err = h - h_true[t];
          sq_err += err * err;
          ++n_valid;
        }
        acc[c].rep_mse.push_back(n_valid > 0 ? sq_err / n_valid : nan);
        acc[c].rep_cnt.push_back(n_valid);
      }
    }
  }

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();

  std::vector<MiseReport> reports;
  reports.reserve(n_alpha * n_est);
  for (int a = 0; a < n_alpha; ++a) {
    for (int e = 0; e < n_est; ++e) {
      const int c = a * n_est + e;
      const std::size_t n_t = grids[a].size();
      MiseReport rep;
      rep.case_name = case_id;
      rep.n = n;
      rep.alpha = alphas[a];
      rep.estimator = estimator_name(estimators[e]);
      rep.p = p;
      rep.reps = reps;
      rep.n_fields = fields_used;
      rep.master_seed = master_seed;
      rep.ts = grids[a];
      rep.per_t_bias.resize(n_t);
      rep.per_t_var.resize(n_t);
      rep.n_invalid = acc[c].invalid;
      rep.runtime_seconds = elapsed;

      double mise = 0.0;
      for (std::size_t t = 0; t < n_t; ++t) {
        double bias_sq = 0.0, var = 0.0, bias_signed = 0.0;
        for (int f = 0; f < fields_used; ++f) {
          const std::size_t ft = static_cast<std::size_t>(f) * n_t + t;
          const long cnt = acc[c].cnt[ft];
          if (cnt == 0) {
            throw Error("every replication failed at t=" +
                        std::to_string(grids[a][t]) + " for " + rep.estimator);
          }
          const double mean = acc[c].s1[ft] / cnt;
          const double b = mean - fields[f](grids[a][t]);
          bias_signed = b;
          bias_sq += b * b;
          var += acc[c].s2[ft] / cnt - mean * mean;
        }
        bias_sq /= fields_used;
        var /= fields_used;
        rep.per_t_bias[t] =
            fields_used == 1 ? bias_signed : std::sqrt(bias_sq);
        rep.per_t_var[t] = var;
        mise += bias_sq + var;
      }
      mise /= static_cast<double>(n_t);
      rep.mise = mise;
      rep.sqrt_mise = std::sqrt(mise);

      // SE of the MISE from the spread of per-replication mean squared
      // errors, delta-method mapped through the square root.
      double m1 = 0.0, m2 = 0.0;
      long n_rep = 0;
      for (double v : acc[c].rep_mse) {
        if (std::isnan(v)) continue;
        m1 += v;
        m2 += v * v;
        ++n_rep;
      }
      if (n_rep >= 2) {
        m1 /= n_rep;
        m2 /= n_rep;
        const double sample_var =
            std::max(0.0, m2 - m1 * m1) * n_rep / (n_rep - 1.0);
        const double se_mise = std::sqrt(sample_var / n_rep);
        rep.mc_se = rep.sqrt_mise > 0.0 ? se_mise / (2.0 * rep.sqrt_mise) : 0.0;
      }
      reports.push_back(std::move(rep));
    }
  }
  return reports;
}

MiseReport run_mise(const MiseParams& params, const AsymptoticTable* table) {
  return run_mise_block(params.mise_case, params.n, {params.alpha},
                        {params.estimator}, params.p, params.reps,
                        params.n_fields, params.master_seed, table)
      .front();
}

std::string MiseReport::to_json(int indent) const {
  return report_json(*this).dump(indent);
}

std::optional<double> reference_sqrt_mise(MiseCase c, int n, double alpha,
                                          EstimatorKind estimator) {
  // Published values, indexed [case][n][estimator][alpha] with the row order
  // QV, QV2, IR, IR2 and columns alpha = 0.2, 0.3, 0.4, 0.5.
  static constexpr double kTable[6][2][4][4] = {
      {{{0.044, 0.055, 0.073, 0.104},
        {0.041, 0.051, 0.069, 0.096},
        {0.111, 0.137, 0.186, 0.260},
        {0.061, 0.077, 0.106, 0.145}},
       {{0.026, 0.035, 0.053, 0.079},
        {0.025, 0.033, 0.050, 0.074},
        {0.065, 0.091, 0.128, 0.202},
        {0.037, 0.049, 0.076, 0.115}}},
      {{{0.170, 0.076, 0.075, 0.101},
        {0.170, 0.073, 0.072, 0.096},
        {0.115, 0.143, 0.184, 0.247},
        {0.059, 0.071, 0.098, 0.135}},
       {{0.115, 0.045, 0.051, 0.074},
        {0.114, 0.044, 0.048, 0.070},
        {0.070, 0.094, 0.134, 0.195},
        {0.036, 0.046, 0.069, 0.103}}},
      {{{0.362, 0.125, 0.084, 0.102},
        {0.362, 0.123, 0.080, 0.096},
        {0.129, 0.133, 0.171, 0.229},
        {0.093, 0.071, 0.091, 0.124}},
       {{0.260, 0.078, 0.056, 0.077},
        {0.260, 0.077, 0.052, 0.072},
        {0.078, 0.089, 0.125, 0.180},
        {0.057, 0.047, 0.065, 0.097}}},
      {{{0.321, 0.165, 0.121, 0.120},
        {0.320, 0.164, 0.117, 0.112},
        {0.178, 0.138, 0.160, 0.210},
        {0.165, 0.098, 0.091, 0.112}},
       {{0.251, 0.136, 0.074, 0.084},
        {0.251, 0.135, 0.071, 0.078},
        {0.158, 0.088, 0.115, 0.164},
        {0.148, 0.062, 0.067, 0.091}}},
      {{{0.261, 0.113, 0.088, 0.103},
        {0.261, 0.112, 0.085, 0.098},
        {0.139, 0.141, 0.175, 0.233},
        {0.098, 0.077, 0.093, 0.128}},
       {{0.164, 0.067, 0.055, 0.074},
        {0.164, 0.066, 0.053, 0.070},
        {0.084, 0.094, 0.131, 0.186},
        {0.054, 0.047, 0.066, 0.098}}},
      {{{0.140, 0.087, 0.083, 0.096},
        {0.140, 0.086, 0.081, 0.094},
        {0.148, 0.156, 0.192, 0.249},
        {0.088, 0.078, 0.096, 0.135}},
       {{0.129, 0.067, 0.057, 0.074},
        {0.130, 0.067, 0.056, 0.071},
        {0.096, 0.106, 0.143, 0.201},
        {0.066, 0.052, 0.067, 0.103}}}};

  int n_idx;
  if (n == 2000) {
    n_idx = 0;
  } else if (n == 6000) {
    n_idx = 1;
  } else {
    return std::nullopt;
  }
  int a_idx = -1;
  const double alphas[] = {0.2, 0.3, 0.4, 0.5};
  for (int k = 0; k < 4; ++k) {
    if (std::abs(alpha - alphas[k]) < 1e-9) a_idx = k;
  }
  if (a_idx < 0) return std::nullopt;
  int e_idx;
  switch (estimator) {
    case EstimatorKind::kQv: e_idx = 0; break;
    case EstimatorKind::kQv2: e_idx = 1; break;
    case EstimatorKind::kIr: e_idx = 2; break;
    case EstimatorKind::kIr2: e_idx = 3; break;
    default: return std::nullopt;
  }
  return kTable[static_cast<int>(c)][n_idx][e_idx][a_idx];
}

TablesParams TablesParams::paper() { return TablesParams{}; }

TablesParams TablesParams::desk() {
  TablesParams p;
  p.ns = {512, 1024};
  p.reps = 50;
  p.n_fields = 10;
  return p;
}

std::size_t TablesParams::row_count() const {
  return ns.size() * alphas.size() * estimators.size() * cases.size();
}

TablesResult reproduce_tables(const TablesParams& params,
                              const AsymptoticTable* table) {
  TablesResult result;
  result.params = params;
  result.rows.reserve(params.row_count());
  const int n_est = static_cast<int>(params.estimators.size());
  for (MiseCase c : params.cases) {
    for (int n : params.ns) {
      std::vector<MiseReport> block = run_mise_block(
          c, n, params.alphas, params.estimators, params.p, params.reps,
          params.n_fields, params.master_seed, table);
      // Blocks come back alpha-major; the tables list estimators first.
      for (int e = 0; e < n_est; ++e) {
        for (std::size_t a = 0; a < params.alphas.size(); ++a) {
          TableRow row;
          row.report = std::move(block[a * n_est + e]);
          row.reference = reference_sqrt_mise(c, n, params.alphas[a],
                                              params.estimators[e]);
          result.rows.push_back(std::move(row));
        }
      }
    }
  }
  return result;
}

std::string TablesResult::to_json(int indent) const {
  json rows = json::array();
  for (const TableRow& row : this->rows) {
    json r = report_json(row.report);
    r["reference"] = row.reference ? json(*row.reference) : json();
    r["diff"] = row.reference ? json(row.report.sqrt_mise - *row.reference)
                              : json();
    rows.push_back(std::move(r));
  }
  json doc{{"rows", std::move(rows)},
           {"p", params.p},
           {"reps", params.reps},
           {"n_fields", params.n_fields},
           {"master_seed", params.master_seed},
           {"version", kVersion}};
  return doc.dump(indent);
}

void write_tables_csv(const TablesResult& result,
                      const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw Error("cannot open " + csv_path.string() + " for writing");
  out << "case,n,estimator,alpha,p,reps,n_fields,master_seed,sqrt_mise,mc_se,"
         "reference,diff\n";
  for (const TableRow& row : result.rows) {
    const MiseReport& r = row.report;
    out << r.case_name << ',' << r.n << ',' << r.estimator << ','
        << format_g17(r.alpha) << ',' << r.p << ',' << r.reps << ','
        << r.n_fields << ',' << r.master_seed << ','
        << format_g17(r.sqrt_mise) << ',' << format_g17(r.mc_se) << ',';
    if (row.reference) {
      out << format_g17(*row.reference) << ','
          << format_g17(r.sqrt_mise - *row.reference);
    } else {
      out << ',';
    }
    out << '\n';
  }
  if (!out.good()) throw Error("failed writing " + csv_path.string());
}

}  // namespace hurstlab
