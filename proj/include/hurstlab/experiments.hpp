#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hurstlab/asymptotic_constants.hpp"
#include "hurstlab/estimators.hpp"
#include "hurstlab/gaussian_sampler.hpp"

namespace hurstlab {

// The six Hurst scenarios of the replication study: four closed forms and two
// random families (integrated FBM in C^{1.5-}, plain FBM in C^{0.6-}).
enum class MiseCase { kH1, kH2, kH3, kH4, kC15, kC06 };

std::string mise_case_name(MiseCase c);
MiseCase mise_case_from_name(const std::string& name);
bool mise_case_is_random(MiseCase c);

// The fields entering a study: one deterministic field for H1..H4, n_fields
// random trajectories for C15/C06 drawn from a single FBM factor on the
// 6000-point grid (field f uses replication index f of the hurst-field
// stream, so field sets extend consistently as n_fields grows).
std::vector<HurstField> make_case_fields(MiseCase c, int n_fields,
                                         std::uint64_t master_seed);

// Just field number field_index, bitwise equal to the corresponding entry of
// make_case_fields (one-shot runs need not draw the whole set).
HurstField make_case_field(MiseCase c, int field_index,
                           std::uint64_t master_seed);

// {n^-alpha, n^-alpha + 0.01, ...} capped at min(1 - n^-alpha, n^-alpha + 0.99).
// May be empty when the cap falls below the start.
std::vector<double> paper_t_grid(int n, double alpha);

struct MiseParams {
  MiseCase mise_case = MiseCase::kH1;
  int n = 1024;
  double alpha = 0.3;
  EstimatorKind estimator = EstimatorKind::kQv;
  int p = 5;
  int reps = 50;
  int n_fields = 10;  // only the random cases use this
  std::uint64_t master_seed = 1;
};

struct MiseReport {
  std::string case_name;
  int n = 0;
  double alpha = 0.0;
  std::string estimator;
  int p = 0;
  int reps = 0;
  int n_fields = 1;
  std::uint64_t master_seed = 0;
  std::vector<double> ts;
  // Signed mean error per grid point for the deterministic cases; the RMS of
  // per-field mean errors for the random ones. Either way
  // mise == mean_t(per_t_bias^2 + per_t_var) holds exactly.
  std::vector<double> per_t_bias;
  std::vector<double> per_t_var;
  double mise = 0.0;
  double sqrt_mise = 0.0;
  double mc_se = 0.0;  // Monte Carlo standard error of sqrt_mise
  long n_invalid = 0;
  double runtime_seconds = 0.0;

  std::string to_json(int indent = 2) const;
};

MiseReport run_mise(const MiseParams& params,
                    const AsymptoticTable* table = nullptr);

// Evaluates every (alpha, estimator) cell of one (case, n) block on shared
// paths, paying the covariance factorization once per field instead of once
// per cell. Reports come back alpha-major in the given order. The table may
// be null when no pooled ratio estimator is requested.
std::vector<MiseReport> run_mise_block(
    MiseCase mise_case, int n, const std::vector<double>& alphas,
    const std::vector<EstimatorKind>& estimators, int p, int reps,
    int n_fields, std::uint64_t master_seed,
    const AsymptoticTable* table = nullptr);

// The published sqrt-MISE for a study cell, when that cell appears in the
// reference tables (n in {2000, 6000}, alpha in {0.2, 0.3, 0.4, 0.5}).
std::optional<double> reference_sqrt_mise(MiseCase c, int n, double alpha,
                                          EstimatorKind estimator);

struct TablesParams {
  std::vector<int> ns = {2000, 6000};
  std::vector<double> alphas = {0.2, 0.3, 0.4, 0.5};
  std::vector<EstimatorKind> estimators = {EstimatorKind::kQv,
                                           EstimatorKind::kQv2,
                                           EstimatorKind::kIr,
                                           EstimatorKind::kIr2};
  std::vector<MiseCase> cases = {MiseCase::kH1,  MiseCase::kH2,
                                 MiseCase::kH3,  MiseCase::kH4,
                                 MiseCase::kC15, MiseCase::kC06};
  int p = 5;
  int reps = 100;
  int n_fields = 50;
  std::uint64_t master_seed = 1;

  static TablesParams paper();  // the full published grid
  static TablesParams desk();   // n in {512, 1024}, 50 reps, 10 fields
  std::size_t row_count() const;
};

struct TableRow {
  MiseReport report;
  std::optional<double> reference;
};

struct TablesResult {
  TablesParams params;
  std::vector<TableRow> rows;  // case, n, estimator, alpha — slowest to fastest

  std::string to_json(int indent = 2) const;
};

TablesResult reproduce_tables(const TablesParams& params,
                              const AsymptoticTable* table = nullptr);

void write_tables_csv(const TablesResult& result,
                      const std::filesystem::path& csv_path);

}  // namespace hurstlab
