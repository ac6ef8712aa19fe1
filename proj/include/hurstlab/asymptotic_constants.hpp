#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hurstlab/fractional_kernels.hpp"
#include "hurstlab/rng.hpp"

namespace hurstlab {

enum class EstimatorKind { kIr, kQv, kIr2, kQv2 };

std::string estimator_name(EstimatorKind kind);
EstimatorKind estimator_from_name(const std::string& name);

// Limiting covariance of the normalized dilated quadratic variations:
//   Gamma(i1,i2) = 2 / (i1 i2)^{2H} * sum_j (num_j / den)^2,
// num_j and den being the double filter sums over the base coefficients.
// The series decays like j^{4(H-m)}; it is truncated at |j| <= truncation and
// the estimated tail is reported through trunc_err when non-null.
Eigen::MatrixXd gamma_matrix(HurstValue h, int p, const Filter& f,
                             int truncation = 100, double* trunc_err = nullptr);

struct McEstimate {
  double value = 0.0;
  double se = 0.0;
};

// sum_{|k| <= K} Cov(psi(V_i(0), V_i(1)), psi(V_j(k), V_j(k+1))) for the
// i- and j-dilated second-difference variations of FBM(h) on the unit
// lattice. Each lag is simulated exactly from its 4x4 Gaussian covariance;
// the exact psi means (Lambda2 values) are subtracted.
McEstimate sigma_ij(HurstValue h, int i, int j, int K, long samples,
                    const SeedLineage& seed);

struct SigmaBuild {
  Eigen::MatrixXd sigma;    // raw sums of psi covariances
  Eigen::MatrixXd se;       // Monte Carlo standard errors
  Eigen::MatrixXd sigma_p;  // scaled by the inverse-function derivatives
  bool floored = false;     // eigenvalue flooring kicked in
};

SigmaBuild build_sigma_p(HurstValue h, int p, int K, long samples,
                         const SeedLineage& seed);

// The matrix Sigma^(p)(h) entering the pooled ratio estimator and its CLT:
// Sigma_ij = sigma_ij / (Lambda2_i'(h) Lambda2_j'(h)), symmetrized and
// eigenvalue-floored at 1e-8 * trace.
Eigen::MatrixXd sigma_p_matrix(HurstValue h, int p, int K, long samples,
                               const SeedLineage& seed);

struct AsymptoticTableParams {
  double h_lo = 0.01;
  double h_step = 0.01;
  int h_count = 99;
  int p = 5;
  int K = 20;
  long samples = 2000000;
  std::uint64_t seed = 20240601;
  int truncation = 100;

  bool operator==(const AsymptoticTableParams&) const = default;
  double h_at(int k) const { return h_lo + k * h_step; }
};

// Precomputed Sigma^(p) and Gamma over a Hurst grid, cached on disk
// (sigma_p.csv, gamma.csv, meta.json) so estimator runs never re-run the
// Monte Carlo. Lookups interpolate linearly between grid nodes.
class AsymptoticTable {
 public:
  static AsymptoticTable build(const AsymptoticTableParams& params);
  static AsymptoticTable load(const std::filesystem::path& dir);
  // Loads when the cached metadata matches params exactly, else rebuilds and
  // overwrites the cache.
  static AsymptoticTable load_or_build(const std::filesystem::path& dir,
                                       const AsymptoticTableParams& params);
  void save(const std::filesystem::path& dir) const;

  const AsymptoticTableParams& params() const { return params_; }
  double h_min() const { return params_.h_at(0); }
  double h_max() const { return params_.h_at(params_.h_count - 1); }

  // Entrywise linear interpolation; h outside the grid is clamped to the
  // nearest node (callers wanting strict bounds check contains() first).
  Eigen::MatrixXd sigma_p_at(double h) const;
  Eigen::MatrixXd gamma_at(double h) const;
  bool contains(double h) const { return h >= h_min() && h <= h_max(); }

  const std::vector<int>& floored_nodes() const { return floored_nodes_; }

 private:
  AsymptoticTableParams params_;
  std::vector<Eigen::MatrixXd> sigma_;
  std::vector<Eigen::MatrixXd> sigma_se_;
  std::vector<Eigen::MatrixXd> sigma_p_;
  std::vector<Eigen::MatrixXd> gamma_;
  std::vector<double> gamma_trunc_err_;
  std::vector<int> floored_nodes_;

  friend struct AsymptoticTableIo;
};

// Scaling-limit variance V of sqrt(2 n^{1-alpha}) (H_hat - H) for the given
// estimator, evaluated from the table (interpolated in h between nodes).
double clt_variance(EstimatorKind kind, double h, int p, const AsymptoticTable& table);

// Same variance from explicitly supplied matrices: the ratio estimators read
// sigma_p, the variation estimators read gamma (the other argument may be
// empty).
double clt_variance(EstimatorKind kind, const Eigen::MatrixXd& sigma_p,
                    const Eigen::MatrixXd& gamma, int p);

// Predicted standard error sqrt(V / (2 n^{1-alpha})). Throws OutOfTableRange
// when h leaves the table grid.
double clt_stderr(EstimatorKind kind, HurstValue h, int n, double alpha, int p,
                  const AsymptoticTable& table);

// The regression contrast for the log-variation slope: A_i = log i - mean.
Eigen::VectorXd qv_contrast(int p);

}  // namespace hurstlab
