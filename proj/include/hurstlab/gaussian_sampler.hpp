#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hurstlab/mbm_covariance.hpp"
#include "hurstlab/rng.hpp"

namespace hurstlab {

struct PathProvenance {
  std::string spec_id;
  SeedLineage seed;
};

// Observations Z(1/n), ..., Z((n-1)/n); values[k] holds Z((k+1)/n).
struct SampledPath {
  std::vector<double> values;
  int n = 0;
  PathProvenance provenance;
};

// Lower Cholesky factor of a covariance matrix, kept so one factorization can
// serve many replications. If plain Cholesky fails, a diagonal jitter of
// 1e-12 * max(diag) is added and escalated tenfold up to 1e-8 * max(diag);
// every attempt is recorded.
class CholeskyFactor {
 public:
  static CholeskyFactor compute(const Eigen::MatrixXd& cov);

  SampledPath sample(const SeedLineage& seed, std::string spec_id = "custom") const;

  int dim() const { return static_cast<int>(matrix_.rows()); }
  double jitter() const { return jitter_; }
  const std::vector<double>& jitter_attempts() const { return attempts_; }
  // L * xi for an externally supplied standard normal vector.
  Eigen::VectorXd apply(const Eigen::VectorXd& xi) const;

 private:
  CholeskyFactor() = default;
  Eigen::MatrixXd matrix_;  // factor in the lower triangle, junk above
  double jitter_ = 0.0;
  std::vector<double> attempts_;
};

// One-shot convenience: factor + single draw.
SampledPath sample_gaussian_path(const Eigen::MatrixXd& cov, const SeedLineage& seed);

// Fractional Brownian motion covariance on the k/n lattice and exact draws
// from it.
Eigen::MatrixXd fbm_covariance_matrix(HurstValue h, int n);
SampledPath sample_fbm(HurstValue h, int n, const SeedLineage& seed);

// The Hurst-function families used by the reproduction study. H1..H4 are
// closed forms; the last two are random trajectories sampled on a fixed
// 6000-point grid, then affinely rescaled into a safe band:
//   IntegratedFbm(h): running integral of an FBM(h) path, range [0.1, 0.9];
//   Fbm(eta):         an FBM(eta) path itself, range [0.05, 0.55].
enum class HurstCase { kH1, kH2, kH3, kH4, kIntegratedFbm, kFbm };

inline constexpr int kHurstFieldGrid = 6000;

HurstField make_hurst_field(HurstCase kind, double param = 0.0,
                            const SeedLineage& seed = {});

// Shared trajectory-to-field conversion (integration, rescaling, wrapping);
// exposed so batch runners can draw many fields from one FBM factor.
HurstField hurst_field_from_fbm(const SampledPath& fbm_path, bool integrate,
                                double lo, double hi, double smoothness);

}  // namespace hurstlab
