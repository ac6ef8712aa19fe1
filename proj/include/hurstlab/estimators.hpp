#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hurstlab/asymptotic_constants.hpp"
#include "hurstlab/filters.hpp"
#include "hurstlab/gaussian_sampler.hpp"

namespace hurstlab {

struct EstimatorConfig {
  double alpha = 0.3;     // localization exponent; window radius is n^{-alpha}
  int p = 5;              // number of dilatations for the pooled estimators
  EstimatorKind estimator = EstimatorKind::kIr;
  Filter filter = second_difference_filter();
};

// Validates ranges (alpha in (0,1), 1 <= p <= 10) and, for the ratio-based
// estimators, that the filter is the second-difference one their calibration
// tables assume.
EstimatorConfig make_estimator_config(EstimatorKind estimator, double alpha,
                                      int p, Filter f = second_difference_filter());

// Contiguous index window {k : |k/n - t| <= n^{-alpha}, 1 <= k <= n-q-1}.
// Boundary membership is decided with a 1e-9 index tolerance so exact FP ties
// fall inside.
struct Neighborhood {
  int lo = 0;
  int hi = -1;
  int count() const { return hi - lo + 1; }
};

Neighborhood neighborhood(int n, double alpha, double t, int q);

// |x+y| / (|x| + |y|), the two-point increment ratio; 1 at the origin.
double psi(double x, double y);

// Mean of psi over consecutive variation pairs in the window. The filter is
// applied to the path as-is (pass a dilated filter for the multiscale
// variants); nbhd must keep k+1 inside the variation range.
double ir_statistic(const SampledPath& path, const Filter& f_dilated,
                    const Neighborhood& nbhd);

// log of the windowed mean squared i-dilated variation, i = 1..p. The base
// window is intersected with each dilatation's valid index range.
Eigen::VectorXd qv_log_vector(const SampledPath& path, const EstimatorConfig& cfg,
                              const Neighborhood& nbhd);

// Slope-only log-regression across dilatations: H = A.T / (2 A.A).
double qv_regression(const Eigen::VectorXd& t_vec);

struct Qv2Fit {
  double h;
  double intercept;
  bool gls_fallback;  // weight matrix was singular; equal weights used
};

// Weighted regression of T on (log(i/n), 1) with weight matrix gamma.
Qv2Fit qv2_regression(const Eigen::VectorXd& t_vec, const Eigen::MatrixXd& gamma,
                      int n);

// Weights proportional to Sigma^{-1} 1; throws SingularWeightMatrix.
Eigen::VectorXd gls_weights(const Eigen::MatrixXd& sigma);

struct EstimateCurve {
  std::vector<double> ts;
  std::vector<double> h_hat;
  std::vector<unsigned char> clamped;
  std::vector<unsigned char> valid;
  std::vector<unsigned char> gls_fallback;
  std::vector<double> stderr_pred;  // empty when no table was supplied
  EstimatorConfig config;
};

EstimateCurve estimate_ir(const SampledPath& path, const EstimatorConfig& cfg,
                          const std::vector<double>& ts);
EstimateCurve estimate_qv(const SampledPath& path, const EstimatorConfig& cfg,
                          const std::vector<double>& ts);
EstimateCurve estimate_ir2(const SampledPath& path, const EstimatorConfig& cfg,
                           const std::vector<double>& ts,
                           const AsymptoticTable& table);

struct Qv2Curve {
  EstimateCurve curve;
  std::vector<double> intercept;
};

Qv2Curve estimate_qv2(const SampledPath& path, const EstimatorConfig& cfg,
                      const std::vector<double>& ts);

// Dispatch helper used by the experiment runners; table may be null for the
// estimators that do not need it.
EstimateCurve estimate(const SampledPath& path, const EstimatorConfig& cfg,
                       const std::vector<double>& ts, const AsymptoticTable* table);

}  // namespace hurstlab
