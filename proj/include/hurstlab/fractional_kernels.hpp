#pragma once

#include "hurstlab/filters.hpp"

namespace hurstlab {

// Estimates are clamped into [kHurstClampEpsilon, 1 - kHurstClampEpsilon];
// the same bracket bounds the Lambda2 inversion.
inline constexpr double kHurstClampEpsilon = 1e-6;

// A Hurst exponent, restricted to the open interval (0, 1).
class HurstValue {
 public:
  explicit HurstValue(double h);
  double value() const { return h_; }

 private:
  double h_;
};

// Covariance of filtered fractional Brownian motion on the unit lattice:
// Cov(V^f B_H(0), V^f B_H(lag)) = -1/2 sum_{i,j} f_i f_j |lag + j - i|^{2H}.
// Valid for any filter with vanishing coefficient sum.
double fbm_filtered_covariance(const Filter& f, HurstValue h, long lag);

// Same with two different filters: Cov(V^f B_H(0), V^g B_H(lag)).
double fbm_filtered_cross_covariance(const Filter& f, const Filter& g,
                                     HurstValue h, long lag);

// Lag-one autocorrelation of the second variations V^{a*} B_H(k), and of the
// i-dilated ones. Smooth on (0,1); the removable 0/0 at h -> 1 is handled by
// its explicit limit.
double rho2(HurstValue h);
double rho2_dilated(int i, HurstValue h);

// E |X+Y| / (|X| + |Y|) for a centered Gaussian pair with correlation rho and
// equal variances:
//   Lambda(rho) = acos(-rho)/pi + sqrt((1+rho)/(1-rho)) log(2/(1+rho)) / pi.
// Strictly increasing from 0 to 1 on rho in (-1, 1).
double lambda_of_rho(double rho);

// Lambda applied to the second-variation correlations; the exact mean of the
// increment-ratio statistic at constant Hurst h.
double lambda2(HurstValue h);
double lambda2_dilated(int i, HurstValue h);

struct InversionResult {
  double h;
  bool clamped;  // input was outside the attainable range and got pinned
};

// Inverse of h -> lambda2_dilated(i, h) by bisection to |dh| <= 1e-10 on
// [kHurstClampEpsilon, 1 - kHurstClampEpsilon].
InversionResult lambda2_inverse(double s, int i);

// d/dh lambda2_dilated(i, h), central difference with step 1e-5.
double lambda2_derivative(HurstValue h, int i);

}  // namespace hurstlab
