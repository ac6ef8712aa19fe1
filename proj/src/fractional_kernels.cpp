#include "hurstlab/fractional_kernels.hpp"

#include <cmath>
#include <cstdlib>

#include "hurstlab/errors.hpp"

namespace hurstlab {
namespace {

constexpr double kPi = 3.14159265358979323846;

// x^2 log x extended by continuity to x = 0.
double xx_log(double x) { return x == 0.0 ? 0.0 : x * x * std::log(x); }

}  // namespace

HurstValue::HurstValue(double h) : h_(h) {
  if (!(h > 0.0) || !(h < 1.0)) {
    throw DomainError("Hurst exponent must lie in the open interval (0,1)");
  }
}

double fbm_filtered_covariance(const Filter& f, HurstValue h, long lag) {
  return fbm_filtered_cross_covariance(f, f, h, lag);
}

double fbm_filtered_cross_covariance(const Filter& f, const Filter& g,
                                     HurstValue h, long lag) {
  const double two_h = 2.0 * h.value();
  const auto& a = f.coeffs();
  const auto& b = g.coeffs();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (b[j] == 0.0) continue;
      const double d = std::abs(static_cast<double>(lag) +
                                static_cast<double>(j) - static_cast<double>(i));
      row += b[j] * std::pow(d, two_h);
    }
    s += a[i] * row;
  }
  return -0.5 * s;
}

double rho2(HurstValue h) { return rho2_dilated(1, h); }

double rho2_dilated(int i, HurstValue h) {
  if (i < 1) throw DomainError("dilatation index must be >= 1");
  const double hv = h.value();
  const double di = static_cast<double>(i);
  if (hv > 1.0 - kHurstClampEpsilon) {
    // Numerator and denominator both vanish at h = 1; take the limit of the
    // derivative ratio. The i = 1 case reduces to (18 ln3 - 32 ln2)/(16 ln2).
    const double num = -2.0 * xx_log(2.0 * di + 1.0) - 2.0 * xx_log(2.0 * di - 1.0) +
                       8.0 * xx_log(di + 1.0) + 8.0 * xx_log(di - 1.0);
    const double den = -16.0 * di * di * std::log(2.0);
    return num / den;
  }
  const double th = 2.0 * hv;
  const double num = -std::pow(2.0 * di + 1.0, th) - std::pow(2.0 * di - 1.0, th) +
                     4.0 * std::pow(di + 1.0, th) + 4.0 * std::pow(di - 1.0, th) - 6.0;
  const double den = std::pow(di, th) * (8.0 - std::pow(2.0, th + 1.0));
  return num / den;
}

double lambda_of_rho(double rho) {
  if (!(rho > -1.0) || !(rho < 1.0)) {
    throw DomainError("correlation must lie in the open interval (-1,1)");
  }
  return std::acos(-rho) / kPi +
         std::sqrt((1.0 + rho) / (1.0 - rho)) * std::log(2.0 / (1.0 + rho)) / kPi;
}

double lambda2(HurstValue h) { return lambda_of_rho(rho2(h)); }

double lambda2_dilated(int i, HurstValue h) {
  return lambda_of_rho(rho2_dilated(i, h));
}

InversionResult lambda2_inverse(double s, int i) {
  double lo = kHurstClampEpsilon;
  double hi = 1.0 - kHurstClampEpsilon;
  const double s_lo = lambda2_dilated(i, HurstValue(lo));
  const double s_hi = lambda2_dilated(i, HurstValue(hi));
  // Lambda2 is increasing in h (monotone rho composed with monotone Lambda).
  if (s <= s_lo) return {lo, true};
  if (s >= s_hi) return {hi, true};
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (lambda2_dilated(i, HurstValue(mid)) < s) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {0.5 * (lo + hi), false};
}

double lambda2_derivative(HurstValue h, int i) {
  const double step = 1e-5;
  double lo = h.value() - step;
  double hi = h.value() + step;
  // Shift the stencil inward near the boundary; the spacing stays 2*step.
  if (lo < kHurstClampEpsilon) {
    lo = kHurstClampEpsilon;
    hi = lo + 2.0 * step;
  } else if (hi > 1.0 - kHurstClampEpsilon) {
    hi = 1.0 - kHurstClampEpsilon;
    lo = hi - 2.0 * step;
  }
  return (lambda2_dilated(i, HurstValue(hi)) - lambda2_dilated(i, HurstValue(lo))) /
         (hi - lo);
}

}  // namespace hurstlab
