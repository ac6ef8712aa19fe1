#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hurstlab/fractional_kernels.hpp"

namespace hurstlab {

// A Hurst function t -> H(t) on (0,1), either a closed form or a trajectory
// sampled on a uniform grid (evaluated by linear interpolation, clamped to
// the end nodes outside the grid). Construction verifies 0 < H < 1 on a
// 10^4-point grid.
class HurstField {
 public:
  static HurstField from_function(std::function<double(double)> f,
                                  std::optional<double> smoothness = {});
  // values[k] is H((k+1)/n_grid) for k = 0..n_grid-2.
  static HurstField from_samples(std::vector<double> values, int n_grid,
                                 std::optional<double> smoothness = {});

  double operator()(double t) const;
  bool sampled() const { return !samples_.empty(); }
  // Holder smoothness exponent of the trajectory, when known (used in
  // reporting only; the kernel itself never needs it).
  std::optional<double> smoothness() const { return smoothness_; }

 private:
  HurstField() = default;
  void validate() const;

  std::function<double(double)> fn_;
  std::vector<double> samples_;
  int n_grid_ = 0;
  std::optional<double> smoothness_;
};

// Parameters of a harmonizable multifractional Brownian motion, normalized so
// that E X(t)^2 = t^{2H(t)}. The weight pair (a_plus, a_minus) enters the
// covariance only through the phase angle beta(H); scale multiplies the path
// pointwise.
struct MbmSpec {
  double a_plus = 1.0;
  double a_minus = 1.0;
  HurstField hurst;
  std::function<double(double)> scale;  // null means identically 1

  std::string id = "custom";
};

// K(h) = sqrt(h Gamma(2h) sin(pi h) / pi); K(1/2) = 1/sqrt(2 pi).
double kconst(HurstValue h);

// Phase angle beta(H) = Arg(a+ e^{-i(H+1/2)pi/2} + a- e^{i(H+1/2)pi/2}),
// taken in [0, 2pi); identically 0 for a+ == a-.
double beta_angle(double a_plus, double a_minus, HurstValue h);

// The two-point kernel Q(h, h2, t, t2) with h attached to the earlier time.
// Symmetric under swapping (h,t) with (h2,t2). Requires 0 < t, t2 < 1.
double q_kernel_hh(double a_plus, double a_minus, double h, double h2,
                   double t, double t2);

// E Z(t) Z(t2) for Z = scale * X under the given spec.
double q_kernel(const MbmSpec& spec, double t, double t2);

// The (n-1) x (n-1) matrix of E Z(k/n) Z(k'/n), k, k' = 1..n-1. Entries are
// produced by the scalar q_kernel path, so the two agree bitwise.
Eigen::MatrixXd covariance_matrix(const MbmSpec& spec, int n);

namespace detail {

// The two algebraically equivalent branches of Q, exposed separately so the
// seam at h + h2 = 1 can be cross-checked. Both take t <= t2.
double q_generic(double l_const, double cos_db, double sin_db, double s,
                 double t, double t2);
double q_continuation(double l_const, double cos_db, double sin_db,
                      double omega, double t, double t2);
// omega / tan(omega pi / 2), series expansion below |omega| = 1e-3.
double omega_over_tan(double omega);

}  // namespace detail
}  // namespace hurstlab
