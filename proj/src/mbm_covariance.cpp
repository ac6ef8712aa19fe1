#include "hurstlab/mbm_covariance.hpp"

#include <cmath>
#include <utility>

#include "hurstlab/errors.hpp"

namespace hurstlab {
namespace {

constexpr double kPi = 3.14159265358979323846;
// Width of the analytic-continuation window around h + h2 = 1.
constexpr double kSeamSwitch = 1e-4;

}  // namespace

HurstField HurstField::from_function(std::function<double(double)> f,
                                     std::optional<double> smoothness) {
  if (!f) throw DegenerateSpec("Hurst field requires a callable");
  HurstField field;
  field.fn_ = std::move(f);
  field.smoothness_ = smoothness;
  field.validate();
  return field;
}

HurstField HurstField::from_samples(std::vector<double> values, int n_grid,
                                    std::optional<double> smoothness) {
  if (n_grid < 4 || values.size() != static_cast<std::size_t>(n_grid - 1)) {
    throw DegenerateSpec("sampled Hurst field needs n_grid-1 values on k/n_grid");
  }
  HurstField field;
  field.samples_ = std::move(values);
  field.n_grid_ = n_grid;
  field.smoothness_ = smoothness;
  field.validate();
  return field;
}

double HurstField::operator()(double t) const {
  if (samples_.empty()) return fn_(t);
  const double n = static_cast<double>(n_grid_);
  const double first = 1.0 / n;
  const double last = (n - 1.0) / n;
  if (t <= first) return samples_.front();
  if (t >= last) return samples_.back();
  const double x = t * n - 1.0;  // position in units of grid index
  const auto k = static_cast<std::size_t>(x);
  const double w = x - static_cast<double>(k);
  return (1.0 - w) * samples_[k] + w * samples_[k + 1];
}

void HurstField::validate() const {
  constexpr int kProbe = 10000;
  for (int i = 1; i < kProbe; ++i) {
    const double h = (*this)(static_cast<double>(i) / kProbe);
    if (!(h > 0.0) || !(h < 1.0)) {
      throw DomainError("Hurst field leaves (0,1) on the probe grid");
    }
  }
}

double kconst(HurstValue h) {
  const double hv = h.value();
  return std::sqrt(hv * std::tgamma(2.0 * hv) * std::sin(kPi * hv) / kPi);
}

double beta_angle(double a_plus, double a_minus, HurstValue h) {
  if (a_plus == 0.0 && a_minus == 0.0) {
    throw DegenerateSpec("weight pair (a+, a-) must not be (0, 0)");
  }
  if (a_plus == a_minus) return 0.0;
  const double theta = (h.value() + 0.5) * kPi / 2.0;
  const double re = (a_plus + a_minus) * std::cos(theta);
  const double im = (a_minus - a_plus) * std::sin(theta);
  if (re == 0.0 && im == 0.0) {
    throw DegenerateSpec("phase operand vanished; weights are degenerate");
  }
  double ang = std::atan2(im, re);
  if (ang < 0.0) ang += 2.0 * kPi;
  return ang;
}

namespace detail {

double omega_over_tan(double omega) {
  const double x = omega * kPi / 2.0;
  if (std::abs(omega) < 1e-3) {
    const double x2 = x * x;
    return (2.0 / kPi) * (1.0 - x2 / 3.0 - x2 * x2 / 45.0 - 2.0 * x2 * x2 * x2 / 945.0);
  }
  return omega / std::tan(x);
}

double q_generic(double l_const, double cos_db, double sin_db, double s,
                 double t, double t2) {
  const double half_angle = kPi * s / 2.0;
  const double c = std::cos(half_angle);
  // cos(db -+ pi s/2) expanded; the coefficient on the earlier time carries
  // the minus sign inside the cosine.
  const double sc = std::sin(half_angle);
  const double l_early = l_const * (cos_db * c + sin_db * sc) / c;
  const double l_late = l_const * (cos_db * c - sin_db * sc) / c;
  const double gap = t2 - t;
  return 0.5 * (l_early * std::pow(t, s) + l_late * std::pow(t2, s) -
                l_late * std::pow(gap, s));
}

double q_continuation(double l_const, double cos_db, double sin_db,
                      double omega, double t, double t2) {
  const double gap = t2 - t;
  const double sym = std::pow(t, 1.0 + omega) + std::pow(t2, 1.0 + omega) -
                     std::pow(gap, 1.0 + omega);
  // u (u^omega - 1)/omega, continuous in omega through 0 and in u at 0.
  const auto g = [omega](double u) {
    if (u == 0.0) return 0.0;
    const double lu = std::log(u);
    return omega == 0.0 ? u * lu : u * std::expm1(omega * lu) / omega;
  };
  const double skew = g(t) - g(t2) + g(gap);
  return 0.5 * l_const * (cos_db * sym - sin_db * omega_over_tan(omega) * skew);
}

}  // namespace detail

double q_kernel_hh(double a_plus, double a_minus, double h, double h2,
                   double t, double t2) {
  if (!(t > 0.0) || !(t < 1.0) || !(t2 > 0.0) || !(t2 < 1.0)) {
    throw DomainError("q_kernel times must lie in the open interval (0,1)");
  }
  if (t > t2) {
    std::swap(t, t2);
    std::swap(h, h2);
  }
  const HurstValue hv(h), hv2(h2);
  const double s = h + h2;
  // K(h) K(h2) / K((h+h2)/2)^2: the spectral integral contributes
  // 1 / (2 K(s/2)^2) and each factor of the field its own K.
  const double km = kconst(HurstValue(s / 2.0));
  const double l_const = kconst(hv) * kconst(hv2) / (km * km);
  double cos_db = 1.0, sin_db = 0.0;
  if (a_plus != a_minus) {
    // phase difference of the earlier point minus the later one
    const double db = beta_angle(a_plus, a_minus, hv) - beta_angle(a_plus, a_minus, hv2);
    cos_db = std::cos(db);
    sin_db = std::sin(db);
  } else if (a_plus == 0.0) {
    throw DegenerateSpec("weight pair (a+, a-) must not be (0, 0)");
  }
  if (std::abs(s - 1.0) < kSeamSwitch) {
    return detail::q_continuation(l_const, cos_db, sin_db, s - 1.0, t, t2);
  }
  return detail::q_generic(l_const, cos_db, sin_db, s, t, t2);
}

double q_kernel(const MbmSpec& spec, double t, double t2) {
  const double base = q_kernel_hh(spec.a_plus, spec.a_minus, spec.hurst(t),
                                  spec.hurst(t2), t, t2);
  if (!spec.scale) return base;
  const double s1 = spec.scale(t), s2 = spec.scale(t2);
  if (!(s1 > 0.0) || !(s2 > 0.0)) {
    throw DegenerateSpec("scale function must be strictly positive");
  }
  return s1 * s2 * base;
}

Eigen::MatrixXd covariance_matrix(const MbmSpec& spec, int n) {
  if (n < 4) throw DomainError("covariance_matrix requires n >= 4");
  const int dim = n - 1;
  Eigen::MatrixXd cov(dim, dim);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < dim; ++k) {
    const double t = static_cast<double>(k + 1) / n;
    for (int k2 = k; k2 < dim; ++k2) {
      const double t2 = static_cast<double>(k2 + 1) / n;
      const double v = q_kernel(spec, t, t2);
      cov(k, k2) = v;
      cov(k2, k) = v;
    }
  }
  return cov;
}

}  // namespace hurstlab
