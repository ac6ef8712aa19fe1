#include "hurstlab/filters.hpp"

#include <cmath>
#include <cstdlib>

#include "hurstlab/errors.hpp"

namespace hurstlab {

double Filter::moment(int p) const {
  double s = 0.0;
  for (std::size_t l = 0; l < coeffs_.size(); ++l) {
    s += coeffs_[l] * std::pow(static_cast<double>(l), p);
  }
  return s;
}

Filter make_filter(std::vector<double> coeffs) {
  if (coeffs.empty()) throw DegenerateFilter("filter has no coefficients");
  bool all_zero = true;
  for (double c : coeffs) {
    if (std::abs(c) >= kMomentTolerance) {
      all_zero = false;
      break;
    }
  }
  if (all_zero) {
    throw DegenerateFilter("all filter coefficients are below tolerance");
  }
  if (std::abs(coeffs.back()) < kMomentTolerance) {
    throw DegenerateFilter("trailing filter coefficient is zero; shorten the filter");
  }

  const int q = static_cast<int>(coeffs.size()) - 1;
  Filter f(std::move(coeffs), 0);
  if (std::abs(f.moment(0)) >= kMomentTolerance) {
    throw MomentConditionViolated("filter coefficients must sum to zero");
  }
  // A nonzero vector of length q+1 cannot annihilate all powers 0..q
  // (Vandermonde), so this loop always finds m.
  for (int p = 1; p <= q; ++p) {
    if (std::abs(f.moment(p)) >= kMomentTolerance) {
      f.m_ = p;
      return f;
    }
  }
  throw DegenerateFilter("filter annihilates every representable moment");
}

Filter dilate(const Filter& f, int j) {
  if (j < 1) throw DomainError("dilatation factor must be >= 1");
  const auto& a = f.coeffs();
  std::vector<double> out(static_cast<std::size_t>(f.q()) * j + 1, 0.0);
  for (int i = 0; i <= f.q(); ++i) {
    out[static_cast<std::size_t>(i) * j] = a[i];
  }
  return Filter(std::move(out), f.order());
}

const Filter& second_difference_filter() {
  static const Filter f = make_filter({1.0, -2.0, 1.0});
  return f;
}

std::vector<double> generalized_variations(const Filter& f,
                                           std::span<const double> values) {
  const int q = f.q();
  const auto n_obs = static_cast<int>(values.size());
  if (n_obs < q + 2) {
    throw PathTooShort("need at least q+2 observations to form variations");
  }
  const auto& a = f.coeffs();
  std::vector<double> out(static_cast<std::size_t>(n_obs - q));
  for (int k = 0; k < n_obs - q; ++k) {
    double v = 0.0;
    for (int l = 0; l <= q; ++l) v += a[l] * values[k + l];
    out[k] = v;
  }
  return out;
}

}  // namespace hurstlab
