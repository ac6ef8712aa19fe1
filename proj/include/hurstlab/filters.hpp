#pragma once

#include <span>
#include <vector>

namespace hurstlab {

// A finite difference filter a = (a_0, ..., a_q) whose moments
// sum_l l^p a_l vanish for p = 0, ..., m-1 and not for p = m. Applied to a
// sampled process it produces generalized variations that kill polynomial
// trends up to degree m-1.
class Filter {
 public:
  const std::vector<double>& coeffs() const { return coeffs_; }
  int q() const { return static_cast<int>(coeffs_.size()) - 1; }
  int order() const { return m_; }

  // sum_l l^p a_l
  double moment(int p) const;

 private:
  Filter(std::vector<double> coeffs, int m) : coeffs_(std::move(coeffs)), m_(m) {}
  friend Filter make_filter(std::vector<double> coeffs);
  friend Filter dilate(const Filter& f, int j);

  std::vector<double> coeffs_;
  int m_;
};

// Moment sums with magnitude below this are treated as exact zeros.
inline constexpr double kMomentTolerance = 1e-12;

// Validates the zero-sum condition, determines the order m, rejects
// all-zero or trailing-zero coefficient vectors.
Filter make_filter(std::vector<double> coeffs);

// j-th dilatation: coefficient a_i moves to position i*j, zeros in between.
// Length becomes j*q + 1; the order m is unchanged.
Filter dilate(const Filter& f, int j);

// a* = (1, -2, 1), the second-difference filter all ratio-based estimators
// are calibrated against.
const Filter& second_difference_filter();

// V(k/n) = sum_l a_l Z((k+l)/n) for k = 1..n-1-q, given Z(1/n)..Z((n-1)/n).
// values[j] holds Z((j+1)/n); the result's entry j holds V((j+1)/n).
std::vector<double> generalized_variations(const Filter& f,
                                           std::span<const double> values);

}  // namespace hurstlab
