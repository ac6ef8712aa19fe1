#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "hurstlab/errors.hpp"
#include "hurstlab/filters.hpp"
#include "hurstlab/fractional_kernels.hpp"
#include "hurstlab/gaussian_sampler.hpp"
#include "hurstlab/rng.hpp"

using namespace hurstlab;

TEST_CASE("identity covariance reproduces the raw normal stream") {
  const int dim = 16;
  const CholeskyFactor factor =
      CholeskyFactor::compute(Eigen::MatrixXd::Identity(dim, dim));
  CHECK(factor.jitter() == 0.0);
  const SeedLineage seed{99, 3, RandomStream::kPath};
  const SampledPath path = factor.sample(seed, "identity");
  GaussianStream stream(seed);
  for (int k = 0; k < dim; ++k) {
    CHECK(path.values[k] == stream.normal());
  }
  CHECK(path.n == dim + 1);
  CHECK(path.provenance.spec_id == "identity");
  CHECK(path.provenance.seed.master_seed == 99);
}

TEST_CASE("sampling is deterministic in the seed lineage") {
  const Eigen::MatrixXd cov = fbm_covariance_matrix(HurstValue(0.6), 64);
  const CholeskyFactor factor = CholeskyFactor::compute(cov);
  const SampledPath a = factor.sample({7, 0, RandomStream::kPath});
  const SampledPath b = factor.sample({7, 0, RandomStream::kPath});
  CHECK(a.values == b.values);
  const SampledPath c = factor.sample({7, 1, RandomStream::kPath});
  CHECK(a.values != c.values);
  const SampledPath d = factor.sample({8, 0, RandomStream::kPath});
  CHECK(a.values != d.values);
  // streams are independent dimensions of the lineage
  const SampledPath e = factor.sample({7, 0, RandomStream::kHurstField});
  CHECK(a.values != e.values);
}

TEST_CASE("fbm covariance closed form") {
  const int n = 8;
  const Eigen::MatrixXd cov = fbm_covariance_matrix(HurstValue(0.5), n);
  // Brownian motion: Cov = min(t, t')
  CHECK(cov(1, 3) == doctest::Approx(2.0 / 8.0).epsilon(1e-15));
  CHECK(cov(6, 6) == doctest::Approx(7.0 / 8.0).epsilon(1e-15));
  for (double h : {0.2, 0.7}) {
    const Eigen::MatrixXd c = fbm_covariance_matrix(HurstValue(h), n);
    for (int k = 1; k < n; ++k) {
      CHECK(c(k - 1, k - 1) ==
            doctest::Approx(std::pow(k / 8.0, 2 * h)).epsilon(1e-14));
    }
  }
}

TEST_CASE("empirical covariance of exact FBM draws matches the target") {
  const int n = 128;
  const HurstValue h(0.7);
  const Eigen::MatrixXd cov = fbm_covariance_matrix(h, n);
  const CholeskyFactor factor = CholeskyFactor::compute(cov);
  const int reps = 3000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n - 1, n - 1);
  for (int r = 0; r < reps; ++r) {
    const SampledPath path = factor.sample({11, static_cast<std::uint64_t>(r),
                                            RandomStream::kPath});
    Eigen::Map<const Eigen::VectorXd> v(path.values.data(), n - 1);
    acc.noalias() += v * v.transpose();
  }
  acc /= reps;
  // spot-check a spread of entries at five standard errors
  for (int k : {0, 30, 63, 100, 126}) {
    for (int k2 : {0, 45, 126}) {
      const double se = std::sqrt(
          (cov(k, k) * cov(k2, k2) + cov(k, k2) * cov(k, k2)) / reps);
      CHECK(std::abs(acc(k, k2) - cov(k, k2)) <= 5.0 * se);
    }
  }
}

TEST_CASE("second-variation correlation of sampled FBM approaches rho2") {
  const int n = 2048;
  const HurstValue h(0.3);
  const Eigen::MatrixXd cov = fbm_covariance_matrix(h, n);
  const CholeskyFactor factor = CholeskyFactor::compute(cov);
  double s_xy = 0.0, s_xx = 0.0;
  long pairs = 0;
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    const SampledPath path = factor.sample({5, static_cast<std::uint64_t>(r),
                                            RandomStream::kPath});
    const std::vector<double> v =
        generalized_variations(second_difference_filter(), path.values);
    for (std::size_t k = 0; k + 1 < v.size(); ++k) {
      s_xy += v[k] * v[k + 1];
      s_xx += v[k] * v[k];
      ++pairs;
    }
  }
  const double corr = s_xy / s_xx;
  // ~ 3 standard errors for this many (dependent) pairs
  CHECK(corr == doctest::Approx(rho2(h)).epsilon(0.05));
}

TEST_CASE("jitter escalates on a semidefinite matrix and is recorded") {
  Eigen::MatrixXd ones = Eigen::MatrixXd::Constant(8, 8, 1.0);
  const CholeskyFactor factor = CholeskyFactor::compute(ones);
  CHECK(factor.jitter() > 0.0);
  CHECK(factor.jitter_attempts().size() >= 2);
  const SampledPath path = factor.sample({1, 0, RandomStream::kPath});
  for (double v : path.values) CHECK(std::isfinite(v));

  Eigen::MatrixXd negative = -Eigen::MatrixXd::Identity(4, 4);
  CHECK_THROWS_AS(CholeskyFactor::compute(negative), NotPositiveDefinite);
}

TEST_CASE("closed-form Hurst cases") {
  const HurstField h1 = make_hurst_field(HurstCase::kH1);
  CHECK(h1(0.3) == 0.6);
  CHECK(h1(0.9) == 0.6);
  const HurstField h2 = make_hurst_field(HurstCase::kH2);
  CHECK(h2(0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(h2(0.25) == doctest::Approx(0.3).epsilon(1e-15));
  const HurstField h3 = make_hurst_field(HurstCase::kH3);
  CHECK(h3(0.2) == doctest::Approx(0.5 + 0.4 * std::sin(1.0)).epsilon(1e-15));
  const HurstField h4 = make_hurst_field(HurstCase::kH4);
  const double s = std::sin(3.0);
  CHECK(h4(0.3) == doctest::Approx(0.1 + 0.8 * 0.7 * s * s).epsilon(1e-12));
}

TEST_CASE("hurst_field_from_fbm rescales into the requested band") {
  SampledPath path;
  path.n = 8;
  path.values = {0.0, 1.0, 3.0, 2.0, 1.0, 0.5, 2.5};

  const HurstField plain = hurst_field_from_fbm(path, false, 0.2, 0.8, 0.6);
  CHECK(plain.smoothness() == 0.6);
  // min 0 -> 0.2 at node 1/8, max 3 -> 0.8 at node 3/8
  CHECK(plain(1.0 / 8.0) == doctest::Approx(0.2));
  CHECK(plain(3.0 / 8.0) == doctest::Approx(0.8));
  CHECK(plain(2.0 / 8.0) == doctest::Approx(0.4));

  const HurstField integ = hurst_field_from_fbm(path, true, 0.1, 0.9, 1.6);
  CHECK(integ.smoothness() == 1.6);
  // running integral of a nonnegative path is nondecreasing
  double prev = -1.0;
  for (int k = 1; k < 8; ++k) {
    const double v = integ(k / 8.0);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(integ(1.0 / 8.0) == doctest::Approx(0.1));
  CHECK(integ(7.0 / 8.0) == doctest::Approx(0.9));

  SampledPath flat;
  flat.n = 8;
  flat.values = std::vector<double>(7, 2.0);
  CHECK_THROWS_AS(hurst_field_from_fbm(flat, false, 0.1, 0.9, 0.5),
                  DegenerateSpec);
}

TEST_CASE("sample_fbm convenience wrapper") {
  const SampledPath path = sample_fbm(HurstValue(0.5), 64, {3, 1, RandomStream::kPath});
  CHECK(path.n == 64);
  CHECK(path.values.size() == 63);
  // variance of the terminal point is ((n-1)/n)^{2h}
  const Eigen::MatrixXd cov = fbm_covariance_matrix(HurstValue(0.5), 64);
  CHECK(cov(62, 62) == doctest::Approx(63.0 / 64.0).epsilon(1e-14));
}
