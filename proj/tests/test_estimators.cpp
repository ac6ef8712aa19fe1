#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hurstlab/errors.hpp"
#include "hurstlab/estimators.hpp"

using namespace hurstlab;

namespace {

SampledPath path_from_values(std::vector<double> values, int n) {
  SampledPath path;
  path.values = std::move(values);
  path.n = n;
  return path;
}

SampledPath quadratic_path(int n) {
  std::vector<double> v(n - 1);
  for (int j = 0; j < n - 1; ++j) {
    const double t = static_cast<double>(j + 1) / n;
    v[j] = t * t;
  }
  return path_from_values(std::move(v), n);
}

}  // namespace

TEST_CASE("neighborhood windows") {
  const Neighborhood a = neighborhood(100, 0.5, 0.5, 2);
  CHECK(a.lo == 40);
  CHECK(a.hi == 60);
  CHECK(a.count() == 21);

  // window poking past the left edge is clipped at k = 1
  const Neighborhood b = neighborhood(100, 0.5, 0.005, 2);
  CHECK(b.lo == 1);
  CHECK(b.hi == 10);

  // interior counts at the reproduction scale vary by at most one
  for (double t : {0.2, 0.35, 0.5, 0.65, 0.8}) {
    const Neighborhood c = neighborhood(6000, 0.3, t, 2);
    CHECK(c.count() >= 882);
    CHECK(c.count() <= 883);
  }

  CHECK_THROWS_AS(neighborhood(100, 0.9, 0.999, 2), EmptyNeighborhood);
  CHECK_THROWS_AS(neighborhood(3, 0.5, 0.5, 2), DomainError);
}

TEST_CASE("psi ratio") {
  CHECK(psi(0.0, 0.0) == 1.0);
  CHECK(psi(1.0, 1.0) == 1.0);
  CHECK(psi(1.0, -1.0) == 0.0);
  CHECK(psi(2.0, -1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  // invariant under positive scaling and under joint sign flip
  CHECK(psi(4.0 * 0.3, 4.0 * -0.7) == psi(0.3, -0.7));
  CHECK(psi(-0.3, 0.7) == psi(0.3, -0.7));
}

TEST_CASE("ir_statistic on polynomial paths") {
  const int n = 64;
  const SampledPath quad = quadratic_path(n);
  const Neighborhood nbhd{10, 40};
  // equal consecutive variations: psi(v, v) = 1 everywhere
  CHECK(ir_statistic(quad, second_difference_filter(), nbhd) == 1.0);

  // variations alternating +1/-1: psi = 0 everywhere
  std::vector<double> v(n - 1, 0.0);
  for (int j = 0; j + 2 < n - 1; ++j) {
    v[j + 2] = ((j % 2 == 0) ? 1.0 : -1.0) + 2.0 * v[j + 1] - v[j];
  }
  const SampledPath alt = path_from_values(std::move(v), n);
  CHECK(ir_statistic(alt, second_difference_filter(), nbhd) == 0.0);
}

TEST_CASE("qv_log_vector on a quadratic trend") {
  const int n = 64;
  const SampledPath quad = quadratic_path(n);
  const EstimatorConfig cfg = make_estimator_config(EstimatorKind::kQv, 0.5, 3);
  const Neighborhood nbhd = neighborhood(n, 0.5, 0.5, cfg.filter.q());
  const Eigen::VectorXd t_vec = qv_log_vector(quad, cfg, nbhd);
  REQUIRE(t_vec.size() == 3);
  for (int i = 1; i <= 3; ++i) {
    // every i-dilated variation equals 2 i^2 / n^2 exactly
    const double expected = 2.0 * std::log(2.0 * i * i / (64.0 * 64.0));
    CHECK(t_vec[i - 1] == doctest::Approx(expected).epsilon(1e-14));
  }

  // an affine path has identically zero variations
  std::vector<double> aff(n - 1);
  for (int j = 0; j < n - 1; ++j) aff[j] = 3.0 + 2.0 * (j + 1) / 64.0;
  const SampledPath affine = path_from_values(std::move(aff), n);
  CHECK_THROWS_AS(qv_log_vector(affine, cfg, nbhd), DegenerateVariations);
}

TEST_CASE("qv_regression recovers an exact power law") {
  for (double h : {0.17, 0.5, 0.83}) {
    Eigen::VectorXd t_vec(5);
    for (int i = 1; i <= 5; ++i) t_vec[i - 1] = 2.0 * h * std::log(i) - 3.7;
    CHECK(qv_regression(t_vec) == doctest::Approx(h).epsilon(1e-12));
  }
  // p = 2 closed form: (T_2 - T_1) / (2 log 2)
  Eigen::VectorXd two(2);
  two << 1.0, 2.2;
  CHECK(qv_regression(two) ==
        doctest::Approx(1.2 / (2.0 * std::log(2.0))).epsilon(1e-13));
}

TEST_CASE("qv2_regression agrees with ordinary least squares") {
  const int n = 512;
  const int p = 4;
  Eigen::VectorXd t_vec(p);
  for (int i = 1; i <= p; ++i) {
    t_vec[i - 1] = 2.0 * 0.42 * std::log(static_cast<double>(i) / n) + 0.9;
  }
  // an exact fit is recovered under any positive definite weighting
  const Qv2Fit ident = qv2_regression(t_vec, Eigen::MatrixXd::Identity(p, p), n);
  CHECK(ident.h == doctest::Approx(0.42).epsilon(1e-12));
  CHECK(ident.intercept == doctest::Approx(0.9).epsilon(1e-10));
  CHECK_FALSE(ident.gls_fallback);

  const Eigen::MatrixXd gamma =
      gamma_matrix(HurstValue(0.5), p, second_difference_filter());
  const Qv2Fit weighted = qv2_regression(t_vec, gamma, n);
  CHECK(weighted.h == doctest::Approx(0.42).epsilon(1e-12));
  CHECK(weighted.intercept == doctest::Approx(0.9).epsilon(1e-10));

  // noisy vector: identity weights must reproduce the OLS solution
  Eigen::VectorXd noisy(p);
  noisy << -1.3, -0.9, -1.1, -0.2;
  Eigen::MatrixXd z(2, p);
  for (int i = 1; i <= p; ++i) {
    z(0, i - 1) = std::log(static_cast<double>(i) / n);
    z(1, i - 1) = 1.0;
  }
  const Eigen::VectorXd theta =
      (z * z.transpose()).ldlt().solve(z * noisy);
  const Qv2Fit fit = qv2_regression(noisy, Eigen::MatrixXd::Identity(p, p), n);
  CHECK(fit.h == doctest::Approx(0.5 * theta[0]).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(theta[1]).epsilon(1e-12));

  // singular weights: flagged, and the identity-weight answer is returned
  const Qv2Fit degenerate =
      qv2_regression(noisy, Eigen::MatrixXd::Constant(p, p, 1.0), n);
  CHECK(degenerate.gls_fallback);
  CHECK(degenerate.h == doctest::Approx(fit.h).epsilon(1e-12));
}

TEST_CASE("gls_weights") {
  const Eigen::VectorXd w = gls_weights(Eigen::MatrixXd::Identity(4, 4));
  for (int i = 0; i < 4; ++i) CHECK(w[i] == doctest::Approx(0.25).epsilon(1e-14));

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
  d.diagonal() << 1.0, 2.0, 4.0;
  const Eigen::VectorXd dw = gls_weights(d);
  CHECK(dw[0] == doctest::Approx(4.0 / 7.0).epsilon(1e-14));
  CHECK(dw[1] == doctest::Approx(2.0 / 7.0).epsilon(1e-14));
  CHECK(dw[2] == doctest::Approx(1.0 / 7.0).epsilon(1e-14));
  CHECK(dw.sum() == doctest::Approx(1.0).epsilon(1e-14));

  CHECK_THROWS_AS(gls_weights(Eigen::MatrixXd::Constant(3, 3, 1.0)),
                  SingularWeightMatrix);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(make_estimator_config(EstimatorKind::kQv, 0.0, 5), DomainError);
  CHECK_THROWS_AS(make_estimator_config(EstimatorKind::kQv, 1.0, 5), DomainError);
  CHECK_THROWS_AS(make_estimator_config(EstimatorKind::kQv, 0.3, 0), DomainError);
  CHECK_THROWS_AS(make_estimator_config(EstimatorKind::kQv, 0.3, 11), DomainError);
  const Filter first = make_filter({1.0, -1.0});
  CHECK_THROWS_AS(make_estimator_config(EstimatorKind::kIr, 0.3, 5, first),
                  DomainError);
  CHECK_THROWS_AS(make_estimator_config(EstimatorKind::kIr2, 0.3, 5, first),
                  DomainError);
  // the variation-based estimators accept any admissible filter
  const EstimatorConfig ok = make_estimator_config(EstimatorKind::kQv, 0.3, 5, first);
  CHECK(ok.filter.q() == 1);
}

TEST_CASE("scale and sign invariance on a sampled path") {
  const SampledPath base = sample_fbm(HurstValue(0.6), 512, {21, 0, RandomStream::kPath});
  const std::vector<double> ts{0.5};

  auto scaled = [&](double c) {
    SampledPath out = base;
    for (double& v : out.values) v *= c;
    return out;
  };

  const EstimatorConfig ir_cfg = make_estimator_config(EstimatorKind::kIr, 0.3, 1);
  const double ir_base = estimate_ir(base, ir_cfg, ts).h_hat[0];
  // powers of two scale the variations exactly: bitwise equality
  CHECK(estimate_ir(scaled(4.0), ir_cfg, ts).h_hat[0] == ir_base);
  CHECK(estimate_ir(scaled(-1.0), ir_cfg, ts).h_hat[0] == ir_base);
  CHECK(estimate_ir(scaled(5.0), ir_cfg, ts).h_hat[0] ==
        doctest::Approx(ir_base).epsilon(1e-9));

  const EstimatorConfig qv_cfg = make_estimator_config(EstimatorKind::kQv, 0.3, 5);
  const double qv_base = estimate_qv(base, qv_cfg, ts).h_hat[0];
  CHECK(estimate_qv(scaled(5.0), qv_cfg, ts).h_hat[0] ==
        doctest::Approx(qv_base).epsilon(1e-12));
  CHECK(estimate_qv(scaled(-1.0), qv_cfg, ts).h_hat[0] == qv_base);

  const EstimatorConfig qv2_cfg = make_estimator_config(EstimatorKind::kQv2, 0.3, 5);
  const double qv2_base = estimate_qv2(base, qv2_cfg, ts).curve.h_hat[0];
  CHECK(estimate_qv2(scaled(5.0), qv2_cfg, ts).curve.h_hat[0] ==
        doctest::Approx(qv2_base).epsilon(1e-12));
}

TEST_CASE("estimate_qv marks unreachable points invalid instead of aborting") {
  const SampledPath path = sample_fbm(HurstValue(0.5), 100, {4, 0, RandomStream::kPath});
  const EstimatorConfig cfg = make_estimator_config(EstimatorKind::kQv, 0.9, 2);
  const EstimateCurve curve = estimate_qv(path, cfg, {0.5, 0.999});
  REQUIRE(curve.ts.size() == 2);
  CHECK(curve.valid[0] == 1);
  CHECK(std::isfinite(curve.h_hat[0]));
  CHECK(curve.valid[1] == 0);
  CHECK(std::isnan(curve.h_hat[1]));
  CHECK(curve.stderr_pred.empty());
}

TEST_CASE("estimate_ir recovers a constant Hurst exponent") {
  const int n = 2048;
  const HurstValue h(0.7);
  const CholeskyFactor factor = CholeskyFactor::compute(fbm_covariance_matrix(h, n));
  const EstimatorConfig cfg = make_estimator_config(EstimatorKind::kIr, 0.3, 1);
  const std::vector<double> ts{0.5};
  double acc = 0.0;
  const int reps = 10;
  for (int r = 0; r < reps; ++r) {
    const SampledPath path = factor.sample({31, static_cast<std::uint64_t>(r),
                                            RandomStream::kPath});
    const EstimateCurve curve = estimate_ir(path, cfg, ts);
    REQUIRE(curve.valid[0] == 1);
    acc += curve.h_hat[0];
  }
  CHECK(acc / reps == doctest::Approx(0.7).epsilon(0.09));
}

TEST_CASE("estimate_ir2 pools dilated ratio statistics") {
  AsymptoticTableParams tp;
  tp.h_lo = 0.3;
  tp.h_step = 0.1;
  tp.h_count = 5;
  tp.p = 2;
  tp.K = 2;
  tp.samples = 100000;
  tp.truncation = 60;
  const AsymptoticTable table = AsymptoticTable::build(tp);

  const SampledPath path = sample_fbm(HurstValue(0.5), 2048, {77, 0, RandomStream::kPath});
  const EstimatorConfig cfg = make_estimator_config(EstimatorKind::kIr2, 0.3, 2);
  const EstimateCurve curve = estimate_ir2(path, cfg, {0.5}, table);
  REQUIRE(curve.valid[0] == 1);
  CHECK(curve.h_hat[0] == doctest::Approx(0.5).epsilon(0.2));
  CHECK(curve.gls_fallback[0] == 0);

  // dispatch guard: the pooled ratio estimator cannot run without a table
  CHECK_THROWS_AS(estimate(path, cfg, {0.5}, nullptr), DomainError);
  const EstimateCurve via_dispatch = estimate(path, cfg, {0.5}, &table);
  CHECK(via_dispatch.h_hat[0] == curve.h_hat[0]);
}

TEST_CASE("estimate dispatch matches the direct entry points") {
  const SampledPath path = sample_fbm(HurstValue(0.4), 256, {9, 0, RandomStream::kPath});
  const std::vector<double> ts{0.4, 0.6};
  const EstimatorConfig qv_cfg = make_estimator_config(EstimatorKind::kQv, 0.3, 5);
  const EstimateCurve a = estimate(path, qv_cfg, ts, nullptr);
  const EstimateCurve b = estimate_qv(path, qv_cfg, ts);
  CHECK(a.h_hat == b.h_hat);

  const EstimatorConfig qv2_cfg = make_estimator_config(EstimatorKind::kQv2, 0.3, 5);
  const EstimateCurve c = estimate(path, qv2_cfg, ts, nullptr);
  const Qv2Curve d = estimate_qv2(path, qv2_cfg, ts);
  CHECK(c.h_hat == d.curve.h_hat);
  CHECK(d.intercept.size() == ts.size());
}
