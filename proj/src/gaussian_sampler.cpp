#include "hurstlab/gaussian_sampler.hpp"

#include <algorithm>
#include <cmath>

#include "hurstlab/errors.hpp"

namespace hurstlab {

CholeskyFactor CholeskyFactor::compute(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols() || cov.rows() < 1) {
    throw DomainError("covariance matrix must be square and nonempty");
  }
  const double max_diag = cov.diagonal().maxCoeff();
  if (!(max_diag > 0.0)) {
    throw NotPositiveDefinite("covariance diagonal is not positive");
  }

  CholeskyFactor out;
  double jitter = 0.0;
  for (int attempt = 0; attempt < 6; ++attempt) {
    out.attempts_.push_back(jitter);
    out.matrix_ = cov;
    if (jitter > 0.0) {
      out.matrix_.diagonal().array() += jitter;
    }
    // In-place factorization; on success the lower triangle holds L.
    Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(out.matrix_);
    if (llt.info() == Eigen::Success) {
      out.jitter_ = jitter;
      return out;
    }
    jitter = (jitter == 0.0) ? 1e-12 * max_diag : 10.0 * jitter;
    if (jitter > 1e-8 * max_diag * (1.0 + 1e-12)) break;
  }
  throw NotPositiveDefinite(
      "Cholesky failed even with 1e-8 * max(diag) diagonal jitter");
}

Eigen::VectorXd CholeskyFactor::apply(const Eigen::VectorXd& xi) const {
  return matrix_.triangularView<Eigen::Lower>() * xi;
}

SampledPath CholeskyFactor::sample(const SeedLineage& seed, std::string spec_id) const {
  GaussianStream g(seed);
  Eigen::VectorXd xi(dim());
  for (int k = 0; k < dim(); ++k) xi[k] = g.normal();
  Eigen::VectorXd z = apply(xi);

  SampledPath path;
  path.n = dim() + 1;
  path.values.assign(z.data(), z.data() + z.size());
  path.provenance = {std::move(spec_id), seed};
  for (double v : path.values) {
    if (!std::isfinite(v)) throw NotPositiveDefinite("sampled path is not finite");
  }
  return path;
}

SampledPath sample_gaussian_path(const Eigen::MatrixXd& cov, const SeedLineage& seed) {
  return CholeskyFactor::compute(cov).sample(seed);
}

Eigen::MatrixXd fbm_covariance_matrix(HurstValue h, int n) {
  if (n < 4) throw DomainError("fbm_covariance_matrix requires n >= 4");
  const double two_h = 2.0 * h.value();
  const int dim = n - 1;
  Eigen::MatrixXd cov(dim, dim);
  for (int k = 0; k < dim; ++k) {
    const double t = static_cast<double>(k + 1) / n;
    for (int k2 = k; k2 < dim; ++k2) {
      const double t2 = static_cast<double>(k2 + 1) / n;
      const double v = 0.5 * (std::pow(t, two_h) + std::pow(t2, two_h) -
                              std::pow(t2 - t, two_h));
      cov(k, k2) = v;
      cov(k2, k) = v;
    }
  }
  return cov;
}

SampledPath sample_fbm(HurstValue h, int n, const SeedLineage& seed) {
  return CholeskyFactor::compute(fbm_covariance_matrix(h, n)).sample(seed, "fbm");
}

HurstField hurst_field_from_fbm(const SampledPath& fbm_path, bool integrate,
                                double lo, double hi, double smoothness) {
  std::vector<double> y = fbm_path.values;
  if (integrate) {
    double acc = 0.0;
    const double step = 1.0 / fbm_path.n;
    for (double& v : y) {
      acc += v * step;
      v = acc;
    }
  }
  const auto [mn_it, mx_it] = std::minmax_element(y.begin(), y.end());
  const double mn = *mn_it, mx = *mx_it;
  if (!(mx > mn)) throw DegenerateSpec("flat trajectory cannot be rescaled");
  for (double& v : y) v = lo + (hi - lo) * (v - mn) / (mx - mn);
  return HurstField::from_samples(std::move(y), fbm_path.n, smoothness);
}

HurstField make_hurst_field(HurstCase kind, double param, const SeedLineage& seed) {
  switch (kind) {
    case HurstCase::kH1:
      return HurstField::from_function([](double) { return 0.6; });
    case HurstCase::kH2:
      return HurstField::from_function([](double t) { return 0.1 + 0.8 * t; });
    case HurstCase::kH3:
      return HurstField::from_function(
          [](double t) { return 0.5 + 0.4 * std::sin(5.0 * t); });
    case HurstCase::kH4:
      return HurstField::from_function([](double t) {
        const double s = std::sin(10.0 * t);
        return 0.1 + 0.8 * (1.0 - t) * s * s;
      });
    case HurstCase::kIntegratedFbm: {
      SeedLineage s = seed;
      s.stream = RandomStream::kHurstField;
      const auto path = sample_fbm(HurstValue(param), kHurstFieldGrid, s);
      // Integration lifts the trajectory's smoothness by one.
      return hurst_field_from_fbm(path, true, 0.1, 0.9, 1.0 + param);
    }
    case HurstCase::kFbm: {
      SeedLineage s = seed;
      s.stream = RandomStream::kHurstField;
      const auto path = sample_fbm(HurstValue(param), kHurstFieldGrid, s);
      return hurst_field_from_fbm(path, false, 0.05, 0.55, param);
    }
  }
  throw DomainError("unknown Hurst case");
}

}  // namespace hurstlab
