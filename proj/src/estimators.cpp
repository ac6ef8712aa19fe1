#include "hurstlab/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "hurstlab/errors.hpp"

namespace hurstlab {
namespace {

bool is_second_difference(const Filter& f) {
  const auto& c = f.coeffs();
  return c.size() == 3 && c[0] == 1.0 && c[1] == -2.0 && c[2] == 1.0;
}

double clamp_h(double h, bool* clamped) {
  if (h < kHurstClampEpsilon) {
    *clamped = true;
    return kHurstClampEpsilon;
  }
  if (h > 1.0 - kHurstClampEpsilon) {
    *clamped = true;
    return 1.0 - kHurstClampEpsilon;
  }
  return h;
}

// Windowed mean of psi over consecutive entries of a variation vector;
// variations[k-1] holds V(k/n).
double ir_core(const std::vector<double>& variations, const Neighborhood& nbhd) {
  if (nbhd.count() <= 0) throw EmptyNeighborhood("empty window in ir statistic");
  if (nbhd.lo < 1 || static_cast<std::size_t>(nbhd.hi) + 1 > variations.size()) {
    throw DomainError("ir window leaves the valid variation range");
  }
  double acc = 0.0;
  for (int k = nbhd.lo; k <= nbhd.hi; ++k) {
    acc += psi(variations[k - 1], variations[k]);
  }
  return acc / nbhd.count();
}

struct CurveBuilder {
  explicit CurveBuilder(std::vector<double> ts, EstimatorConfig cfg) {
    curve.ts = std::move(ts);
    const auto m = curve.ts.size();
    curve.h_hat.assign(m, std::numeric_limits<double>::quiet_NaN());
    curve.clamped.assign(m, 0);
    curve.valid.assign(m, 0);
    curve.gls_fallback.assign(m, 0);
    curve.config = std::move(cfg);
  }
  EstimateCurve curve;
};

}  // namespace

EstimatorConfig make_estimator_config(EstimatorKind estimator, double alpha,
                                      int p, Filter f) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw DomainError("alpha must lie in the open interval (0,1)");
  }
  if (p < 1 || p > 10) throw DomainError("p must lie in 1..10");
  const bool ratio_based =
      estimator == EstimatorKind::kIr || estimator == EstimatorKind::kIr2;
  if (ratio_based && !is_second_difference(f)) {
    throw DomainError(
        "ratio estimators are calibrated for the second-difference filter");
  }
  return EstimatorConfig{alpha, p, estimator, std::move(f)};
}

Neighborhood neighborhood(int n, double alpha, double t, int q) {
  if (n < 4) throw DomainError("neighborhood requires n >= 4");
  if (!(alpha > 0.0) || !(alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
  if (q < 1 || q >= n - 1) throw DomainError("invalid filter length for this n");
  const double radius = std::pow(static_cast<double>(n), -alpha);
  constexpr double kTol = 1e-9;
  int lo = static_cast<int>(std::ceil((t - radius) * n - kTol));
  int hi = static_cast<int>(std::floor((t + radius) * n + kTol));
  lo = std::max(lo, 1);
  hi = std::min(hi, n - q - 1);
  if (lo > hi) throw EmptyNeighborhood("no lattice point within n^{-alpha} of t");
  return {lo, hi};
}

double psi(double x, double y) {
  const double den = std::abs(x) + std::abs(y);
  if (den == 0.0) return 1.0;
  return std::abs(x + y) / den;
}

double ir_statistic(const SampledPath& path, const Filter& f_dilated,
                    const Neighborhood& nbhd) {
  return ir_core(generalized_variations(f_dilated, path.values), nbhd);
}

Eigen::VectorXd qv_log_vector(const SampledPath& path, const EstimatorConfig& cfg,
                              const Neighborhood& nbhd) {
  const int base_q = cfg.filter.q();
  Eigen::VectorXd t_vec(cfg.p);
  for (int i = 1; i <= cfg.p; ++i) {
    const auto vars = generalized_variations(dilate(cfg.filter, i), path.values);
    // Clip the window to indices where the dilated variation exists.
    const int hi = std::min(nbhd.hi, path.n - 1 - i * base_q);
    if (nbhd.lo > hi) {
      throw EmptyNeighborhood("window too close to the path end for dilatation " +
                              std::to_string(i));
    }
    double acc = 0.0;
    for (int k = nbhd.lo; k <= hi; ++k) acc += vars[k - 1] * vars[k - 1];
    const double mean_sq = acc / (hi - nbhd.lo + 1);
    if (!(mean_sq > 0.0)) {
      throw DegenerateVariations("all squared variations vanish in the window");
    }
    t_vec[i - 1] = std::log(mean_sq);
  }
  return t_vec;
}

double qv_regression(const Eigen::VectorXd& t_vec) {
  const Eigen::VectorXd a = qv_contrast(static_cast<int>(t_vec.size()));
  return 0.5 * a.dot(t_vec) / a.squaredNorm();
}

Eigen::VectorXd gls_weights(const Eigen::MatrixXd& sigma) {
  const int p = static_cast<int>(sigma.rows());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(sigma);
  if (!lu.isInvertible()) {
    throw SingularWeightMatrix("weight matrix is numerically singular");
  }
  const Eigen::VectorXd w = lu.solve(Eigen::VectorXd::Ones(p));
  const double total = w.sum();
  if (!std::isfinite(total) || total == 0.0) {
    throw SingularWeightMatrix("weight normalization failed");
  }
  return w / total;
}

Qv2Fit qv2_regression(const Eigen::VectorXd& t_vec, const Eigen::MatrixXd& gamma,
                      int n) {
  const int p = static_cast<int>(t_vec.size());
  if (p < 2) throw DomainError("the weighted log regression needs p >= 2");
  Eigen::MatrixXd z(2, p);
  for (int i = 1; i <= p; ++i) {
    z(0, i - 1) = std::log(static_cast<double>(i) / n);
    z(1, i - 1) = 1.0;
  }
  const auto solve_with = [&](const Eigen::MatrixXd& weight) {
    const Eigen::MatrixXd zw = z * weight;           // 2 x p
    const Eigen::Matrix2d m = zw * z.transpose();    // normal matrix
    const Eigen::Vector2d rhs = zw * t_vec;
    Eigen::FullPivLU<Eigen::Matrix2d> lu(m);
    if (!lu.isInvertible()) {
      throw SingularWeightMatrix("degenerate design in weighted log regression");
    }
    return Eigen::Vector2d(lu.solve(rhs));
  };

  Eigen::FullPivLU<Eigen::MatrixXd> lu(gamma);
  if (lu.isInvertible()) {
    const Eigen::Vector2d theta = solve_with(lu.inverse());
    return {0.5 * theta[0], theta[1], false};
  }
  const Eigen::Vector2d theta = solve_with(Eigen::MatrixXd::Identity(p, p));
  return {0.5 * theta[0], theta[1], true};
}

EstimateCurve estimate_ir(const SampledPath& path, const EstimatorConfig& cfg,
                          const std::vector<double>& ts) {
  const auto vars = generalized_variations(cfg.filter, path.values);
  CurveBuilder b(ts, cfg);
  for (std::size_t idx = 0; idx < ts.size(); ++idx) {
    try {
      // q+1 in place of q keeps the pair partner k+1 inside the range.
      const auto nbhd = neighborhood(path.n, cfg.alpha, ts[idx], cfg.filter.q() + 1);
      const double s = ir_core(vars, nbhd);
      const InversionResult inv = lambda2_inverse(s, 1);
      b.curve.h_hat[idx] = inv.h;
      b.curve.clamped[idx] = inv.clamped ? 1 : 0;
      b.curve.valid[idx] = 1;
    } catch (const EmptyNeighborhood&) {
      // leave the entry invalid
    }
  }
  return b.curve;
}

EstimateCurve estimate_qv(const SampledPath& path, const EstimatorConfig& cfg,
                          const std::vector<double>& ts) {
  if (cfg.p < 2) throw DomainError("the log-variation regression needs p >= 2");
  CurveBuilder b(ts, cfg);
  for (std::size_t idx = 0; idx < ts.size(); ++idx) {
    try {
      const auto nbhd = neighborhood(path.n, cfg.alpha, ts[idx], cfg.filter.q());
      const Eigen::VectorXd t_vec = qv_log_vector(path, cfg, nbhd);
      bool clamped = false;
      b.curve.h_hat[idx] = clamp_h(qv_regression(t_vec), &clamped);
      b.curve.clamped[idx] = clamped ? 1 : 0;
      b.curve.valid[idx] = 1;
    } catch (const EmptyNeighborhood&) {
    } catch (const DegenerateVariations&) {
    }
  }
  return b.curve;
}

EstimateCurve estimate_ir2(const SampledPath& path, const EstimatorConfig& cfg,
                           const std::vector<double>& ts,
                           const AsymptoticTable& table) {
  if (cfg.p < 2) throw DomainError("the pooled ratio estimator needs p >= 2");
  if (cfg.p > table.params().p) {
    throw DomainError("asymptotic table was built with a smaller p");
  }
  const int base_q = cfg.filter.q();
  std::vector<std::vector<double>> vars(cfg.p);
  for (int i = 1; i <= cfg.p; ++i) {
    vars[i - 1] = generalized_variations(dilate(cfg.filter, i), path.values);
  }

  CurveBuilder b(ts, cfg);
  Eigen::VectorXd comp(cfg.p);
  for (std::size_t idx = 0; idx < ts.size(); ++idx) {
    try {
      bool any_clamped = false;
      for (int i = 1; i <= cfg.p; ++i) {
        const auto nbhd =
            neighborhood(path.n, cfg.alpha, ts[idx], i * base_q + 1);
        const double s = ir_core(vars[i - 1], nbhd);
        const InversionResult inv = lambda2_inverse(s, i);
        comp[i - 1] = inv.h;
        any_clamped |= inv.clamped;
      }
      // Pilot = the single-scale estimate; its Sigma^(p) sets the weights.
      const Eigen::MatrixXd sigma =
          table.sigma_p_at(comp[0]).topLeftCorner(cfg.p, cfg.p);
      double h;
      try {
        h = gls_weights(sigma).dot(comp);
      } catch (const SingularWeightMatrix&) {
        h = comp.mean();
        b.curve.gls_fallback[idx] = 1;
      }
      bool clamped = any_clamped;
      b.curve.h_hat[idx] = clamp_h(h, &clamped);
      b.curve.clamped[idx] = clamped ? 1 : 0;
      b.curve.valid[idx] = 1;
    } catch (const EmptyNeighborhood&) {
    }
  }
  return b.curve;
}

Qv2Curve estimate_qv2(const SampledPath& path, const EstimatorConfig& cfg,
                      const std::vector<double>& ts) {
  if (cfg.p < 2) throw DomainError("the weighted log regression needs p >= 2");
  Qv2Curve out{EstimateCurve{}, std::vector<double>(ts.size(),
                                                    std::numeric_limits<double>::quiet_NaN())};
  CurveBuilder b(ts, cfg);
  for (std::size_t idx = 0; idx < ts.size(); ++idx) {
    try {
      const auto nbhd = neighborhood(path.n, cfg.alpha, ts[idx], cfg.filter.q());
      const Eigen::VectorXd t_vec = qv_log_vector(path, cfg, nbhd);
      bool clamped = false;
      const double pilot = clamp_h(qv_regression(t_vec), &clamped);
      const Eigen::MatrixXd gamma =
          gamma_matrix(HurstValue(pilot), cfg.p, cfg.filter);
      const Qv2Fit fit = qv2_regression(t_vec, gamma, path.n);
      bool fit_clamped = false;
      b.curve.h_hat[idx] = clamp_h(fit.h, &fit_clamped);
      b.curve.clamped[idx] = fit_clamped ? 1 : 0;
      b.curve.gls_fallback[idx] = fit.gls_fallback ? 1 : 0;
      b.curve.valid[idx] = 1;
      out.intercept[idx] = fit.intercept;
    } catch (const EmptyNeighborhood&) {
    } catch (const DegenerateVariations&) {
    }
  }
  out.curve = std::move(b.curve);
  return out;
}

EstimateCurve estimate(const SampledPath& path, const EstimatorConfig& cfg,
                       const std::vector<double>& ts, const AsymptoticTable* table) {
  switch (cfg.estimator) {
    case EstimatorKind::kIr:
      return estimate_ir(path, cfg, ts);
    case EstimatorKind::kQv:
      return estimate_qv(path, cfg, ts);
    case EstimatorKind::kIr2:
      if (!table) throw DomainError("pooled ratio estimator needs the asymptotic table");
      return estimate_ir2(path, cfg, ts, *table);
    case EstimatorKind::kQv2:
      return estimate_qv2(path, cfg, ts).curve;
  }
  throw DomainError("unknown estimator kind");
}

}  // namespace hurstlab
