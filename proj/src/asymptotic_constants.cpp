#include "hurstlab/asymptotic_constants.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hurstlab/errors.hpp"
#include "hurstlab/version.hpp"

namespace hurstlab {
namespace {

double psi_ratio(double x, double y) {
  const double den = std::abs(x) + std::abs(y);
  if (den == 0.0) return 1.0;
  return std::abs(x + y) / den;
}

// PSD square root for the exact lag covariance; LLT when possible, spectral
// fallback with tiny-negative clipping otherwise.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& c) {
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  if (es.info() != Eigen::Success) {
    throw NonPositiveDefiniteLagCov("eigendecomposition of lag covariance failed");
  }
  Eigen::VectorXd ev = es.eigenvalues();
  const double floor = -1e-8 * std::max(c.trace(), 0.0);
  for (int k = 0; k < ev.size(); ++k) {
    if (ev[k] < floor) {
      throw NonPositiveDefiniteLagCov("lag covariance has a genuinely negative eigenvalue");
    }
    ev[k] = std::max(ev[k], 0.0);
  }
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

struct LagSample {
  double mean = 0.0;
  double var = 0.0;  // variance of the per-draw product
};

// Mean of psi(x0,x1) psi(x2,x3) under the given 4x4 covariance.
LagSample mc_psi_product(const Eigen::MatrixXd& cov, long samples,
                         const SeedLineage& seed) {
  // Fixed-size copy keeps the per-draw transform allocation-free.
  const Eigen::Matrix4d b = psd_sqrt(cov);
  GaussianStream g(seed);
  double acc = 0.0, acc2 = 0.0;
  Eigen::Vector4d z;
  for (long s = 0; s < samples; ++s) {
    for (int k = 0; k < 4; ++k) z[k] = g.normal();
    const Eigen::Vector4d x = b * z;
    const double prod = psi_ratio(x[0], x[1]) * psi_ratio(x[2], x[3]);
    acc += prod;
    acc2 += prod * prod;
  }
  const double mean = acc / samples;
  return {mean, std::max(acc2 / samples - mean * mean, 0.0)};
}

LagSample mc_psi_square(const Eigen::MatrixXd& cov2, long samples,
                        const SeedLineage& seed) {
  const Eigen::Matrix2d b = psd_sqrt(cov2);
  GaussianStream g(seed);
  double acc = 0.0, acc2 = 0.0;
  Eigen::Vector2d z;
  for (long s = 0; s < samples; ++s) {
    z[0] = g.normal();
    z[1] = g.normal();
    const Eigen::Vector2d x = b * z;
    const double psi = psi_ratio(x[0], x[1]);
    const double prod = psi * psi;
    acc += prod;
    acc2 += prod * prod;
  }
  const double mean = acc / samples;
  return {mean, std::max(acc2 / samples - mean * mean, 0.0)};
}

void write_double(std::FILE* f, double v) { std::fprintf(f, "%.17g", v); }

}  // namespace

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kIr: return "ir";
    case EstimatorKind::kQv: return "qv";
    case EstimatorKind::kIr2: return "ir2";
    case EstimatorKind::kQv2: return "qv2";
  }
  throw DomainError("unknown estimator kind");
}

EstimatorKind estimator_from_name(const std::string& name) {
  if (name == "ir") return EstimatorKind::kIr;
  if (name == "qv") return EstimatorKind::kQv;
  if (name == "ir2") return EstimatorKind::kIr2;
  if (name == "qv2") return EstimatorKind::kQv2;
  throw DomainError("unknown estimator '" + name + "' (expected ir|qv|ir2|qv2)");
}

Eigen::MatrixXd gamma_matrix(HurstValue h, int p, const Filter& f,
                             int truncation, double* trunc_err) {
  if (p < 1) throw DomainError("gamma_matrix requires p >= 1");
  if (truncation < 1) throw DomainError("gamma_matrix truncation must be >= 1");
  const double two_h = 2.0 * h.value();
  const auto& a = f.coeffs();
  const int q = f.q();

  double den = 0.0;
  for (int k1 = 0; k1 <= q; ++k1) {
    for (int k2 = 0; k2 <= q; ++k2) {
      den += a[k1] * a[k2] * std::pow(std::abs(k1 - k2), two_h);
    }
  }

  Eigen::MatrixXd gamma(p, p);
  double worst_tail = 0.0;
  for (int i1 = 1; i1 <= p; ++i1) {
    for (int i2 = i1; i2 <= p; ++i2) {
      double series = 0.0;
      double edge_term = 0.0;
      for (int j = -truncation; j <= truncation; ++j) {
        double num = 0.0;
        for (int k1 = 0; k1 <= q; ++k1) {
          for (int k2 = 0; k2 <= q; ++k2) {
            num += a[k1] * a[k2] *
                   std::pow(std::abs(i1 * k1 - i2 * k2 + j), two_h);
          }
        }
        const double term = (num / den) * (num / den);
        series += term;
        if (std::abs(j) == truncation) edge_term = std::max(edge_term, term);
      }
      const double value =
          2.0 / (std::pow(i1, two_h) * std::pow(i2, two_h)) * series;
      gamma(i1 - 1, i2 - 1) = value;
      gamma(i2 - 1, i1 - 1) = value;
      // Terms decay like j^{-2(2m-2H)}; bound the tail by the integral of the
      // power law continued past the last computed term.
      const double decay = 2.0 * (2.0 * f.order() - two_h) - 1.0;
      const double tail = 2.0 / (std::pow(i1, two_h) * std::pow(i2, two_h)) *
                          2.0 * edge_term * truncation / std::max(decay, 0.5);
      worst_tail = std::max(worst_tail, tail);
    }
  }
  if (trunc_err) *trunc_err = worst_tail;
  return gamma;
}

McEstimate sigma_ij(HurstValue h, int i, int j, int K, long samples,
                    const SeedLineage& seed) {
  if (i < 1 || j < 1) throw DomainError("dilatation indices must be >= 1");
  if (K < 1) throw DomainError("sigma_ij requires K >= 1");
  if (samples < 100000) throw DomainError("sigma_ij requires samples >= 1e5");

  const Filter di = dilate(second_difference_filter(), i);
  const Filter dj = dilate(second_difference_filter(), j);
  const double var_i = fbm_filtered_covariance(di, h, 0);
  const double var_j = fbm_filtered_covariance(dj, h, 0);
  const double cov1_i = fbm_filtered_covariance(di, h, 1);
  const double cov1_j = fbm_filtered_covariance(dj, h, 1);
  const double mean_i = lambda2_dilated(i, h);
  const double mean_j = lambda2_dilated(j, h);
  const double scale = std::max(var_i, var_j);

  double total = 0.0;
  double se2 = 0.0;
  for (int k = -K; k <= K; ++k) {
    SeedLineage lag_seed = seed;
    lag_seed.replication += static_cast<std::uint64_t>(k + K);
    lag_seed.stream = RandomStream::kAsymptoticMc;

    if (i == j && k == 0) {
      Eigen::Matrix2d c2;
      c2 << var_i, cov1_i, cov1_i, var_i;
      const LagSample s = mc_psi_square(c2, samples, lag_seed);
      total += s.mean - mean_i * mean_i;
      se2 += s.var / samples;
      continue;
    }

    Eigen::Matrix4d c;
    c(0, 0) = var_i;
    c(0, 1) = cov1_i;
    c(1, 1) = var_i;
    c(2, 2) = var_j;
    c(2, 3) = cov1_j;
    c(3, 3) = var_j;
    c(0, 2) = fbm_filtered_cross_covariance(di, dj, h, k);
    c(0, 3) = fbm_filtered_cross_covariance(di, dj, h, k + 1);
    c(1, 2) = fbm_filtered_cross_covariance(di, dj, h, k - 1);
    c(1, 3) = c(0, 2);
    c = c.selfadjointView<Eigen::Upper>();

    // Zero cross-block means the two psi values are independent Gaussians
    // and the lag contributes exactly nothing.
    if (c.topRightCorner<2, 2>().cwiseAbs().maxCoeff() < 1e-14 * scale) continue;

    const LagSample s = mc_psi_product(c, samples, lag_seed);
    total += s.mean - mean_i * mean_j;
    se2 += s.var / samples;
  }
  return {total, std::sqrt(se2)};
}

SigmaBuild build_sigma_p(HurstValue h, int p, int K, long samples,
                         const SeedLineage& seed) {
  if (p < 1) throw DomainError("build_sigma_p requires p >= 1");
  SigmaBuild out;
  out.sigma.setZero(p, p);
  out.se.setZero(p, p);

  const std::uint64_t lag_stride = static_cast<std::uint64_t>(2 * K + 2);
  for (int i = 1; i <= p; ++i) {
    for (int j = i; j <= p; ++j) {
      SeedLineage cell = seed;
      cell.replication +=
          (static_cast<std::uint64_t>(i - 1) * p + (j - 1)) * lag_stride;
      const McEstimate e = sigma_ij(h, i, j, K, samples, cell);
      out.sigma(i - 1, j - 1) = e.value;
      out.sigma(j - 1, i - 1) = e.value;
      out.se(i - 1, j - 1) = e.se;
      out.se(j - 1, i - 1) = e.se;
    }
  }

  Eigen::VectorXd dinv(p);
  for (int i = 1; i <= p; ++i) dinv[i - 1] = 1.0 / lambda2_derivative(h, i);
  Eigen::MatrixXd s = dinv.asDiagonal() * out.sigma * dinv.asDiagonal();
  s = 0.5 * (s + s.transpose()).eval();

  const double floor = 1e-8 * std::max(s.trace(), 1e-300);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  if (es.eigenvalues().minCoeff() < floor) {
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
    s = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    out.floored = true;
  }
  out.sigma_p = s;

  // Pooling several ratio statistics can never beat the best single one in
  // the limit; this is the Gauss-Markov sanity check on the finished matrix.
  const double pooled =
      1.0 / (Eigen::VectorXd::Ones(p).transpose() *
             s.ldlt().solve(Eigen::VectorXd::Ones(p)))(0, 0);
  if (pooled > s.diagonal().minCoeff() * (1.0 + 1e-9)) {
    throw Error("pooled variance exceeds the best single-scale variance");
  }
  return out;
}

Eigen::MatrixXd sigma_p_matrix(HurstValue h, int p, int K, long samples,
                               const SeedLineage& seed) {
  return build_sigma_p(h, p, K, samples, seed).sigma_p;
}

AsymptoticTable AsymptoticTable::build(const AsymptoticTableParams& params) {
  if (params.h_count < 2) throw DomainError("table grid needs at least 2 nodes");
  if (!(params.h_at(0) > 0.0) || !(params.h_at(params.h_count - 1) < 1.0)) {
    throw DomainError("table grid must stay inside (0,1)");
  }
  AsymptoticTable t;
  t.params_ = params;
  t.sigma_.resize(params.h_count);
  t.sigma_se_.resize(params.h_count);
  t.sigma_p_.resize(params.h_count);
  t.gamma_.resize(params.h_count);
  t.gamma_trunc_err_.resize(params.h_count);
  std::vector<int> floored(params.h_count, 0);

  const std::uint64_t node_stride = static_cast<std::uint64_t>(params.p) *
                                    params.p * (2 * params.K + 2);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < params.h_count; ++k) {
    const HurstValue h(params.h_at(k));
    SeedLineage node_seed{params.seed, static_cast<std::uint64_t>(k) * node_stride,
                          RandomStream::kAsymptoticMc};
    SigmaBuild sb = build_sigma_p(h, params.p, params.K, params.samples, node_seed);
    t.sigma_[k] = std::move(sb.sigma);
    t.sigma_se_[k] = std::move(sb.se);
    t.sigma_p_[k] = std::move(sb.sigma_p);
    floored[k] = sb.floored ? 1 : 0;
    t.gamma_[k] = gamma_matrix(h, params.p, second_difference_filter(),
                               params.truncation, &t.gamma_trunc_err_[k]);
  }
  for (int k = 0; k < params.h_count; ++k) {
    if (floored[k]) t.floored_nodes_.push_back(k);
  }
  return t;
}

namespace {

Eigen::MatrixXd interpolate(const std::vector<Eigen::MatrixXd>& nodes,
                            const AsymptoticTableParams& params, double h) {
  const double lo = params.h_at(0);
  const double hi = params.h_at(params.h_count - 1);
  const double x = std::clamp(h, lo, hi);
  const double pos = (x - lo) / params.h_step;
  int k = static_cast<int>(pos);
  k = std::clamp(k, 0, params.h_count - 2);
  const double w = pos - k;
  return (1.0 - w) * nodes[k] + w * nodes[k + 1];
}

}  // namespace

Eigen::MatrixXd AsymptoticTable::sigma_p_at(double h) const {
  return interpolate(sigma_p_, params_, h);
}

Eigen::MatrixXd AsymptoticTable::gamma_at(double h) const {
  return interpolate(gamma_, params_, h);
}

Eigen::VectorXd qv_contrast(int p) {
  if (p < 2) throw DomainError("the log-variation regression needs p >= 2");
  Eigen::VectorXd a(p);
  for (int i = 1; i <= p; ++i) a[i - 1] = std::log(static_cast<double>(i));
  a.array() -= a.mean();
  return a;
}

namespace {

double clt_variance_at(EstimatorKind kind, double h, int p,
                       const AsymptoticTable& table) {
  const bool ratio = kind == EstimatorKind::kIr || kind == EstimatorKind::kIr2;
  return clt_variance(kind, ratio ? table.sigma_p_at(h) : Eigen::MatrixXd(),
                      ratio ? Eigen::MatrixXd() : table.gamma_at(h), p);
}

}  // namespace

double clt_variance(EstimatorKind kind, const Eigen::MatrixXd& sigma_p,
                    const Eigen::MatrixXd& gamma, int p) {
  switch (kind) {
    case EstimatorKind::kIr:
      return sigma_p(0, 0);
    case EstimatorKind::kIr2: {
      const Eigen::MatrixXd s = sigma_p.topLeftCorner(p, p);
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(p);
      return 1.0 / (ones.transpose() * s.ldlt().solve(ones))(0, 0);
    }
    case EstimatorKind::kQv: {
      const Eigen::MatrixXd g = gamma.topLeftCorner(p, p);
      const Eigen::VectorXd a = qv_contrast(p);
      const double aa = a.squaredNorm();
      return (a.transpose() * g * a)(0, 0) / (4.0 * aa * aa);
    }
    case EstimatorKind::kQv2: {
      const Eigen::MatrixXd g = gamma.topLeftCorner(p, p);
      Eigen::MatrixXd z(2, p);
      for (int i = 1; i <= p; ++i) {
        z(0, i - 1) = std::log(static_cast<double>(i));
        z(1, i - 1) = 1.0;
      }
      const Eigen::MatrixXd m = z * g.ldlt().solve(z.transpose());
      // Slope component; invariant under rescaling the design times.
      return 0.25 * m.inverse()(0, 0);
    }
  }
  throw DomainError("unknown estimator kind");
}

double clt_variance(EstimatorKind kind, double h, int p, const AsymptoticTable& table) {
  if (!table.contains(h)) {
    throw OutOfTableRange("h is outside the asymptotic table grid");
  }
  if (p > table.params().p) {
    throw DomainError("requested p exceeds the table's p");
  }
  // Interpolate the final scalar between the bracketing nodes.
  const auto& params = table.params();
  const double pos = (h - params.h_at(0)) / params.h_step;
  int k = std::clamp(static_cast<int>(pos), 0, params.h_count - 2);
  const double w = pos - k;
  const double v0 = clt_variance_at(kind, params.h_at(k), p, table);
  if (w <= 0.0) return v0;
  const double v1 = clt_variance_at(kind, params.h_at(k + 1), p, table);
  return (1.0 - w) * v0 + w * v1;
}

double clt_stderr(EstimatorKind kind, HurstValue h, int n, double alpha, int p,
                  const AsymptoticTable& table) {
  if (n < 4) throw DomainError("clt_stderr requires n >= 4");
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw DomainError("alpha must lie in (0,1)");
  }
  const double v = clt_variance(kind, h.value(), p, table);
  return std::sqrt(v / (2.0 * std::pow(static_cast<double>(n), 1.0 - alpha)));
}

// ---- disk cache ----

struct AsymptoticTableIo {
  static void save(const AsymptoticTable& t, const std::filesystem::path& dir);
  static AsymptoticTable load(const std::filesystem::path& dir);
};

void AsymptoticTableIo::save(const AsymptoticTable& t,
                             const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto& params = t.params_;

  {
    std::FILE* f = std::fopen((dir / "sigma_p.csv").string().c_str(), "w");
    if (!f) throw Error("cannot write " + (dir / "sigma_p.csv").string());
    std::fprintf(f, "h,i,j,sigma,se,sigma_p\n");
    for (int k = 0; k < params.h_count; ++k) {
      for (int i = 0; i < params.p; ++i) {
        for (int j = 0; j < params.p; ++j) {
          write_double(f, params.h_at(k));
          std::fprintf(f, ",%d,%d,", i + 1, j + 1);
          write_double(f, t.sigma_[k](i, j));
          std::fputc(',', f);
          write_double(f, t.sigma_se_[k](i, j));
          std::fputc(',', f);
          write_double(f, t.sigma_p_[k](i, j));
          std::fputc('\n', f);
        }
      }
    }
    std::fclose(f);
  }
  {
    std::FILE* f = std::fopen((dir / "gamma.csv").string().c_str(), "w");
    if (!f) throw Error("cannot write " + (dir / "gamma.csv").string());
    std::fprintf(f, "h,i,j,gamma,trunc_err\n");
    for (int k = 0; k < params.h_count; ++k) {
      for (int i = 0; i < params.p; ++i) {
        for (int j = 0; j < params.p; ++j) {
          write_double(f, params.h_at(k));
          std::fprintf(f, ",%d,%d,", i + 1, j + 1);
          write_double(f, t.gamma_[k](i, j));
          std::fputc(',', f);
          write_double(f, t.gamma_trunc_err_[k]);
          std::fputc('\n', f);
        }
      }
    }
    std::fclose(f);
  }
  nlohmann::json meta{{"h_lo", params.h_lo},
                      {"h_step", params.h_step},
                      {"h_count", params.h_count},
                      {"p", params.p},
                      {"K", params.K},
                      {"samples", params.samples},
                      {"seed", params.seed},
                      {"truncation", params.truncation},
                      {"floored_nodes", t.floored_nodes_},
                      {"version", kVersion}};
  std::ofstream out(dir / "meta.json");
  out << meta.dump(2) << "\n";
}

AsymptoticTable AsymptoticTableIo::load(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::ifstream meta_in(dir / "meta.json");
  if (!meta_in) throw Error("no table cache at " + dir.string());
  nlohmann::json meta = nlohmann::json::parse(meta_in);

  AsymptoticTable t;
  t.params_.h_lo = meta.at("h_lo").get<double>();
  t.params_.h_step = meta.at("h_step").get<double>();
  t.params_.h_count = meta.at("h_count").get<int>();
  t.params_.p = meta.at("p").get<int>();
  t.params_.K = meta.at("K").get<int>();
  t.params_.samples = meta.at("samples").get<long>();
  t.params_.seed = meta.at("seed").get<std::uint64_t>();
  t.params_.truncation = meta.at("truncation").get<int>();
  t.floored_nodes_ = meta.at("floored_nodes").get<std::vector<int>>();

  const int count = t.params_.h_count;
  const int p = t.params_.p;
  const auto init = [&](std::vector<Eigen::MatrixXd>& v) {
    v.assign(count, Eigen::MatrixXd::Zero(p, p));
  };
  init(t.sigma_);
  init(t.sigma_se_);
  init(t.sigma_p_);
  init(t.gamma_);
  t.gamma_trunc_err_.assign(count, 0.0);

  const auto read_csv = [&](const fs::path& file, bool is_sigma) {
    std::ifstream in(file);
    if (!in) throw Error("missing table file " + file.string());
    std::string line;
    std::getline(in, line);  // header
    int rows = 0;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::string tok;
      double vals[4] = {0, 0, 0, 0};
      int i = 0, j = 0;
      std::getline(ls, tok, ',');
      const double h = std::stod(tok);
      std::getline(ls, tok, ',');
      i = std::stoi(tok);
      std::getline(ls, tok, ',');
      j = std::stoi(tok);
      for (int c = 0; c < (is_sigma ? 3 : 2); ++c) {
        if (!std::getline(ls, tok, ',')) throw Error("short row in " + file.string());
        vals[c] = std::stod(tok);
      }
      const int k = static_cast<int>(
          std::lround((h - t.params_.h_lo) / t.params_.h_step));
      if (k < 0 || k >= count || i < 1 || i > p || j < 1 || j > p) {
        throw Error("table row outside declared grid in " + file.string());
      }
      if (is_sigma) {
        t.sigma_[k](i - 1, j - 1) = vals[0];
        t.sigma_se_[k](i - 1, j - 1) = vals[1];
        t.sigma_p_[k](i - 1, j - 1) = vals[2];
      } else {
        t.gamma_[k](i - 1, j - 1) = vals[0];
        t.gamma_trunc_err_[k] = vals[1];
      }
      ++rows;
    }
    if (rows != count * p * p) throw Error("row count mismatch in " + file.string());
  };
  read_csv(dir / "sigma_p.csv", true);
  read_csv(dir / "gamma.csv", false);
  return t;
}

void AsymptoticTable::save(const std::filesystem::path& dir) const {
  AsymptoticTableIo::save(*this, dir);
}

AsymptoticTable AsymptoticTable::load(const std::filesystem::path& dir) {
  return AsymptoticTableIo::load(dir);
}

AsymptoticTable AsymptoticTable::load_or_build(const std::filesystem::path& dir,
                                               const AsymptoticTableParams& params) {
  try {
    AsymptoticTable t = load(dir);
    if (t.params_ == params) return t;
  } catch (const std::exception&) {
    // missing or corrupt cache; fall through to a fresh build
  }
  AsymptoticTable t = build(params);
  t.save(dir);
  return t;
}

}  // namespace hurstlab
