#include "containerstress/signals.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <sstream>

#include "containerstress/rng.hpp"

namespace cstress {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double population_std(const Eigen::Ref<const Vector>& x) {
  const double mean = x.mean();
  return std::sqrt((x.array() - mean).square().sum() / static_cast<double>(x.size()));
}

/// Fleishman moment system for unit-variance output on standard-normal
/// input. Residuals are (variance - 1, skewness - g1, excess kurtosis - g2).
void fleishman_residual(double b, double c, double d, double g1, double g2,
                        Eigen::Vector3d& f, Eigen::Matrix3d& jac) {
  const double var = b * b + 6.0 * b * d + 2.0 * c * c + 15.0 * d * d;
  const double skew = 2.0 * c * (b * b + 24.0 * b * d + 105.0 * d * d + 2.0);
  const double kurt_core =
      b * d + c * c * (1.0 + b * b + 28.0 * b * d) +
      d * d * (12.0 + 48.0 * b * d + 141.0 * c * c + 225.0 * d * d);

  f << var - 1.0, skew - g1, 24.0 * kurt_core - g2;

  jac(0, 0) = 2.0 * b + 6.0 * d;
  jac(0, 1) = 4.0 * c;
  jac(0, 2) = 6.0 * b + 30.0 * d;

  jac(1, 0) = 2.0 * c * (2.0 * b + 24.0 * d);
  jac(1, 1) = 2.0 * (b * b + 24.0 * b * d + 105.0 * d * d + 2.0);
  jac(1, 2) = 2.0 * c * (24.0 * b + 210.0 * d);

  jac(2, 0) = 24.0 * (d + c * c * (2.0 * b + 28.0 * d) + 48.0 * d * d * d);
  jac(2, 1) = 24.0 * (2.0 * c * (1.0 + b * b + 28.0 * b * d) + 282.0 * c * d * d);
  jac(2, 2) = 24.0 * (b + 28.0 * b * c * c +
                      2.0 * d * (12.0 + 48.0 * b * d + 141.0 * c * c + 225.0 * d * d) +
                      d * d * (48.0 * b + 450.0 * d));
}

}  // namespace

SignalSpec SignalSpec::uniform(Index n_signals, Index n_observations, double phi,
                               double rho, double variance, double skewness,
                               double kurtosis, std::uint64_t seed) {
  SignalSpec spec;
  spec.n_signals = n_signals;
  spec.n_observations = n_observations;
  spec.ar_coefficient = phi;
  spec.cross_correlation = Matrix::Constant(n_signals, n_signals, rho);
  spec.cross_correlation.diagonal().setOnes();
  spec.variance_target = Vector::Constant(n_signals, variance);
  spec.skewness_target = Vector::Constant(n_signals, skewness);
  spec.kurtosis_target = Vector::Constant(n_signals, kurtosis);
  spec.seed = seed;
  return spec;
}

void SignalSpec::validate() const {
  if (n_signals < 1) throw ConfigError("SignalSpec: n_signals must be >= 1");
  if (n_observations < 1)
    throw ConfigError("SignalSpec: n_observations must be >= 1");
  if (!(std::abs(ar_coefficient) < 1.0))
    throw ConfigError("SignalSpec: ar_coefficient must lie in (-1, 1)");
  if (cross_correlation.rows() != n_signals ||
      cross_correlation.cols() != n_signals)
    throw ConfigError("SignalSpec: cross_correlation has wrong dimensions");
  if (!cross_correlation.isApprox(cross_correlation.transpose(), 1e-12))
    throw BadCorrelation("SignalSpec: cross_correlation is not symmetric");
  for (Index i = 0; i < n_signals; ++i) {
    if (std::abs(cross_correlation(i, i) - 1.0) > 1e-12)
      throw BadCorrelation("SignalSpec: cross_correlation diagonal must be 1");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(cross_correlation,
                                           Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < -1e-10)
    throw BadCorrelation(
        "SignalSpec: cross_correlation has eigenvalues below -1e-10");
  if (variance_target.size() != n_signals ||
      skewness_target.size() != n_signals ||
      kurtosis_target.size() != n_signals)
    throw ConfigError("SignalSpec: per-signal target vectors have wrong size");
  for (Index s = 0; s < n_signals; ++s) {
    if (!(variance_target[s] > 0.0))
      throw ConfigError("SignalSpec: variance_target must be > 0");
    const double bound = skewness_target[s] * skewness_target[s] + 1.0;
    if (!(kurtosis_target[s] > bound)) {
      std::ostringstream msg;
      msg << "SignalSpec: kurtosis_target " << kurtosis_target[s]
          << " for signal " << s << " violates the Pearson bound (must exceed "
          << "skewness^2 + 1 = " << bound << ")";
      throw MomentInfeasible(msg.str());
    }
  }
}

FleishmanCoeffs solve_fleishman(double skewness, double kurtosis) {
  const double g1 = skewness;
  const double g2 = kurtosis - 3.0;

  Eigen::Vector3d x(1.0, 0.0, 0.0);  // (b, c, d)
  Eigen::Vector3d f;
  Eigen::Matrix3d jac;
  fleishman_residual(x[0], x[1], x[2], g1, g2, f, jac);

  constexpr int kMaxIterations = 200;
  constexpr double kTol = 1e-10;

  for (int it = 0; it < kMaxIterations; ++it) {
    if (f.lpNorm<Eigen::Infinity>() < kTol) {
      FleishmanCoeffs out;
      out.b = x[0];
      out.c = x[1];
      out.d = x[2];
      out.a = -out.c;
      return out;
    }
    const Eigen::Vector3d step = jac.fullPivLu().solve(f);
    if (!step.allFinite()) break;

    // Backtracking: halve the step until the residual norm drops.
    const double f0 = f.squaredNorm();
    double lambda = 1.0;
    Eigen::Vector3d x_next;
    Eigen::Vector3d f_next;
    Eigen::Matrix3d jac_next;
    bool accepted = false;
    while (lambda >= 1.0 / 1024.0) {
      x_next = x - lambda * step;
      fleishman_residual(x_next[0], x_next[1], x_next[2], g1, g2, f_next,
                         jac_next);
      if (f_next.allFinite() && f_next.squaredNorm() < f0) {
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) break;
    x = x_next;
    f = f_next;
    jac = jac_next;
  }

  if (f.lpNorm<Eigen::Infinity>() < kTol) {
    FleishmanCoeffs out;
    out.b = x[0];
    out.c = x[1];
    out.d = x[2];
    out.a = -out.c;
    return out;
  }
  std::ostringstream msg;
  msg << "no real Fleishman solution for skewness " << skewness
      << ", kurtosis " << kurtosis;
  throw MomentInfeasible(msg.str());
}

PsdRepairResult nearest_psd_repair(const Matrix& corr, double jitter_cap) {
  if (corr.rows() != corr.cols())
    throw BadCorrelation("nearest_psd_repair: matrix is not square");
  if (!corr.isApprox(corr.transpose(), 1e-12))
    throw BadCorrelation("nearest_psd_repair: matrix is not symmetric");
  for (Index i = 0; i < corr.rows(); ++i) {
    if (std::abs(corr(i, i) - 1.0) > 1e-12)
      throw BadCorrelation("nearest_psd_repair: diagonal must be 1");
  }

  auto attempt = [&corr](double jitter, PsdRepairResult& out) {
    Matrix candidate = corr;
    if (jitter > 0.0) {
      candidate.diagonal().array() += jitter;
      candidate /= (1.0 + jitter);  // re-normalize the unit diagonal
      candidate.diagonal().setOnes();
    }
    Eigen::LLT<Matrix> llt(candidate);
    if (llt.info() != Eigen::Success) return false;
    out.matrix = std::move(candidate);
    out.jitter = jitter;
    return true;
  };

  PsdRepairResult result;
  if (attempt(0.0, result)) return result;
  double last_tried = 0.0;
  for (double jitter = 1e-12; jitter <= jitter_cap; jitter *= 100.0) {
    if (attempt(jitter, result)) return result;
    last_tried = jitter;
  }
  if (jitter_cap > last_tried && attempt(jitter_cap, result)) return result;

  std::ostringstream msg;
  msg << "correlation matrix not positive semidefinite within jitter cap "
      << jitter_cap;
  throw BadCorrelation(msg.str());
}

SignalMatrix synthesize(const SignalSpec& spec) {
  spec.validate();

  const Index n = spec.n_signals;
  const Index N = spec.n_observations;

  // (1) Independent standard-Gaussian AR(1) streams, one substream per
  // channel, burn-in discarded. (2) Standardized to zero mean and unit
  // population variance.
  Matrix z(N, n);
  for (Index s = 0; s < n; ++s) {
    GaussianStream gauss(derive_seed(spec.seed, {static_cast<std::uint64_t>(s)}));
    const double phi = spec.ar_coefficient;
    double state = gauss.next();
    for (Index t = 0; t < kBurnInSamples; ++t) state = phi * state + gauss.next();
    for (Index t = 0; t < N; ++t) {
      state = phi * state + gauss.next();
      z(t, s) = state;
    }
    const double mean = z.col(s).mean();
    double sd = population_std(z.col(s));
    if (sd <= 0.0) sd = 1.0;  // N == 1 degenerate stream
    z.col(s) = (z.col(s).array() - mean) / sd;
  }

  // (3) Cross-sectional mixing through the Cholesky factor.
  if (n > 1) {
    const PsdRepairResult repaired =
        nearest_psd_repair(spec.cross_correlation, kCorrelationJitterCap);
    const Matrix chol_lower = Eigen::LLT<Matrix>(repaired.matrix).matrixL();
    z = z * chol_lower.transpose();
  }

  // (4) Per-channel Fleishman cubic, (5) scaled to the variance target.
  SignalMatrix out;
  out.data.resize(N, n);
  for (Index s = 0; s < n; ++s) {
    const FleishmanCoeffs fc =
        solve_fleishman(spec.skewness_target[s], spec.kurtosis_target[s]);
    out.data.col(s) =
        z.col(s).unaryExpr([&fc](double v) {
          return fc.a + v * (fc.b + v * (fc.c + v * fc.d));
        });
    double sd = population_std(out.data.col(s));
    if (sd <= 0.0) sd = 1.0;
    out.data.col(s) *= std::sqrt(spec.variance_target[s]) / sd;
  }
  out.spec = spec;
  return out;
}

MomentReport moment_report(const SignalMatrix& m) {
  const Index N = m.n_observations();
  const Index n = m.n_signals();
  if (N < 8) throw TooFewSamples("moment_report: need at least 8 observations");

  MomentReport report;
  report.mean.resize(n);
  report.variance.resize(n);
  report.skewness.resize(n);
  report.kurtosis.resize(n);
  report.lag1_autocorr.resize(n);
  report.cross_correlation.resize(n, n);

  const double dN = static_cast<double>(N);
  Matrix centered(N, n);
  for (Index s = 0; s < n; ++s) {
    const double mean = m.data.col(s).mean();
    centered.col(s) = m.data.col(s).array() - mean;
    const double m2 = centered.col(s).squaredNorm() / dN;
    const double m3 = centered.col(s).array().cube().sum() / dN;
    const double m4 = centered.col(s).array().square().square().sum() / dN;

    report.mean[s] = mean;
    report.variance[s] = m2;
    if (m2 > 0.0) {
      report.skewness[s] = m3 / std::pow(m2, 1.5);
      report.kurtosis[s] = m4 / (m2 * m2);
      report.lag1_autocorr[s] =
          (centered.col(s).head(N - 1).array() * centered.col(s).tail(N - 1).array())
              .sum() /
          (m2 * dN);
    } else {
      report.skewness[s] = kNaN;
      report.kurtosis[s] = kNaN;
      report.lag1_autocorr[s] = kNaN;
    }
  }

  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double denom =
          std::sqrt(report.variance[i] * report.variance[j]) * dN;
      report.cross_correlation(i, j) =
          denom > 0.0 ? centered.col(i).dot(centered.col(j)) / denom : kNaN;
    }
  }
  return report;
}

}  // namespace cstress
