#pragma once

#include <cstdint>
#include <optional>

#include "containerstress/errors.hpp"
#include "containerstress/types.hpp"

namespace cstress {

/// Samples discarded from the head of every AR(1) stream before use.
inline constexpr Index kBurnInSamples = 1000;

/// Largest diagonal jitter synthesize() will apply when the requested
/// correlation matrix is not numerically positive semidefinite.
inline constexpr double kCorrelationJitterCap = 1e-6;

/// Target statistics for one synthesized multivariate series.
///
/// The serial-correlation coefficient applies to all channels; the
/// moment targets are per channel. Kurtosis here is the raw
/// standardized fourth moment (3 for a Gaussian).
struct SignalSpec {
  Index n_signals = 0;
  Index n_observations = 0;
  double ar_coefficient = 0.0;  // lag-1 target, in (-1, 1)
  Matrix cross_correlation;     // n_signals x n_signals, unit diagonal
  Vector variance_target;       // per signal, > 0
  Vector skewness_target;       // per signal
  Vector kurtosis_target;       // per signal, > 1 + skew^2
  std::uint64_t seed = 0;

  /// Spec with one scalar target broadcast to every channel and a
  /// uniform off-diagonal correlation rho.
  static SignalSpec uniform(Index n_signals, Index n_observations, double phi,
                            double rho, double variance, double skewness,
                            double kurtosis, std::uint64_t seed);

  /// Throws ConfigError / BadCorrelation when an invariant is violated.
  void validate() const;
};

/// Multivariate time series, rows = observations in time order,
/// columns = signals. `spec` is absent for externally loaded data.
struct SignalMatrix {
  Matrix data;
  std::optional<SignalSpec> spec;

  Index n_observations() const { return data.rows(); }
  Index n_signals() const { return data.cols(); }
};

/// Sample statistics of a SignalMatrix. Moments are population
/// (divide-by-N) central moments; skewness and kurtosis are
/// standardized and reported as NaN for zero-variance channels.
struct MomentReport {
  Vector mean;
  Vector variance;
  Vector skewness;
  Vector kurtosis;          // raw standardized fourth moment
  Vector lag1_autocorr;
  Matrix cross_correlation;  // Pearson, NaN where a channel is constant
};

/// Cubic transform coefficients a + b z + c z^2 + d z^3 matching a
/// (skewness, kurtosis) target on standard-normal input (a = -c).
struct FleishmanCoeffs {
  double a = 0.0;
  double b = 1.0;
  double c = 0.0;
  double d = 0.0;
};

/// Solves the three-equation Fleishman moment system by damped Newton
/// iteration (tolerance 1e-10, 200 iterations). Throws MomentInfeasible
/// when no real solution is found.
FleishmanCoeffs solve_fleishman(double skewness, double kurtosis);

struct PsdRepairResult {
  Matrix matrix;
  double jitter = 0.0;  // diagonal jitter that made Cholesky succeed
};

/// Adds the smallest diagonal jitter from {0, 1e-12, 1e-10, ...,
/// jitter_cap} that makes a Cholesky factorization succeed, then
/// re-normalizes the diagonal to 1. Throws BadCorrelation if the matrix
/// is still not factorizable at jitter_cap.
PsdRepairResult nearest_psd_repair(const Matrix& corr, double jitter_cap);

/// Deterministic synthesis: independent standard-Gaussian AR(1) streams
/// per channel (1000-sample burn-in), standardized, mixed through the
/// Cholesky factor of the target correlation, pushed through a
/// per-channel Fleishman cubic, and scaled to the variance target.
SignalMatrix synthesize(const SignalSpec& spec);

/// Sample statistics; throws TooFewSamples below 8 observations.
MomentReport moment_report(const SignalMatrix& m);

}  // namespace cstress
