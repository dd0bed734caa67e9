#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "containerstress/errors.hpp"
#include "containerstress/types.hpp"

namespace cstress {

enum class KernelKind { inverse_distance, gaussian };

inline std::string to_string(KernelKind k) {
  return k == KernelKind::inverse_distance ? "inverse_distance" : "gaussian";
}

/// Similarity kernel configuration. When no bandwidth is given, it is
/// resolved to sqrt(n_signals) at training time.
struct KernelConfig {
  KernelKind kind = KernelKind::inverse_distance;
  std::optional<double> bandwidth;  // > 0 when set

  void validate() const {
    if (bandwidth && !(*bandwidth > 0.0))
      throw ConfigError("kernel bandwidth must be > 0");
  }

  /// Concrete config for a given signal count.
  KernelConfig resolved(Index n_signals) const {
    KernelConfig out = *this;
    if (!out.bandwidth) out.bandwidth = std::sqrt(static_cast<double>(n_signals));
    return out;
  }
};

/// Scalar element of the similarity operator: maps the Euclidean
/// distance between two observation vectors into (0, 1], with 1 iff the
/// vectors coincide.
template <typename DerivedA, typename DerivedB>
double kernel_eval(const Eigen::MatrixBase<DerivedA>& x,
                   const Eigen::MatrixBase<DerivedB>& y,
                   const KernelConfig& cfg) {
  if (x.size() != y.size())
    throw ShapeError("kernel_eval: vectors have different sizes");
  const double h = cfg.bandwidth.value();
  const double d2 = (x - y).squaredNorm();
  if (cfg.kind == KernelKind::gaussian) return std::exp(-d2 / (2.0 * h * h));
  return 1.0 / (1.0 + std::sqrt(d2) / h);
}

/// Distance-squared to similarity, shared by the compute backends so
/// every backend applies the identical nonlinear map.
inline double kernel_from_d2(double d2, KernelKind kind, double h) {
  if (kind == KernelKind::gaussian) return std::exp(-d2 / (2.0 * h * h));
  return 1.0 / (1.0 + std::sqrt(d2) / h);
}

}  // namespace cstress
