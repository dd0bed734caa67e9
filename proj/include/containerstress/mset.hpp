#pragma once

#include <string>
#include <vector>

#include "containerstress/backends.hpp"
#include "containerstress/kernels.hpp"
#include "containerstress/signals.hpp"
#include "containerstress/types.hpp"

namespace cstress {

/// Relative eigenvalue cutoff for the Gram pseudo-inverse.
inline constexpr double kEigenvalueCutoff = 1e-10;

/// Floor applied to per-signal scales so zero-variance channels stay finite.
inline constexpr double kScaleFloor = 1e-12;

/// Memory vectors: one training observation per column (n_signals rows,
/// m columns), plus the training-row index each column came from.
struct MemoryMatrix {
  Matrix D;
  std::vector<Index> source_indices;

  Index n_signals() const { return D.rows(); }
  Index n_memory() const { return D.cols(); }
};

struct SymmetricEig {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // orthonormal columns, aligned with eigenvalues
};

/// Symmetric eigendecomposition satisfying
///   ||G V - V diag(L)||_F <= 1e-8 ||G||_F  and  ||V^T V - I||_F <= 1e-9.
/// Input must be symmetric to 1e-9 relative. Throws EigFailure when the
/// solver does not converge.
SymmetricEig symmetric_eig(const Matrix& G);

/// Two-stage deterministic selection: per-signal extrema first
/// (earliest index wins ties), then an equal-stride fill across the
/// remaining vectors sorted by Euclidean norm.
MemoryMatrix select_memory_vectors(const SignalMatrix& training, Index m);

/// Immutable after training; shareable across threads.
struct TrainedModel {
  MemoryMatrix memory;       // raw signal units
  KernelConfig kernel;       // bandwidth resolved
  Matrix gram_pinv;          // m x m eigendecomposition-based pseudo-inverse
  Vector eigen_spectrum;     // all m eigenvalues of G, ascending
  Index rank = 0;            // eigenvalues above the relative cutoff
  Vector signal_scale;       // per-signal normalization applied before kernels
  Matrix memory_normalized;  // memory.D with rows divided by signal_scale

  Index n_signals() const { return memory.n_signals(); }
  Index n_memory() const { return memory.n_memory(); }
};

struct EstimationResult {
  Matrix estimates;  // observations x signals
  Matrix residuals;  // observed - estimate
};

/// Delegates the pairwise-similarity operator to the selected backend.
inline Matrix similarity_matrix(const Matrix& A, const Matrix& B,
                                const KernelConfig& cfg,
                                const BackendId& backend) {
  return sim_matrix(A, B, cfg, backend);
}

/// Select memory vectors, compute the kernel Gram matrix G = D (x) D,
/// eigendecompose, and retain the pseudo-inverse with eigenvalues above
/// kEigenvalueCutoff * lambda_max.
TrainedModel train(const SignalMatrix& training, Index m,
                   const KernelConfig& cfg, const BackendId& backend);

/// Batched estimation: for each observation x, w = G+ sim(D, x) and
/// x_est = D w, in normalized signal space. Residual = observed - estimate.
EstimationResult estimate(const TrainedModel& model,
                          const SignalMatrix& observations,
                          const BackendId& backend);

/// Versioned binary model file (magic "CSM1", little-endian) plus a JSON
/// metadata sidecar at path + ".json".
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace cstress
