#pragma once

#include <string>

#include "containerstress/kernels.hpp"
#include "containerstress/types.hpp"

namespace cstress {

/// Identifies a compute backend. The reference backend is the
/// correctness oracle; the optimized backend is tiled and
/// multi-threaded with a fixed in-tile accumulation order, so its
/// results do not depend on the worker count.
struct BackendId {
  enum class Kind { reference, optimized };

  Kind kind = Kind::reference;
  int worker_count = 1;  // optimized only, >= 1
  int tile_size = 64;    // optimized only, elements per tile edge in [8, 1024]

  static BackendId reference() { return BackendId{}; }

  /// workers == 0 selects the hardware thread count.
  static BackendId optimized(int workers = 0, int tile = 64);

  void validate() const;
  std::string label() const;

  /// Accepts "reference", "optimized" or "optimized[tile=T,workers=W]".
  static BackendId parse(const std::string& token);

  bool operator==(const BackendId& other) const = default;
};

struct BackendCapabilities {
  BackendId id;
  bool deterministic_summation = true;
  std::string description;
};

BackendCapabilities capabilities(const BackendId& id);

/// Pairwise similarities between the columns of A (n x p) and B (n x q);
/// entry (i, j) = kernel(col i of A, col j of B). Straight triple loop,
/// left-to-right accumulation; the oracle for every other backend.
Matrix sim_matrix_reference(const Matrix& A, const Matrix& B,
                            const KernelConfig& cfg);

/// Same result within 1e-12 relative, tiled over output blocks with the
/// depth accumulation blocked and strip-vectorized, tiles spread across
/// workers. Results are identical for every worker_count.
Matrix sim_matrix_optimized(const Matrix& A, const Matrix& B,
                            const KernelConfig& cfg, int tile_size,
                            int worker_count);

/// Backend dispatch for the similarity operator.
Matrix sim_matrix(const Matrix& A, const Matrix& B, const KernelConfig& cfg,
                  const BackendId& backend);

/// Dense product A (p x m) * B (m x q) with the same backend guarantees.
Matrix matmul(const Matrix& A, const Matrix& B, const BackendId& backend);

/// Weight solve for observation batches: equals matmul(G_pinv, S).
Matrix batched_solve(const Matrix& G_pinv, const Matrix& S,
                     const BackendId& backend);

}  // namespace cstress
