#include "containerstress/backends.hpp"

#include <algorithm>
#include <sstream>
#include <thread>
#include <vector>

#include "containerstress/errors.hpp"

namespace cstress {

namespace {

// Depth-blocking length for the tiled kernels; keeps a tile's working
// set of A/B column strips L2-resident.
constexpr Index kDepthBlock = 128;

int hardware_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void check_same_rows(const Matrix& A, const Matrix& B, const char* op) {
  if (A.rows() != B.rows()) {
    std::ostringstream msg;
    msg << op << ": row counts differ (" << A.rows() << " vs " << B.rows()
        << ")";
    throw ShapeError(msg.str());
  }
}

/// Squared distance between two contiguous columns over [k0, k1), four
/// independent accumulator strips combined in a fixed order.
double strip_d2(const double* a, const double* b, Index k0, Index k1) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  Index k = k0;
  for (; k + 4 <= k1; k += 4) {
    const double d0 = a[k] - b[k];
    const double d1 = a[k + 1] - b[k + 1];
    const double d2 = a[k + 2] - b[k + 2];
    const double d3 = a[k + 3] - b[k + 3];
    acc0 += d0 * d0;
    acc1 += d1 * d1;
    acc2 += d2 * d2;
    acc3 += d3 * d3;
  }
  for (; k < k1; ++k) {
    const double d = a[k] - b[k];
    acc0 += d * d;
  }
  return (acc0 + acc1) + (acc2 + acc3);
}

/// Runs fn(first_tile, last_tile) over a tile index range split into
/// contiguous chunks, one per worker. The chunking depends only on the
/// tile count, never on scheduling.
template <typename Fn>
void parallel_tiles(Index n_tiles, int worker_count, Fn&& fn) {
  const int workers =
      static_cast<int>(std::min<Index>(worker_count, std::max<Index>(n_tiles, 1)));
  if (workers <= 1) {
    fn(Index{0}, n_tiles);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const Index first = n_tiles * w / workers;
    const Index last = n_tiles * (w + 1) / workers;
    pool.emplace_back([&fn, first, last] { fn(first, last); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

BackendId BackendId::optimized(int workers, int tile) {
  BackendId id;
  id.kind = Kind::optimized;
  id.worker_count = workers == 0 ? hardware_workers() : workers;
  id.tile_size = tile;
  id.validate();
  return id;
}

void BackendId::validate() const {
  if (kind == Kind::reference) return;
  if (worker_count < 1)
    throw ConfigError("backend worker_count must be >= 1");
  if (tile_size < 8 || tile_size > 1024)
    throw ConfigError("backend tile_size must lie in [8, 1024]");
}

std::string BackendId::label() const {
  if (kind == Kind::reference) return "reference";
  std::ostringstream out;
  out << "optimized[tile=" << tile_size << "/workers=" << worker_count << "]";
  return out.str();
}

BackendId BackendId::parse(const std::string& token) {
  if (token == "reference") return reference();
  if (token == "optimized") return optimized();
  int tile = 0;
  int workers = 0;
  if (std::sscanf(token.c_str(), "optimized[tile=%d/workers=%d]", &tile,
                  &workers) == 2) {
    return optimized(workers, tile);
  }
  throw ConfigError("unknown backend id: " + token);
}

BackendCapabilities capabilities(const BackendId& id) {
  BackendCapabilities caps;
  caps.id = id;
  caps.deterministic_summation = true;
  if (id.kind == BackendId::Kind::reference) {
    caps.description = "scalar triple loop, left-to-right accumulation";
  } else {
    std::ostringstream d;
    d << "tiled (" << id.tile_size << "x" << id.tile_size
      << ") multi-threaded (" << id.worker_count
      << " workers), depth-blocked strip accumulation";
    caps.description = d.str();
  }
  return caps;
}

Matrix sim_matrix_reference(const Matrix& A, const Matrix& B,
                            const KernelConfig& cfg) {
  check_same_rows(A, B, "sim_matrix");
  const KernelConfig k = cfg.resolved(A.rows());
  const double h = k.bandwidth.value();
  const Index n = A.rows();
  const Index p = A.cols();
  const Index q = B.cols();

  Matrix out(p, q);
  for (Index j = 0; j < q; ++j) {
    const double* bj = B.col(j).data();
    for (Index i = 0; i < p; ++i) {
      const double* ai = A.col(i).data();
      double d2 = 0.0;
      for (Index r = 0; r < n; ++r) {
        const double d = ai[r] - bj[r];
        d2 += d * d;
      }
      out(i, j) = kernel_from_d2(d2, k.kind, h);
    }
  }
  return out;
}

Matrix sim_matrix_optimized(const Matrix& A, const Matrix& B,
                            const KernelConfig& cfg, int tile_size,
                            int worker_count) {
  check_same_rows(A, B, "sim_matrix");
  BackendId id;
  id.kind = BackendId::Kind::optimized;
  id.tile_size = tile_size;
  id.worker_count = worker_count;
  id.validate();

  const KernelConfig k = cfg.resolved(A.rows());
  const double h = k.bandwidth.value();
  const KernelKind kind = k.kind;
  const Index n = A.rows();
  const Index p = A.cols();
  const Index q = B.cols();
  const Index T = tile_size;

  Matrix out(p, q);
  if (p == 0 || q == 0) return out;

  const Index tiles_i = (p + T - 1) / T;
  const Index tiles_j = (q + T - 1) / T;

  parallel_tiles(tiles_i * tiles_j, worker_count, [&](Index first, Index last) {
    Matrix d2_buf(T, T);
    for (Index t = first; t < last; ++t) {
      const Index ti = t / tiles_j;
      const Index tj = t % tiles_j;
      const Index i0 = ti * T;
      const Index j0 = tj * T;
      const Index ni = std::min(T, p - i0);
      const Index nj = std::min(T, q - j0);

      d2_buf.topLeftCorner(ni, nj).setZero();
      for (Index k0 = 0; k0 < n; k0 += kDepthBlock) {
        const Index k1 = std::min(n, k0 + kDepthBlock);
        for (Index j = 0; j < nj; ++j) {
          const double* bj = B.col(j0 + j).data();
          for (Index i = 0; i < ni; ++i) {
            d2_buf(i, j) += strip_d2(A.col(i0 + i).data(), bj, k0, k1);
          }
        }
      }
      for (Index j = 0; j < nj; ++j)
        for (Index i = 0; i < ni; ++i)
          out(i0 + i, j0 + j) = kernel_from_d2(d2_buf(i, j), kind, h);
    }
  });
  return out;
}

Matrix sim_matrix(const Matrix& A, const Matrix& B, const KernelConfig& cfg,
                  const BackendId& backend) {
  backend.validate();
  if (backend.kind == BackendId::Kind::reference)
    return sim_matrix_reference(A, B, cfg);
  return sim_matrix_optimized(A, B, cfg, backend.tile_size,
                              backend.worker_count);
}

namespace {

Matrix matmul_reference(const Matrix& A, const Matrix& B) {
  const Index p = A.rows();
  const Index m = A.cols();
  const Index q = B.cols();
  Matrix out = Matrix::Zero(p, q);
  for (Index j = 0; j < q; ++j) {
    double* cj = out.col(j).data();
    for (Index k = 0; k < m; ++k) {
      const double bkj = B(k, j);
      const double* ak = A.col(k).data();
      for (Index i = 0; i < p; ++i) cj[i] += ak[i] * bkj;
    }
  }
  return out;
}

Matrix matmul_optimized(const Matrix& A, const Matrix& B, int tile_size,
                        int worker_count) {
  const Index p = A.rows();
  const Index m = A.cols();
  const Index q = B.cols();
  const Index T = tile_size;

  Matrix out(p, q);
  if (p == 0 || q == 0) return out;

  const Index tiles_i = (p + T - 1) / T;
  const Index tiles_j = (q + T - 1) / T;

  parallel_tiles(tiles_i * tiles_j, worker_count, [&](Index first, Index last) {
    Matrix buf(T, T);
    for (Index t = first; t < last; ++t) {
      const Index ti = t / tiles_j;
      const Index tj = t % tiles_j;
      const Index i0 = ti * T;
      const Index j0 = tj * T;
      const Index ni = std::min(T, p - i0);
      const Index nj = std::min(T, q - j0);

      buf.topLeftCorner(ni, nj).setZero();
      for (Index k0 = 0; k0 < m; k0 += kDepthBlock) {
        const Index k1 = std::min(m, k0 + kDepthBlock);
        for (Index j = 0; j < nj; ++j) {
          double* cj = buf.col(j).data();
          for (Index k = k0; k < k1; ++k) {
            const double bkj = B(k, j0 + j);
            const double* ak = A.col(k).data() + i0;
            for (Index i = 0; i < ni; ++i) cj[i] += ak[i] * bkj;
          }
        }
      }
      out.block(i0, j0, ni, nj) = buf.topLeftCorner(ni, nj);
    }
  });
  return out;
}

}  // namespace

Matrix matmul(const Matrix& A, const Matrix& B, const BackendId& backend) {
  if (A.cols() != B.rows()) {
    std::ostringstream msg;
    msg << "matmul: inner dimensions differ (" << A.cols() << " vs "
        << B.rows() << ")";
    throw ShapeError(msg.str());
  }
  backend.validate();
  if (backend.kind == BackendId::Kind::reference) return matmul_reference(A, B);
  return matmul_optimized(A, B, backend.tile_size, backend.worker_count);
}

Matrix batched_solve(const Matrix& G_pinv, const Matrix& S,
                     const BackendId& backend) {
  if (G_pinv.cols() != S.rows())
    throw ShapeError("batched_solve: G_pinv columns must match S rows");
  return matmul(G_pinv, S, backend);
}

}  // namespace cstress
