#include "containerstress/mset.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace cstress {

namespace {

static_assert(std::endian::native == std::endian::little,
              "CSM1 model files are little-endian");

std::uint64_t fnv1a_row(const double* row_start, Index stride, Index n) {
  // FNV-1a over the raw bytes of one (strided) row.
  std::uint64_t h = 1469598103934665603ULL;
  for (Index s = 0; s < n; ++s) {
    std::uint64_t bits;
    std::memcpy(&bits, row_start + s * stride, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffULL;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

Index count_distinct_rows(const Matrix& data) {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(static_cast<std::size_t>(data.rows()) * 2);
  for (Index r = 0; r < data.rows(); ++r)
    seen.insert(fnv1a_row(data.data() + r, data.rows(), data.cols()));
  return static_cast<Index>(seen.size());
}

Vector per_signal_scale(const Matrix& data) {
  const double dN = static_cast<double>(data.rows());
  Vector scale(data.cols());
  for (Index s = 0; s < data.cols(); ++s) {
    const double mean = data.col(s).mean();
    const double var = (data.col(s).array() - mean).square().sum() / dN;
    scale[s] = std::max(std::sqrt(var), kScaleFloor);
  }
  return scale;
}

}  // namespace

SymmetricEig symmetric_eig(const Matrix& G) {
  if (G.rows() != G.cols())
    throw ShapeError("symmetric_eig: matrix is not square");
  const double magnitude = G.size() > 0 ? G.cwiseAbs().maxCoeff() : 0.0;
  const double asym =
      G.size() > 0 ? (G - G.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (asym > 1e-9 * std::max(magnitude, 1.0))
    throw ShapeError("symmetric_eig: matrix is not symmetric to 1e-9");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(G);
  if (solver.info() != Eigen::Success)
    throw EigFailure("symmetric_eig: eigensolver did not converge");
  return SymmetricEig{solver.eigenvalues(), solver.eigenvectors()};
}

MemoryMatrix select_memory_vectors(const SignalMatrix& training, Index m) {
  const Index n = training.n_signals();
  const Index N = training.n_observations();

  if (m < 2 * n) {
    std::ostringstream msg;
    msg << "select_memory_vectors: m=" << m << " violates m >= 2n with n=" << n;
    throw ConstraintViolated(msg.str());
  }
  if (m > N) {
    std::ostringstream msg;
    msg << "select_memory_vectors: m=" << m << " exceeds " << N
        << " training observations";
    throw InsufficientTraining(msg.str());
  }
  const Index distinct = count_distinct_rows(training.data);
  if (m > distinct) {
    std::ostringstream msg;
    msg << "select_memory_vectors: m=" << m << " exceeds " << distinct
        << " distinct training observations";
    throw InsufficientTraining(msg.str());
  }

  // Stage 1: per-signal extrema, earliest index on ties, min before max.
  std::vector<char> selected(static_cast<std::size_t>(N), 0);
  std::vector<Index> picked;
  picked.reserve(static_cast<std::size_t>(m));
  for (Index s = 0; s < n; ++s) {
    Index imin = 0, imax = 0;
    for (Index r = 1; r < N; ++r) {
      if (training.data(r, s) < training.data(imin, s)) imin = r;
      if (training.data(r, s) > training.data(imax, s)) imax = r;
    }
    for (Index idx : {imin, imax}) {
      if (!selected[static_cast<std::size_t>(idx)]) {
        selected[static_cast<std::size_t>(idx)] = 1;
        picked.push_back(idx);
      }
    }
  }

  // Stage 2: equal strides across the unselected vectors sorted by norm.
  const Index remaining = m - static_cast<Index>(picked.size());
  if (remaining > 0) {
    std::vector<std::pair<double, Index>> by_norm;
    by_norm.reserve(static_cast<std::size_t>(N));
    for (Index r = 0; r < N; ++r) {
      if (!selected[static_cast<std::size_t>(r)])
        by_norm.emplace_back(training.data.row(r).norm(), r);
    }
    std::sort(by_norm.begin(), by_norm.end());
    const Index pool = static_cast<Index>(by_norm.size());
    for (Index i = 0; i < remaining; ++i) {
      const Index pos = remaining == 1 ? (pool - 1) / 2
                                       : i * (pool - 1) / (remaining - 1);
      picked.push_back(by_norm[static_cast<std::size_t>(pos)].second);
    }
  }

  MemoryMatrix mem;
  mem.D.resize(n, m);
  mem.source_indices.assign(picked.begin(), picked.end());
  for (Index c = 0; c < m; ++c)
    mem.D.col(c) = training.data.row(picked[static_cast<std::size_t>(c)]).transpose();
  return mem;
}

TrainedModel train(const SignalMatrix& training, Index m,
                   const KernelConfig& cfg, const BackendId& backend) {
  TrainedModel model;
  model.memory = select_memory_vectors(training, m);
  model.kernel = cfg.resolved(training.n_signals());
  model.kernel.validate();
  model.signal_scale = per_signal_scale(training.data);

  model.memory_normalized = model.memory.D;
  for (Index s = 0; s < model.n_signals(); ++s)
    model.memory_normalized.row(s) /= model.signal_scale[s];

  const Matrix gram = sim_matrix(model.memory_normalized,
                                 model.memory_normalized, model.kernel, backend);
  const SymmetricEig eig = symmetric_eig(gram);
  model.eigen_spectrum = eig.eigenvalues;

  const double lambda_max = eig.eigenvalues[m - 1];
  const double cutoff = kEigenvalueCutoff * lambda_max;
  std::vector<Index> kept;
  for (Index i = 0; i < m; ++i)
    if (eig.eigenvalues[i] > cutoff) kept.push_back(i);
  model.rank = static_cast<Index>(kept.size());
  if (model.rank == 0)
    throw DegenerateModel("train: all Gram eigenvalues below cutoff");

  Matrix whitened(m, model.rank);
  for (Index k = 0; k < model.rank; ++k) {
    whitened.col(k) = eig.eigenvectors.col(kept[static_cast<std::size_t>(k)]) /
                      std::sqrt(eig.eigenvalues[kept[static_cast<std::size_t>(k)]]);
  }
  model.gram_pinv = matmul(whitened, whitened.transpose(), backend);
  return model;
}

EstimationResult estimate(const TrainedModel& model,
                          const SignalMatrix& observations,
                          const BackendId& backend) {
  const Index n = model.n_signals();
  if (observations.n_signals() != n) {
    std::ostringstream msg;
    msg << "estimate: observation signal count " << observations.n_signals()
        << " does not match model signal count " << n;
    throw ShapeError(msg.str());
  }
  if (model.rank < 1) throw DegenerateModel("estimate: model rank is 0");

  Matrix x_norm = observations.data.transpose();  // n x N
  for (Index s = 0; s < n; ++s) x_norm.row(s) /= model.signal_scale[s];

  const Matrix sims =
      sim_matrix(model.memory_normalized, x_norm, model.kernel, backend);
  const Matrix weights = batched_solve(model.gram_pinv, sims, backend);
  Matrix est_norm = matmul(model.memory_normalized, weights, backend);
  for (Index s = 0; s < n; ++s) est_norm.row(s) *= model.signal_scale[s];

  EstimationResult result;
  result.estimates = est_norm.transpose();
  result.residuals = observations.data - result.estimates;
  return result;
}

namespace {

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

void write_doubles(std::ofstream& out, const double* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
}

void read_doubles(std::ifstream& in, double* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(count * sizeof(double)));
}

constexpr char kModelMagic[4] = {'C', 'S', 'M', '1'};
constexpr std::uint32_t kModelVersion = 1;

}  // namespace

void save_model(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("save_model: cannot open " + path);

  const Index n = model.n_signals();
  const Index m = model.n_memory();
  out.write(kModelMagic, 4);
  write_pod(out, kModelVersion);
  write_pod(out, static_cast<std::uint64_t>(n));
  write_pod(out, static_cast<std::uint64_t>(m));
  write_pod(out, static_cast<std::uint32_t>(
                     model.kernel.kind == KernelKind::gaussian ? 1 : 0));
  write_pod(out, model.kernel.bandwidth.value());
  write_pod(out, static_cast<std::uint64_t>(model.rank));
  write_doubles(out, model.memory.D.data(), static_cast<std::size_t>(n * m));
  write_doubles(out, model.gram_pinv.data(), static_cast<std::size_t>(m * m));
  write_doubles(out, model.eigen_spectrum.data(), static_cast<std::size_t>(m));
  write_doubles(out, model.signal_scale.data(), static_cast<std::size_t>(n));
  for (Index c = 0; c < m; ++c)
    write_pod(out, static_cast<std::uint64_t>(
                       model.memory.source_indices[static_cast<std::size_t>(c)]));
  if (!out) throw IoError("save_model: write failed for " + path);
  out.close();

  nlohmann::json meta{
      {"format", "CSM1"},
      {"version", kModelVersion},
      {"n_signals", n},
      {"n_memory", m},
      {"kernel",
       {{"kind", to_string(model.kernel.kind)},
        {"bandwidth", model.kernel.bandwidth.value()}}},
      {"rank", model.rank},
  };
  std::ofstream side(path + ".json", std::ios::trunc);
  if (!side) throw IoError("save_model: cannot open " + path + ".json");
  side << meta.dump(2) << "\n";
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_model: cannot open " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kModelMagic, 4) != 0)
    throw IoError("load_model: bad magic in " + path);
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kModelVersion)
    throw IoError("load_model: unsupported version in " + path);

  const auto n = static_cast<Index>(read_pod<std::uint64_t>(in));
  const auto m = static_cast<Index>(read_pod<std::uint64_t>(in));
  const auto kind = read_pod<std::uint32_t>(in);
  const double bandwidth = read_pod<double>(in);
  const auto rank = static_cast<Index>(read_pod<std::uint64_t>(in));

  TrainedModel model;
  model.kernel.kind =
      kind == 1 ? KernelKind::gaussian : KernelKind::inverse_distance;
  model.kernel.bandwidth = bandwidth;
  model.rank = rank;
  model.memory.D.resize(n, m);
  read_doubles(in, model.memory.D.data(), static_cast<std::size_t>(n * m));
  model.gram_pinv.resize(m, m);
  read_doubles(in, model.gram_pinv.data(), static_cast<std::size_t>(m * m));
  model.eigen_spectrum.resize(m);
  read_doubles(in, model.eigen_spectrum.data(), static_cast<std::size_t>(m));
  model.signal_scale.resize(n);
  read_doubles(in, model.signal_scale.data(), static_cast<std::size_t>(n));
  model.memory.source_indices.resize(static_cast<std::size_t>(m));
  for (Index c = 0; c < m; ++c)
    model.memory.source_indices[static_cast<std::size_t>(c)] =
        static_cast<Index>(read_pod<std::uint64_t>(in));
  if (!in) throw IoError("load_model: truncated file " + path);

  model.memory_normalized = model.memory.D;
  for (Index s = 0; s < n; ++s)
    model.memory_normalized.row(s) /= model.signal_scale[s];
  return model;
}

}  // namespace cstress
