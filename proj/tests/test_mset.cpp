#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <vector>

#include "containerstress/estimator.hpp"
#include "containerstress/mset.hpp"
#include "support/oracles.hpp"

using namespace cstress;
namespace fs = std::filesystem;

namespace {

SignalMatrix matrix_of(std::initializer_list<std::initializer_list<double>> rows) {
  SignalMatrix out;
  out.data.resize(static_cast<Index>(rows.size()),
                  static_cast<Index>(rows.begin()->size()));
  Index r = 0;
  for (const auto& row : rows) {
    Index c = 0;
    for (double v : row) out.data(r, c++) = v;
    ++r;
  }
  return out;
}

/// Independent re-implementation of the two-stage selection rule.
std::vector<Index> selection_oracle(const Matrix& data, Index m) {
  const Index n = data.cols();
  const Index N = data.rows();
  std::vector<bool> chosen(static_cast<std::size_t>(N), false);
  std::vector<Index> picked;
  for (Index s = 0; s < n; ++s) {
    Index imin = 0, imax = 0;
    for (Index r = 1; r < N; ++r) {
      if (data(r, s) < data(imin, s)) imin = r;
      if (data(r, s) > data(imax, s)) imax = r;
    }
    if (!chosen[static_cast<std::size_t>(imin)]) {
      chosen[static_cast<std::size_t>(imin)] = true;
      picked.push_back(imin);
    }
    if (!chosen[static_cast<std::size_t>(imax)]) {
      chosen[static_cast<std::size_t>(imax)] = true;
      picked.push_back(imax);
    }
  }
  const Index k = m - static_cast<Index>(picked.size());
  std::vector<std::pair<double, Index>> pool;
  for (Index r = 0; r < N; ++r) {
    if (chosen[static_cast<std::size_t>(r)]) continue;
    double norm2 = 0.0;
    for (Index s = 0; s < n; ++s) norm2 += data(r, s) * data(r, s);
    pool.emplace_back(std::sqrt(norm2), r);
  }
  std::sort(pool.begin(), pool.end());
  const Index u = static_cast<Index>(pool.size());
  for (Index i = 0; i < k; ++i) {
    const Index pos = k == 1 ? (u - 1) / 2 : i * (u - 1) / (k - 1);
    picked.push_back(pool[static_cast<std::size_t>(pos)].second);
  }
  return picked;
}

SignalMatrix random_signals(Index n, Index N, std::uint64_t seed) {
  return synthesize(SignalSpec::uniform(n, N, 0.3, 0.2, 1.0, 0.2, 3.5, seed));
}

}  // namespace

TEST_CASE("kernel_eval closed forms") {
  Vector x(3), y(3);
  x << 1.0, 2.0, 3.0;
  y = x;
  KernelConfig gaussian{KernelKind::gaussian, 1.0};
  KernelConfig inverse{KernelKind::inverse_distance, 2.0};
  CHECK(kernel_eval(x, y, gaussian) == 1.0);
  CHECK(kernel_eval(x, y, inverse) == 1.0);

  y << 1.0, 2.0, 4.0;  // distance 1
  CHECK(kernel_eval(x, y, gaussian) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(kernel_eval(x, y, gaussian) == doctest::Approx(0.606531).epsilon(1e-6));

  y << 1.0, 2.0, 5.0;  // distance 2, h = 2
  CHECK(kernel_eval(x, y, inverse) == doctest::Approx(0.5).epsilon(1e-12));

  Vector short_vec(2);
  CHECK_THROWS_AS(kernel_eval(x, short_vec, gaussian), ShapeError);
}

TEST_CASE("selection: single-signal extrema") {
  const SignalMatrix training = matrix_of({{5.0}, {-3.0}, {9.0}, {0.0}});
  const MemoryMatrix mem = select_memory_vectors(training, 2);
  REQUIRE(mem.n_memory() == 2);
  std::vector<double> values{mem.D(0, 0), mem.D(0, 1)};
  std::sort(values.begin(), values.end());
  CHECK(values[0] == -3.0);
  CHECK(values[1] == 9.0);
  std::vector<Index> idx = mem.source_indices;
  std::sort(idx.begin(), idx.end());
  CHECK(idx == std::vector<Index>{1, 2});
}

TEST_CASE("selection: stage 1 fills m exactly") {
  // Four rows holding the per-signal minima and maxima of two signals.
  const SignalMatrix training = matrix_of({
      {-10.0, 1.0},  // min s0
      {10.0, 2.0},   // max s0
      {0.0, -5.0},   // min s1
      {1.0, 5.0},    // max s1
      {0.5, 0.5},
      {0.2, 0.1},
  });
  const MemoryMatrix mem = select_memory_vectors(training, 4);
  std::vector<Index> idx = mem.source_indices;
  std::sort(idx.begin(), idx.end());
  CHECK(idx == std::vector<Index>{0, 1, 2, 3});
}

TEST_CASE("selection: stage 2 matches the stride oracle") {
  oracles::TestRng rng(99);
  SignalMatrix training;
  training.data = rng.matrix(100, 2, -3.0, 3.0);
  const MemoryMatrix mem = select_memory_vectors(training, 6);
  CHECK(mem.source_indices == selection_oracle(training.data, 6));

  // Also at a larger fill count.
  const MemoryMatrix mem2 = select_memory_vectors(training, 25);
  CHECK(mem2.source_indices == selection_oracle(training.data, 25));
}

TEST_CASE("selection preconditions") {
  const SignalMatrix training = matrix_of({{1.0, 0.0}, {2.0, 1.0}, {3.0, 2.0},
                                           {4.0, 3.0}, {5.0, 4.0}});
  CHECK_THROWS_AS(select_memory_vectors(training, 3), ConstraintViolated);
  CHECK_THROWS_AS(select_memory_vectors(training, 6), InsufficientTraining);

  // Value-duplicate rows shrink the distinct pool.
  const SignalMatrix dupes =
      matrix_of({{1.0}, {1.0}, {1.0}, {1.0}, {2.0}, {3.0}});
  CHECK_THROWS_AS(select_memory_vectors(dupes, 4), InsufficientTraining);
}

TEST_CASE("similarity matrix matches the naive oracle") {
  oracles::TestRng rng(7);
  const Matrix A = rng.matrix(3, 2, -1.0, 1.0);
  const Matrix B = rng.matrix(3, 2, -1.0, 1.0);
  KernelConfig cfg{KernelKind::gaussian, 1.3};
  const Matrix got = similarity_matrix(A, B, cfg, BackendId::reference());
  const Matrix want = oracles::sim_matrix_naive(A, B, cfg.kind, 1.3);
  CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-14);

  // Kernel symmetry: sim(A, B) == sim(B, A)^T exactly for the reference.
  const Matrix ba = similarity_matrix(B, A, cfg, BackendId::reference());
  CHECK(got == ba.transpose());
}

TEST_CASE("symmetric_eig contract") {
  const Matrix eye = Matrix::Identity(4, 4);
  const SymmetricEig ei = symmetric_eig(eye);
  CHECK((ei.eigenvalues.array() - 1.0).abs().maxCoeff() < 1e-14);
  CHECK((ei.eigenvectors.transpose() * ei.eigenvectors - eye).norm() <= 1e-9);

  Matrix diag = Matrix::Zero(3, 3);
  diag(0, 0) = 3.0;
  diag(1, 1) = 1.0;
  diag(2, 2) = 2.0;
  const SymmetricEig ed = symmetric_eig(diag);
  CHECK(ed.eigenvalues[0] == doctest::Approx(1.0));
  CHECK(ed.eigenvalues[1] == doctest::Approx(2.0));
  CHECK(ed.eigenvalues[2] == doctest::Approx(3.0));

  oracles::TestRng rng(21);
  Matrix g = rng.matrix(8, 8, -1.0, 1.0);
  g = Matrix(0.5 * (g + g.transpose()));
  const SymmetricEig er = symmetric_eig(g);
  const Matrix recon =
      er.eigenvectors * er.eigenvalues.asDiagonal() * er.eigenvectors.transpose();
  CHECK((recon - g).norm() <= 1e-8 * g.norm());
  CHECK((g * er.eigenvectors - er.eigenvectors * er.eigenvalues.asDiagonal())
            .norm() <= 1e-8 * g.norm());
  CHECK((er.eigenvectors.transpose() * er.eigenvectors -
         Matrix::Identity(8, 8)).norm() <= 1e-9);

  // Jacobi cross-check on the spectrum.
  Vector jvals;
  Matrix jvecs;
  oracles::jacobi_eig(g, jvals, jvecs);
  CHECK((jvals - er.eigenvalues).cwiseAbs().maxCoeff() < 1e-10);

  Matrix asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(symmetric_eig(asym), ShapeError);
}

TEST_CASE("training produces a unit-diagonal Gram and a full-rank gaussian model") {
  const SignalMatrix training = random_signals(2, 64, 31);
  KernelConfig cfg{KernelKind::gaussian, {}};
  const TrainedModel model = train(training, 4, cfg, BackendId::reference());

  const Matrix gram = similarity_matrix(model.memory_normalized,
                                        model.memory_normalized, model.kernel,
                                        BackendId::reference());
  for (Index i = 0; i < 4; ++i) CHECK(gram(i, i) == 1.0);
  CHECK(gram == gram.transpose());

  // Gaussian Gram over distinct points is positive definite: full rank.
  CHECK(model.rank == 4);
  Vector jvals;
  Matrix jvecs;
  oracles::jacobi_eig(gram, jvals, jvecs);
  CHECK(jvals.minCoeff() > 0.0);
  CHECK((jvals - model.eigen_spectrum).cwiseAbs().maxCoeff() < 1e-10);

  // Pseudo-inverse is symmetric and inverts G on its range.
  CHECK((model.gram_pinv - model.gram_pinv.transpose()).cwiseAbs().maxCoeff() <=
        1e-12 * model.gram_pinv.cwiseAbs().maxCoeff());
  const Matrix should_be_identity = model.gram_pinv * gram;
  CHECK((should_be_identity - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <
        1e-8);
}

TEST_CASE("duplicate training rows degrade rank but still train") {
  SignalMatrix training = matrix_of({{0.0}, {1.0}, {2.0}, {3.0}, {3.0}});
  KernelConfig cfg{KernelKind::gaussian, 1.0};
  const TrainedModel model = train(training, 4, cfg, BackendId::reference());
  // Stage 2 picks both copies of the duplicated row.
  CHECK(model.rank < 4);
}

TEST_CASE("memory vectors reproduce themselves") {
  const SignalMatrix training = random_signals(2, 128, 17);
  KernelConfig cfg{KernelKind::inverse_distance, {}};
  const TrainedModel model = train(training, 4, cfg, BackendId::reference());
  REQUIRE(model.rank == 4);

  SignalMatrix observations;
  observations.data = model.memory.D.transpose();
  const EstimationResult result =
      estimate(model, observations, BackendId::reference());
  for (Index s = 0; s < model.n_signals(); ++s) {
    CHECK(result.residuals.col(s).cwiseAbs().maxCoeff() <=
          1e-8 * model.signal_scale[s]);
  }
}

TEST_CASE("constant observation stream stays finite") {
  const SignalMatrix training = random_signals(3, 64, 13);
  const TrainedModel model =
      train(training, 8, KernelConfig{}, BackendId::reference());
  SignalMatrix constant;
  constant.data = Matrix::Constant(10, 3, 4.2);
  const EstimationResult result =
      estimate(model, constant, BackendId::reference());
  CHECK(result.estimates.allFinite());
  CHECK(result.residuals.allFinite());
}

TEST_CASE("estimate agrees across backends") {
  const SignalMatrix training = random_signals(8, 256, 37);
  const SignalMatrix observations = random_signals(8, 100, 41);
  const TrainedModel ref_model =
      train(training, 32, KernelConfig{}, BackendId::reference());
  const TrainedModel opt_model =
      train(training, 32, KernelConfig{}, BackendId::optimized(2, 16));

  const EstimationResult a =
      estimate(ref_model, observations, BackendId::reference());
  const EstimationResult b =
      estimate(opt_model, observations, BackendId::optimized(2, 16));
  const double scale = a.estimates.cwiseAbs().maxCoeff();
  CHECK((a.estimates - b.estimates).cwiseAbs().maxCoeff() <= 1e-10 * scale);
}

TEST_CASE("train and estimate validate their inputs") {
  const SignalMatrix training = random_signals(2, 32, 5);
  CHECK_THROWS_AS(train(training, 3, KernelConfig{}, BackendId::reference()),
                  ConstraintViolated);

  const TrainedModel model =
      train(training, 4, KernelConfig{}, BackendId::reference());
  SignalMatrix wrong;
  wrong.data = Matrix::Zero(4, 3);
  CHECK_THROWS_AS(estimate(model, wrong, BackendId::reference()), ShapeError);
}

TEST_CASE("model file round-trip") {
  const SignalMatrix training = random_signals(3, 96, 53);
  const SignalMatrix observations = random_signals(3, 20, 59);
  const TrainedModel model =
      train(training, 8, KernelConfig{KernelKind::gaussian, 2.5},
            BackendId::reference());

  const auto dir = fs::temp_directory_path() / "cstress_mset_test";
  fs::create_directories(dir);
  const auto path = (dir / "model.csm").string();
  save_model(model, path);
  CHECK(fs::exists(path + ".json"));

  const TrainedModel loaded = load_model(path);
  CHECK(loaded.rank == model.rank);
  CHECK(loaded.kernel.kind == model.kernel.kind);
  CHECK(loaded.kernel.bandwidth.value() == model.kernel.bandwidth.value());
  CHECK(loaded.memory.source_indices == model.memory.source_indices);
  CHECK(std::memcmp(loaded.memory.D.data(), model.memory.D.data(),
                    sizeof(double) *
                        static_cast<std::size_t>(model.memory.D.size())) == 0);
  CHECK(std::memcmp(loaded.gram_pinv.data(), model.gram_pinv.data(),
                    sizeof(double) *
                        static_cast<std::size_t>(model.gram_pinv.size())) == 0);

  const EstimationResult a = estimate(model, observations, BackendId::reference());
  const EstimationResult b = estimate(loaded, observations, BackendId::reference());
  CHECK(a.estimates == b.estimates);

  fs::remove_all(dir);
}

TEST_CASE("pluggable estimators share the harness contract") {
  const SignalMatrix training = random_signals(2, 64, 61);
  const SignalMatrix observations = random_signals(2, 16, 67);
  for (const char* name : {"mset2", "mean"}) {
    const PrognosticAlgorithm& algo = algorithm_by_name(name);
    const auto model =
        algo.train(training, 4, KernelConfig{}, BackendId::reference());
    const EstimationResult result =
        algo.estimate(*model, observations, BackendId::reference());
    CHECK(result.estimates.rows() == observations.data.rows());
    CHECK(result.residuals.allFinite());
  }
  CHECK_THROWS_AS(algorithm_by_name("svm"), ConfigError);

  // The mean predictor really predicts the mean.
  const PrognosticAlgorithm& mean_algo = algorithm_by_name("mean");
  const auto mean_model =
      mean_algo.train(training, 4, KernelConfig{}, BackendId::reference());
  const EstimationResult r =
      mean_algo.estimate(*mean_model, observations, BackendId::reference());
  const Vector col_means = training.data.colwise().mean();
  for (Index s = 0; s < 2; ++s)
    CHECK(r.estimates(0, s) == doctest::Approx(col_means[s]));
}
