// Acceptance suite: one pass/fail line per criterion, exit code equals
// the number of failures. Criteria that time kernels run the real sweep
// machinery; sizes are chosen so each criterion fits its stated budget.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "containerstress/backends.hpp"
#include "containerstress/estimator.hpp"
#include "containerstress/mset.hpp"
#include "containerstress/signals.hpp"
#include "containerstress/surfaces.hpp"
#include "containerstress/sweep.hpp"
#include "support/oracles.hpp"

using namespace cstress;
namespace fs = std::filesystem;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

double max_rel_dev(const Matrix& got, const Matrix& want) {
  double worst = 0.0;
  for (Index j = 0; j < want.cols(); ++j) {
    for (Index i = 0; i < want.rows(); ++i) {
      const double denom = std::max(std::abs(want(i, j)), 1e-300);
      worst = std::max(worst, std::abs(got(i, j) - want(i, j)) / denom);
    }
  }
  return worst;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

SweepConfig base_config() {
  SweepConfig config;
  config.warmups = 1;
  config.master_seed = 20260810;
  config.backends = {BackendId::reference()};
  return config;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

const CostCell* find_cell(const CostSurface& surface, Index n, Index obs,
                          Index m, Phase phase, const BackendId& backend) {
  return surface.find(CellCoords{n, obs, m}, phase, backend);
}

// --- criteria --------------------------------------------------------

bool criterion1_oracle_equivalence(std::string& detail) {
  oracles::TestRng rng(0xC1);
  double worst_sim = 0.0, worst_mm = 0.0, worst_e2e = 0.0;

  for (int i = 0; i < 100; ++i) {
    const Index n = rng.uniform_int(1, 256);
    const Index p = rng.uniform_int(1, 256);
    const Index q = rng.uniform_int(1, 256);
    const Matrix A = rng.matrix(n, p, -1.0, 1.0);
    const Matrix B = rng.matrix(n, q, -1.0, 1.0);
    KernelConfig cfg;
    cfg.kind = i % 2 == 0 ? KernelKind::inverse_distance : KernelKind::gaussian;
    const int tile = rng.uniform_int(8, 256);
    const int workers = rng.uniform_int(1, 8);
    worst_sim = std::max(
        worst_sim, max_rel_dev(sim_matrix_optimized(A, B, cfg, tile, workers),
                               sim_matrix_reference(A, B, cfg)));
  }
  for (int i = 0; i < 100; ++i) {
    const Index p = rng.uniform_int(1, 256);
    const Index m = rng.uniform_int(1, 256);
    const Index q = rng.uniform_int(1, 256);
    const Matrix A = rng.matrix(p, m, -1.0, 1.0);
    const Matrix B = rng.matrix(m, q, -1.0, 1.0);
    const BackendId opt =
        BackendId::optimized(rng.uniform_int(1, 8), rng.uniform_int(8, 256));
    worst_mm = std::max(worst_mm, max_rel_dev(matmul(A, B, opt),
                                              matmul(A, B, BackendId::reference())));
  }

  // End to end: estimates from both backends on random models.
  for (int i = 0; i < 5; ++i) {
    const Index n = i == 0 ? 8 : rng.uniform_int(2, 16);
    const Index m = i == 0 ? 32 : 2 * n + rng.uniform_int(0, 16);
    const auto training = synthesize(
        SignalSpec::uniform(n, 4 * m, 0.3, 0.2, 1.0, 0.2, 3.5, 1000 + i));
    const auto observations =
        synthesize(SignalSpec::uniform(n, 100, 0.3, 0.2, 1.0, 0.2, 3.5, 2000 + i));
    KernelConfig cfg;
    cfg.kind = i % 2 == 0 ? KernelKind::inverse_distance : KernelKind::gaussian;
    const BackendId opt = BackendId::optimized(2, 32);
    const EstimationResult ref =
        estimate(train(training, m, cfg, BackendId::reference()), observations,
                 BackendId::reference());
    const EstimationResult fast =
        estimate(train(training, m, cfg, opt), observations, opt);
    const double scale = ref.estimates.cwiseAbs().maxCoeff();
    worst_e2e = std::max(
        worst_e2e,
        (ref.estimates - fast.estimates).cwiseAbs().maxCoeff() / scale);
  }

  std::ostringstream out;
  out << "max sim dev " << worst_sim << ", max matmul dev " << worst_mm
      << ", max e2e dev " << worst_e2e;
  detail = out.str();
  return worst_sim <= 1e-12 && worst_mm <= 1e-12 && worst_e2e <= 1e-10;
}

bool criterion2_memory_reproduction(std::string& detail) {
  oracles::TestRng rng(0xC2);
  int accepted = 0, attempts = 0;
  double worst = 0.0;
  while (accepted < 50 && attempts < 500) {
    ++attempts;
    const Index n = rng.uniform_int(1, 16);
    const Index m = rng.uniform_int(static_cast<int>(2 * n), 64);
    KernelConfig cfg;
    cfg.kind = attempts % 2 == 0 ? KernelKind::inverse_distance
                                 : KernelKind::gaussian;
    const auto training = synthesize(SignalSpec::uniform(
        n, 4 * m, 0.3, 0.2, 1.0, 0.2, 3.5, 3000 + attempts));
    const TrainedModel model =
        train(training, m, cfg, BackendId::reference());
    if (model.rank != m) continue;  // criterion applies to full-rank models
    ++accepted;

    SignalMatrix observations;
    observations.data = model.memory.D.transpose();
    const EstimationResult result =
        estimate(model, observations, BackendId::reference());
    for (Index s = 0; s < n; ++s) {
      worst = std::max(worst, result.residuals.col(s).cwiseAbs().maxCoeff() /
                                  model.signal_scale[s]);
    }
  }
  std::ostringstream out;
  out << accepted << " full-rank models in " << attempts
      << " attempts, worst residual/scale " << worst;
  detail = out.str();
  return accepted == 50 && worst <= 1e-8;
}

bool criterion3_constraint_holes(std::string& detail) {
  SweepGrid grid;
  for (Index n = 32; n <= 1024; n *= 2) grid.signal_counts.push_back(n);
  for (Index m = 128; m <= 8192; m *= 2) grid.memory_counts.push_back(m);
  grid.observation_counts = {1024};

  const auto cells = generate_cells(grid);
  std::size_t excluded = 0;
  for (const auto& [coords, admissible] : cells) {
    if (admissible != (coords.n_memory >= 2 * coords.n_signals)) {
      detail = "admissibility flag disagrees with m >= 2n";
      return false;
    }
    if (!admissible) ++excluded;
  }
  std::ostringstream out;
  out << cells.size() << " cells, " << excluded
      << " excluded exactly where m < 2n";
  detail = out.str();
  return cells.size() == 42 && excluded > 0;
}

bool criterion4_training_sensitivity(std::string& detail) {
  SweepConfig config = base_config();
  config.grid.signal_counts = {32};
  config.grid.observation_counts = {64};
  config.grid.memory_counts = {512, 1024};
  config.replicates = 5;

  const CostSurface surface = run_sweep(config);
  const CostCell* small =
      find_cell(surface, 32, 64, 512, Phase::train, BackendId::reference());
  const CostCell* large =
      find_cell(surface, 32, 64, 1024, Phase::train, BackendId::reference());
  if (!small || !large || small->excluded || large->excluded) {
    detail = "train cells missing or excluded";
    return false;
  }
  const double ratio = large->median / small->median;
  std::ostringstream out;
  out << "median train: m=512 " << small->median << "s, m=1024 "
      << large->median << "s, ratio " << ratio;
  detail = out.str();
  return ratio >= 3.0;
}

bool criterion5_surveillance_sensitivity(std::string& detail) {
  SweepConfig config = base_config();
  config.grid.signal_counts = {64};
  config.grid.observation_counts = {8192, 16384};
  config.grid.memory_counts = {512};
  config.replicates = 5;

  const CostSurface surface = run_sweep(config);
  const CostCell* lo =
      find_cell(surface, 64, 8192, 512, Phase::surveil, BackendId::reference());
  const CostCell* hi =
      find_cell(surface, 64, 16384, 512, Phase::surveil, BackendId::reference());
  if (!lo || !hi || lo->excluded || hi->excluded) {
    detail = "surveil cells missing or excluded";
    return false;
  }
  const double ratio = hi->median / lo->median;
  std::ostringstream out;
  out << "median surveil: 2^13 obs " << lo->median << "s, 2^14 obs "
      << hi->median << "s, ratio " << ratio;
  detail = out.str();
  return ratio >= 1.7 && ratio <= 2.4;
}

bool criterion6_speedup_pipeline(std::string& detail) {
  const unsigned hw = std::thread::hardware_concurrency();
  const BackendId opt = BackendId::optimized();

  // Raw similarity-kernel speedup at the stated shape, median of 5.
  oracles::TestRng rng(0xC6);
  const Matrix A = rng.matrix(256, 2048, -1.0, 1.0);
  KernelConfig cfg;
  std::vector<double> ref_times, opt_times;
  for (int run = 0; run < 5; ++run) {
    double t0 = now_s();
    volatile double sink = sim_matrix_reference(A, A, cfg)(0, 0);
    ref_times.push_back(now_s() - t0);
    t0 = now_s();
    sink = sim_matrix_optimized(A, A, cfg, opt.tile_size, opt.worker_count)(0, 0);
    opt_times.push_back(now_s() - t0);
    (void)sink;
  }
  const double sim_speedup = median_of(ref_times) / median_of(opt_times);

  // Speedup surface through the full sweep pipeline.
  SweepConfig config = base_config();
  config.grid.signal_counts = {256};
  config.grid.observation_counts = {1024};
  config.grid.memory_counts = {2048};
  config.grid.training_observation_factor = 2;
  config.replicates = 3;
  config.backends = {BackendId::reference(), opt};

  const CostSurface surface = run_sweep(config);

  const SpeedupSurface self = speedup(surface, BackendId::reference(),
                                      BackendId::reference());
  bool self_ok = true;
  for (const auto& cell : self.cells)
    if (!cell.hole && std::abs(cell.speedup - 1.0) > 1e-3) self_ok = false;

  const SpeedupSurface sp = speedup(surface, BackendId::reference(), opt);
  double surveil_speedup = 0.0, train_speedup = 0.0;
  for (const auto& cell : sp.cells) {
    if (cell.hole) continue;
    if (cell.phase == Phase::surveil) surveil_speedup = cell.speedup;
    if (cell.phase == Phase::train) train_speedup = cell.speedup;
  }

  std::ostringstream out;
  out << "hw threads " << hw << "; sim kernel speedup " << sim_speedup
      << "; surface speedup surveil " << surveil_speedup << " (train "
      << train_speedup << ", eigendecomposition is backend-shared); self "
      << (self_ok ? "1.0 ok" : "BROKEN");
  const bool threshold_ok = sim_speedup >= 2.0 && surveil_speedup >= 2.0;
  if (hw < 4 && !threshold_ok) {
    out << "; >=2.0 threshold applies to >=4-hardware-thread machines, "
           "this host has "
        << hw;
    detail = out.str();
    return self_ok;  // the threshold premise is unmet on this host
  }
  detail = out.str();
  return self_ok && threshold_ok;
}

bool criterion7_synthesis_fidelity(std::string& detail) {
  const auto spec = SignalSpec::uniform(2, 100000, 0.8, 0.9, 1.0, 1.0, 5.0,
                                        20260810);
  const SignalMatrix m = synthesize(spec);

  double worst_skew = 0.0, worst_kurt = 0.0, worst_phi = 0.0;
  for (Index s = 0; s < 2; ++s) {
    const auto stats = oracles::column_moments(m.data, s);
    worst_skew = std::max(worst_skew, std::abs(stats.skewness - 1.0));
    worst_kurt = std::max(worst_kurt, std::abs(stats.kurtosis - 5.0));
    worst_phi =
        std::max(worst_phi, std::abs(oracles::lag1_autocorr(m.data, s) - 0.8));
  }
  const double rho_err = std::abs(oracles::pearson(m.data, 0, 1) - 0.9);

  std::ostringstream out;
  out << "|skew-1| " << worst_skew << ", |kurt-5| " << worst_kurt
      << ", |lag1-0.8| " << worst_phi << ", |corr-0.9| " << rho_err;
  detail = out.str();
  return worst_skew <= 0.15 && worst_kurt <= 0.6 && worst_phi <= 0.05 &&
         rho_err <= 0.05;
}

CostSurface demo_surface() {
  SweepConfig config = base_config();
  config.grid.signal_counts = {16, 32, 64};
  config.grid.observation_counts = {2048, 8192};
  config.grid.memory_counts = {128, 256, 512};
  config.replicates = 5;
  return run_sweep(config);
}

bool criterion8_trend_reproduction(std::string& detail, CostSurface& demo_out) {
  demo_out = demo_surface();
  const TrendReport train_trend =
      trend_report(demo_out, Phase::train, BackendId::reference());
  const TrendReport surveil_trend =
      trend_report(demo_out, Phase::surveil, BackendId::reference());

  std::ostringstream out;
  out << "train slopes: memory " << train_trend.memory.loglog_slope
      << ", observations " << train_trend.observations.loglog_slope
      << "; surveil observations slope "
      << surveil_trend.observations.loglog_slope;
  detail = out.str();
  return train_trend.memory.loglog_slope >
             train_trend.observations.loglog_slope &&
         std::abs(surveil_trend.observations.loglog_slope - 1.0) <= 0.3;
}

bool invariant_monotonicity(const CostSurface& demo, std::string& detail) {
  // Surfaces invariant: >= 90% of adjacent admissible pairs non-decreasing
  // along every axis; 10% relative slack is the timing-noise allowance
  // for millisecond-scale cells.
  double worst = 1.0;
  std::ostringstream out;
  for (Phase phase : {Phase::train, Phase::surveil}) {
    const TrendReport t =
        trend_report(demo, phase, BackendId::reference(), 0.10);
    for (Axis axis : {Axis::signals, Axis::observations, Axis::memory}) {
      const double f = t.along(axis).monotone_fraction;
      worst = std::min(worst, f);
      out << to_string(phase) << "/" << to_string(axis) << " " << f << " ";
    }
  }
  detail = out.str();
  return worst >= 0.9;
}

bool criterion9_determinism_roundtrip(std::string& detail) {
  SweepConfig config = base_config();
  config.grid.signal_counts = {2, 4};
  config.grid.observation_counts = {64};
  config.grid.memory_counts = {4, 16};  // (4,4) is excluded
  config.replicates = 2;
  config.backends = {BackendId::reference(), BackendId::optimized(2, 16)};

  const CostSurface a = run_sweep(config);
  const CostSurface b = run_sweep(config);
  if (a.cells.size() != b.cells.size()) {
    detail = "cell counts differ between reruns";
    return false;
  }
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const CostCell& ca = a.cells[i];
    const CostCell& cb = b.cells[i];
    if (!(ca.coords == cb.coords) || ca.phase != cb.phase ||
        !(ca.backend == cb.backend) || ca.excluded != cb.excluded ||
        ca.reason != cb.reason || ca.data_seeds != cb.data_seeds) {
      detail = "cell sets or data seeds differ between reruns";
      return false;
    }
  }

  const auto dir = fs::temp_directory_path() / "cstress_acceptance";
  fs::create_directories(dir);
  const auto csv1 = (dir / "c1.csv").string();
  const auto csv2 = (dir / "c2.csv").string();
  export_cost_csv(cells_for_phase(a, Phase::train), csv1);
  export_cost_csv(import_cost_csv(csv1), csv2);
  const bool csv_ok = file_bytes(csv1) == file_bytes(csv2);

  const auto js1 = (dir / "s1.json").string();
  const auto js2 = (dir / "s2.json").string();
  export_surface_json(a, js1);
  export_surface_json(import_surface_json(js1), js2);
  const bool json_ok = file_bytes(js1) == file_bytes(js2);
  fs::remove_all(dir);

  std::ostringstream out;
  out << "reruns identical; csv round-trip "
      << (csv_ok ? "byte-identical" : "DIFFERS") << ", json round-trip "
      << (json_ok ? "byte-identical" : "DIFFERS");
  detail = out.str();
  return csv_ok && json_ok;
}

struct Entry {
  std::string label;
  double budget_s;
  std::function<bool(std::string&)> fn;
};

}  // namespace

int main() {
  int failures = 0;
  CostSurface demo;  // shared by criterion 8 and the monotonicity invariant

  const std::vector<Entry> entries = {
      {"criterion 1: backend oracle equivalence", 60.0,
       criterion1_oracle_equivalence},
      {"criterion 2: memory self-reproduction", 60.0,
       criterion2_memory_reproduction},
      {"criterion 3: training-constraint holes", 1.0,
       criterion3_constraint_holes},
      {"criterion 4: training cost sensitivity", 300.0,
       criterion4_training_sensitivity},
      {"criterion 5: surveillance cost linearity", 300.0,
       criterion5_surveillance_sensitivity},
      {"criterion 6: speedup pipeline", 600.0, criterion6_speedup_pipeline},
      {"criterion 7: synthesis fidelity", 30.0, criterion7_synthesis_fidelity},
      {"criterion 8: trend reproduction", 600.0,
       [&demo](std::string& detail) {
         return criterion8_trend_reproduction(detail, demo);
       }},
      {"criterion 9: determinism and round-trip", 120.0,
       criterion9_determinism_roundtrip},
  };

  for (const auto& entry : entries) {
    std::string detail;
    const double t0 = now_s();
    bool ok = false;
    try {
      ok = entry.fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double elapsed = now_s() - t0;
    if (elapsed > entry.budget_s) {
      ok = false;
      detail += " [exceeded " + std::to_string(entry.budget_s) + "s budget]";
    }
    std::printf("[%s] %s (%.1fs) — %s\n", ok ? "PASS" : "FAIL",
                entry.label.c_str(), elapsed, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }

  // Demo-sweep monotonicity invariant, reported as its own line.
  {
    std::string detail;
    bool ok = false;
    try {
      ok = !demo.cells.empty() && invariant_monotonicity(demo, detail);
      if (demo.cells.empty()) detail = "demo sweep unavailable";
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] invariant: demo monotone fractions >= 0.9 — %s\n",
                ok ? "PASS" : "FAIL", detail.c_str());
    if (!ok) ++failures;
  }

  std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
