#include "containerstress/sweep.hpp"

#include <sys/utsname.h>
#include <time.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "containerstress/config.hpp"
#include "containerstress/errors.hpp"
#include "containerstress/estimator.hpp"
#include "containerstress/rng.hpp"
#include "containerstress/signals.hpp"
#include "containerstress/surfaces.hpp"
#include "containerstress/version.hpp"

namespace cstress {

std::string to_string(Phase p) {
  return p == Phase::train ? "train" : "surveil";
}

std::string to_string(TimerKind t) {
  return t == TimerKind::wall_monotonic ? "wall_monotonic" : "process_cpu";
}

Phase phase_from_string(const std::string& s) {
  if (s == "train") return Phase::train;
  if (s == "surveil") return Phase::surveil;
  throw ConfigError("unknown phase: " + s);
}

TimerKind timer_from_string(const std::string& s) {
  if (s == "wall_monotonic") return TimerKind::wall_monotonic;
  if (s == "process_cpu") return TimerKind::process_cpu;
  throw ConfigError("unknown timer: " + s);
}

void SweepGrid::validate() const {
  auto check = [](const std::vector<Index>& values, const char* name) {
    if (values.empty())
      throw ConfigError(std::string("grid: ") + name + " must be non-empty");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] < 1)
        throw ConfigError(std::string("grid: ") + name + " must be positive");
      if (i > 0 && values[i] <= values[i - 1])
        throw ConfigError(std::string("grid: ") + name +
                          " must be strictly ascending");
    }
  };
  check(signal_counts, "signal_counts");
  check(observation_counts, "observation_counts");
  check(memory_counts, "memory_counts");
  if (training_observation_factor < 1)
    throw ConfigError("grid: training_observation_factor must be >= 1");
}

void SweepConfig::validate() const {
  grid.validate();
  if (replicates < 1) throw ConfigError("sweep: replicates must be >= 1");
  if (warmups < 0) throw ConfigError("sweep: warmups must be >= 0");
  if (backends.empty())
    throw ConfigError("sweep: at least one backend is required");
  for (const auto& b : backends) b.validate();
  kernel.validate();
  algorithm_by_name(estimator);  // throws on unknown names
  const double bound =
      signal_template.skewness * signal_template.skewness + 1.0;
  if (!(signal_template.kurtosis > bound))
    throw ConfigError("sweep: signal kurtosis violates the Pearson bound");
}

void CostCell::recompute_aggregates() {
  if (samples.empty()) {
    mean = median = stddev = 0.0;
    return;
  }
  const double dn = static_cast<double>(samples.size());
  mean = 0.0;
  for (double s : samples) mean += s;
  mean /= dn;

  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t half = sorted.size() / 2;
  median = sorted.size() % 2 == 1
               ? sorted[half]
               : 0.5 * (sorted[half - 1] + sorted[half]);

  if (samples.size() < 2) {
    stddev = 0.0;
  } else {
    double ss = 0.0;
    for (double s : samples) ss += (s - mean) * (s - mean);
    stddev = std::sqrt(ss / (dn - 1.0));
  }
}

std::vector<std::pair<CellCoords, bool>> generate_cells(const SweepGrid& grid) {
  grid.validate();
  std::vector<std::pair<CellCoords, bool>> cells;
  cells.reserve(grid.signal_counts.size() * grid.memory_counts.size() *
                grid.observation_counts.size());
  for (Index n : grid.signal_counts) {
    for (Index m : grid.memory_counts) {
      for (Index obs : grid.observation_counts) {
        CellCoords coords{n, obs, m};
        cells.emplace_back(coords, coords.admissible());
      }
    }
  }
  return cells;
}

std::uint64_t cell_data_seed(std::uint64_t master_seed, const CellCoords& coords,
                             int replicate) {
  return derive_seed(master_seed,
                     {static_cast<std::uint64_t>(coords.n_signals),
                      static_cast<std::uint64_t>(coords.n_observations),
                      static_cast<std::uint64_t>(coords.n_memory),
                      static_cast<std::uint64_t>(replicate)});
}

namespace {

double timer_now(TimerKind kind) {
  if (kind == TimerKind::wall_monotonic) {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  }
  timespec ts{};
  clock_gettime(CLOCK_PROCESS_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

SignalSpec spec_from_template(const SignalStatsTemplate& tmpl, Index n_signals,
                              Index n_observations, std::uint64_t seed) {
  return SignalSpec::uniform(n_signals, n_observations, tmpl.ar_coefficient,
                             tmpl.cross_correlation, tmpl.variance,
                             tmpl.skewness, tmpl.kurtosis, seed);
}

struct CellData {
  SignalMatrix training;
  SignalMatrix surveillance;
};

CellData synthesize_cell_data(const CellCoords& coords,
                              const SweepConfig& config, std::uint64_t base) {
  const Index training_rows =
      config.grid.training_observation_factor * coords.n_memory;
  CellData data;
  data.training =
      synthesize(spec_from_template(config.signal_template, coords.n_signals,
                                    training_rows, derive_seed(base, {0})));
  data.surveillance =
      synthesize(spec_from_template(config.signal_template, coords.n_signals,
                                    coords.n_observations,
                                    derive_seed(base, {1})));
  return data;
}

}  // namespace

std::vector<CostCell> run_cell(const CellCoords& coords,
                               const SweepConfig& config) {
  if (!coords.admissible())
    throw ConstraintViolated("run_cell: cell violates m >= 2n");

  const auto& algorithm = algorithm_by_name(config.estimator);

  std::vector<CostCell> cells;
  for (Phase phase : {Phase::train, Phase::surveil}) {
    for (const BackendId& backend : config.backends) {
      CostCell cell;
      cell.coords = coords;
      cell.phase = phase;
      cell.backend = backend;
      cells.push_back(std::move(cell));
    }
  }
  auto cell_at = [&](Phase phase, std::size_t backend_idx) -> CostCell& {
    const std::size_t row = phase == Phase::train ? 0 : 1;
    return cells[row * config.backends.size() + backend_idx];
  };

  try {
    // Untimed warmups; seeds beyond the replicate range so warmup data
    // never collides with measured data.
    for (int w = 0; w < config.warmups; ++w) {
      const CellData data = synthesize_cell_data(
          coords, config,
          cell_data_seed(config.master_seed, coords, config.replicates + w));
      for (const BackendId& backend : config.backends) {
        const auto model = algorithm.train(data.training, coords.n_memory,
                                           config.kernel, backend);
        algorithm.estimate(*model, data.surveillance, backend);
      }
    }

    for (int r = 0; r < config.replicates; ++r) {
      const std::uint64_t base = cell_data_seed(config.master_seed, coords, r);
      const CellData data = synthesize_cell_data(coords, config, base);
      for (std::size_t b = 0; b < config.backends.size(); ++b) {
        const BackendId& backend = config.backends[b];

        const double t0 = timer_now(config.timer);
        const auto model = algorithm.train(data.training, coords.n_memory,
                                           config.kernel, backend);
        const double t1 = timer_now(config.timer);

        const double t2 = timer_now(config.timer);
        algorithm.estimate(*model, data.surveillance, backend);
        const double t3 = timer_now(config.timer);

        // Clamp to the timer tick so samples stay strictly positive.
        cell_at(Phase::train, b).samples.push_back(std::max(t1 - t0, 1e-9));
        cell_at(Phase::train, b).data_seeds.push_back(base);
        cell_at(Phase::surveil, b).samples.push_back(std::max(t3 - t2, 1e-9));
        cell_at(Phase::surveil, b).data_seeds.push_back(base);
      }
    }
    for (auto& cell : cells) cell.recompute_aggregates();
  } catch (const Error& e) {
    for (auto& cell : cells) {
      cell.samples.clear();
      cell.data_seeds.clear();
      cell.excluded = true;
      cell.reason = e.what();
      cell.recompute_aggregates();
    }
  }
  return cells;
}

namespace {

std::string iso8601_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%FT%TZ", &tm);
  return buf;
}

std::string host_description() {
  std::string cpu = "unknown CPU";
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        cpu = line.substr(colon + 1);
        const auto first = cpu.find_first_not_of(' ');
        if (first != std::string::npos) cpu = cpu.substr(first);
      }
      break;
    }
  }
  utsname uts{};
  if (uname(&uts) == 0) {
    return cpu + " / " + uts.sysname + " " + uts.release + " " + uts.machine;
  }
  return cpu;
}

}  // namespace

CostSurface run_sweep(const SweepConfig& config, const SweepProgress& progress) {
  config.validate();

  const auto grid_cells = generate_cells(config.grid);
  const std::size_t admissible = static_cast<std::size_t>(
      std::count_if(grid_cells.begin(), grid_cells.end(),
                    [](const auto& c) { return c.second; }));
  if (admissible == 0)
    throw EmptyGrid("run_sweep: no grid cell satisfies m >= 2n");

  CostSurface surface;
  surface.metadata.generator = std::string("containerstress ") + kVersion;
  surface.metadata.host_description = host_description();
  surface.metadata.hardware_threads =
      static_cast<int>(std::thread::hardware_concurrency());
  surface.metadata.timer = to_string(config.timer);
  surface.metadata.rng_algorithm = kRngAlgorithm;
  surface.metadata.threads_override = config.threads_override_note;
  surface.metadata.config_echo = sweep_config_to_json(config);
  surface.metadata.started_at = iso8601_utc_now();
  for (const auto& backend : config.backends)
    surface.metadata.backend_capabilities.push_back(capabilities(backend));

  for (std::size_t i = 0; i < grid_cells.size(); ++i) {
    const auto& [coords, is_admissible] = grid_cells[i];
    std::vector<CostCell> results;
    if (is_admissible) {
      results = run_cell(coords, config);
    } else {
      for (Phase phase : {Phase::train, Phase::surveil}) {
        for (const BackendId& backend : config.backends) {
          CostCell cell;
          cell.coords = coords;
          cell.phase = phase;
          cell.backend = backend;
          cell.excluded = true;
          cell.reason = "m<2n";
          results.push_back(std::move(cell));
        }
      }
    }
    if (progress) progress(i, grid_cells.size(), coords, results);
    surface.cells.insert(surface.cells.end(),
                         std::make_move_iterator(results.begin()),
                         std::make_move_iterator(results.end()));
  }
  surface.metadata.finished_at = iso8601_utc_now();
  return surface;
}

}  // namespace cstress
