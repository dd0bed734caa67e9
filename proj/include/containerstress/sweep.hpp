#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "containerstress/backends.hpp"
#include "containerstress/kernels.hpp"
#include "containerstress/types.hpp"

namespace cstress {

struct CostSurface;  // surfaces.hpp

enum class Phase { train, surveil };
enum class TimerKind { wall_monotonic, process_cpu };

std::string to_string(Phase p);
std::string to_string(TimerKind t);
Phase phase_from_string(const std::string& s);
TimerKind timer_from_string(const std::string& s);

/// The Cartesian parameter grid over the three scoping parameters.
/// Training data per cell has training_observation_factor * n_memory rows.
struct SweepGrid {
  std::vector<Index> signal_counts;       // ascending
  std::vector<Index> observation_counts;  // ascending
  std::vector<Index> memory_counts;       // ascending
  Index training_observation_factor = 4;

  void validate() const;
};

/// Statistical targets applied to every synthesized channel; the
/// per-cell dimensions and seeds come from the grid walk.
struct SignalStatsTemplate {
  double ar_coefficient = 0.0;
  double cross_correlation = 0.0;  // uniform off-diagonal rho
  double variance = 1.0;
  double skewness = 0.0;
  double kurtosis = 3.0;
};

struct SweepConfig {
  SweepGrid grid;
  int replicates = 5;
  int warmups = 1;  // untimed passes per cell and backend
  std::vector<BackendId> backends;
  KernelConfig kernel;
  SignalStatsTemplate signal_template;
  std::uint64_t master_seed = 0;
  TimerKind timer = TimerKind::wall_monotonic;
  std::string estimator = "mset2";
  std::string threads_override_note;  // metadata only, not part of the config

  void validate() const;
};

struct CellCoords {
  Index n_signals = 0;
  Index n_observations = 0;
  Index n_memory = 0;

  bool admissible() const { return n_memory >= 2 * n_signals; }
  bool operator==(const CellCoords&) const = default;
};

/// Timing samples for one (cell, phase, backend) combination.
struct CostCell {
  CellCoords coords;
  Phase phase = Phase::train;
  BackendId backend;
  std::vector<double> samples;  // elapsed seconds, one per replicate
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;
  bool excluded = false;
  std::string reason;
  std::vector<std::uint64_t> data_seeds;  // per-replicate base seeds

  /// Median / mean / sample stddev recomputed from `samples`.
  void recompute_aggregates();
};

/// Full Cartesian product in sweep order (signals-major, then memory,
/// then observations); a cell is admissible iff n_memory >= 2 * n_signals.
std::vector<std::pair<CellCoords, bool>> generate_cells(const SweepGrid& grid);

/// Per-replicate base seed for a cell; train/surveil streams derive from it.
std::uint64_t cell_data_seed(std::uint64_t master_seed, const CellCoords& coords,
                             int replicate);

/// Benchmarks one admissible cell: per replicate, synthesize fresh
/// training and surveillance data, then time train and estimate
/// separately for every backend (synthesis excluded from the timing).
/// Runtime errors mark the cell excluded instead of propagating.
std::vector<CostCell> run_cell(const CellCoords& coords,
                               const SweepConfig& config);

using SweepProgress = std::function<void(
    std::size_t index, std::size_t total, const CellCoords& coords,
    const std::vector<CostCell>& results)>;

/// Walks the grid strictly serially (no cross-cell parallelism while
/// timing) and assembles all cells plus run metadata into a CostSurface.
/// Throws EmptyGrid when no cell is admissible.
CostSurface run_sweep(const SweepConfig& config,
                      const SweepProgress& progress = nullptr);

}  // namespace cstress
