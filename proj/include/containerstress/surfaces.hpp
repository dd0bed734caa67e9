#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "containerstress/sweep.hpp"

namespace cstress {

enum class Axis { signals, observations, memory };

std::string to_string(Axis a);

struct RunMetadata {
  std::string generator;         // tool name and version
  std::string host_description;  // CPU model string
  int hardware_threads = 0;
  std::string timer;
  std::string rng_algorithm;
  std::string started_at;   // ISO-8601 UTC
  std::string finished_at;  // ISO-8601 UTC
  std::string threads_override;
  bool partial = false;  // set when a sweep was cut short
  nlohmann::json config_echo = nlohmann::json::object();
  std::vector<BackendCapabilities> backend_capabilities;
};

/// All cost cells of a sweep plus run metadata. Every grid coordinate
/// appears, admissible or excluded; no two cells share
/// (coords, phase, backend).
struct CostSurface {
  std::vector<CostCell> cells;
  RunMetadata metadata;

  const CostCell* find(const CellCoords& coords, Phase phase,
                       const BackendId& backend) const;
  std::vector<BackendId> backends() const;  // distinct, first-appearance order
  std::vector<Index> axis_values(Axis axis) const;  // distinct, ascending
};

struct SpeedupCell {
  CellCoords coords;
  Phase phase = Phase::train;
  bool hole = false;
  std::string reason;
  double speedup = 0.0;  // median(reference) / median(optimized)
};

struct SpeedupSurface {
  BackendId reference_backend;
  BackendId optimized_backend;
  std::vector<SpeedupCell> cells;
};

/// Cellwise median cost ratio between two backends present in the
/// surface; cells missing either side become holes with a reason.
SpeedupSurface speedup(const CostSurface& surface, const BackendId& ref,
                       const BackendId& opt);

/// Resolves a backend token ("reference", "optimized", or a full label)
/// against the backends present in a surface. Throws UnknownBackend.
BackendId resolve_backend(const CostSurface& surface, const std::string& token);

/// One response-surface panel: costs over the two free axes with one
/// axis fixed. Holes are NaN with a reason alongside.
struct SurfaceSlice {
  Phase phase = Phase::train;
  BackendId backend;
  Axis fixed_axis = Axis::signals;
  Index fixed_value = 0;
  Axis row_axis = Axis::observations;
  Axis col_axis = Axis::memory;
  std::vector<Index> row_values;  // ascending
  std::vector<Index> col_values;  // ascending
  Matrix median_cost;             // NaN marks a hole
  std::vector<std::vector<std::string>> hole_reason;
};

SurfaceSlice slice(const CostSurface& surface, Phase phase,
                   const BackendId& backend, Axis fixed_axis,
                   Index fixed_value);

/// Grid CSV for one slice (rows x columns of median cost, holes empty).
void export_slice_csv(const SurfaceSlice& s, const std::string& path);

struct AxisTrend {
  double monotone_fraction = 0.0;  // adjacent admissible pairs non-decreasing
  double loglog_slope = 0.0;       // mean least-squares slope across grid lines
  int pair_count = 0;
  int line_count = 0;  // grid lines with >= 2 admissible points
};

struct TrendReport {
  AxisTrend signals;
  AxisTrend observations;
  AxisTrend memory;

  const AxisTrend& along(Axis axis) const;
};

/// Monotonicity fractions and log-log slope estimates of median cost
/// along each grid axis for one (phase, backend). A pair counts as
/// non-decreasing when next >= prev * (1 - monotone_slack); the slack
/// is the timing-noise allowance (0 = strict).
TrendReport trend_report(const CostSurface& surface, Phase phase,
                         const BackendId& backend,
                         double monotone_slack = 0.0);

// --- export / import ------------------------------------------------

/// CSV rows in the given order under the fixed header
/// phase,backend,n_signals,n_observations,n_memory,excluded,reason,
/// median_s,mean_s,std_s,samples
void export_cost_csv(const std::vector<CostCell>& cells,
                     const std::string& path);
std::vector<CostCell> import_cost_csv(const std::string& path);

std::vector<CostCell> cells_for_phase(const CostSurface& surface, Phase phase);

void export_surface_json(const CostSurface& surface, const std::string& path);
CostSurface import_surface_json(const std::string& path);

nlohmann::json surface_to_json(const CostSurface& surface);
CostSurface surface_from_json(const nlohmann::json& j);

void export_speedup_csv(const SpeedupSurface& surface, Phase phase,
                        const std::string& path);

}  // namespace cstress
