#include "containerstress/surfaces.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "containerstress/config.hpp"
#include "containerstress/errors.hpp"

namespace cstress {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Index axis_of(const CellCoords& coords, Axis axis) {
  switch (axis) {
    case Axis::signals: return coords.n_signals;
    case Axis::observations: return coords.n_observations;
    case Axis::memory: return coords.n_memory;
  }
  return 0;
}

void set_axis(CellCoords& coords, Axis axis, Index value) {
  switch (axis) {
    case Axis::signals: coords.n_signals = value; break;
    case Axis::observations: coords.n_observations = value; break;
    case Axis::memory: coords.n_memory = value; break;
  }
}

}  // namespace

std::string to_string(Axis a) {
  switch (a) {
    case Axis::signals: return "n_signals";
    case Axis::observations: return "n_observations";
    case Axis::memory: return "n_memory";
  }
  return "?";
}

const CostCell* CostSurface::find(const CellCoords& coords, Phase phase,
                                  const BackendId& backend) const {
  for (const auto& cell : cells) {
    if (cell.coords == coords && cell.phase == phase && cell.backend == backend)
      return &cell;
  }
  return nullptr;
}

std::vector<BackendId> CostSurface::backends() const {
  std::vector<BackendId> out;
  for (const auto& cell : cells) {
    if (std::find(out.begin(), out.end(), cell.backend) == out.end())
      out.push_back(cell.backend);
  }
  return out;
}

std::vector<Index> CostSurface::axis_values(Axis axis) const {
  std::vector<Index> out;
  for (const auto& cell : cells) out.push_back(axis_of(cell.coords, axis));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

BackendId resolve_backend(const CostSurface& surface, const std::string& token) {
  const auto present = surface.backends();
  for (const auto& b : present) {
    if (b.label() == token) return b;
  }
  if (token == "reference" || token == "optimized") {
    const auto kind = token == "reference" ? BackendId::Kind::reference
                                           : BackendId::Kind::optimized;
    std::vector<BackendId> matches;
    for (const auto& b : present)
      if (b.kind == kind) matches.push_back(b);
    if (matches.size() == 1) return matches.front();
    if (matches.size() > 1)
      throw UnknownBackend("backend \"" + token +
                           "\" is ambiguous in this surface; use a full label");
  }
  throw UnknownBackend("backend \"" + token + "\" not present in this surface");
}

SpeedupSurface speedup(const CostSurface& surface, const BackendId& ref,
                       const BackendId& opt) {
  const auto present = surface.backends();
  auto has = [&present](const BackendId& b) {
    return std::find(present.begin(), present.end(), b) != present.end();
  };
  if (!has(ref))
    throw UnknownBackend("reference backend " + ref.label() +
                         " not present in surface");
  if (!has(opt))
    throw UnknownBackend("optimized backend " + opt.label() +
                         " not present in surface");

  SpeedupSurface out;
  out.reference_backend = ref;
  out.optimized_backend = opt;

  std::vector<std::pair<CellCoords, Phase>> seen;
  for (const auto& cell : surface.cells) {
    const auto key = std::make_pair(cell.coords, cell.phase);
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(key);

    const CostCell* rc = surface.find(cell.coords, cell.phase, ref);
    const CostCell* oc = surface.find(cell.coords, cell.phase, opt);

    SpeedupCell sp;
    sp.coords = cell.coords;
    sp.phase = cell.phase;
    if (!rc || !oc) {
      sp.hole = true;
      sp.reason = std::string("missing ") + (!rc ? ref.label() : opt.label());
    } else if (rc->excluded && oc->excluded) {
      sp.hole = true;
      sp.reason = rc->reason;
    } else if (rc->excluded || oc->excluded) {
      const CostCell* bad = rc->excluded ? rc : oc;
      sp.hole = true;
      sp.reason = bad->backend.label() + ": " + bad->reason;
    } else {
      sp.speedup = rc->median / oc->median;
    }
    out.cells.push_back(std::move(sp));
  }
  return out;
}

SurfaceSlice slice(const CostSurface& surface, Phase phase,
                   const BackendId& backend, Axis fixed_axis,
                   Index fixed_value) {
  const auto fixed_values = surface.axis_values(fixed_axis);
  if (std::find(fixed_values.begin(), fixed_values.end(), fixed_value) ==
      fixed_values.end()) {
    throw BadSlice("slice: value " + std::to_string(fixed_value) +
                   " is not on the " + to_string(fixed_axis) + " axis");
  }

  SurfaceSlice s;
  s.phase = phase;
  s.backend = backend;
  s.fixed_axis = fixed_axis;
  s.fixed_value = fixed_value;
  switch (fixed_axis) {
    case Axis::signals:
      s.row_axis = Axis::observations;
      s.col_axis = Axis::memory;
      break;
    case Axis::observations:
      s.row_axis = Axis::signals;
      s.col_axis = Axis::memory;
      break;
    case Axis::memory:
      s.row_axis = Axis::signals;
      s.col_axis = Axis::observations;
      break;
  }
  s.row_values = surface.axis_values(s.row_axis);
  s.col_values = surface.axis_values(s.col_axis);
  const Index rows = static_cast<Index>(s.row_values.size());
  const Index cols = static_cast<Index>(s.col_values.size());
  s.median_cost = Matrix::Constant(rows, cols, kNaN);
  s.hole_reason.assign(static_cast<std::size_t>(rows),
                       std::vector<std::string>(static_cast<std::size_t>(cols)));

  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      CellCoords coords;
      set_axis(coords, fixed_axis, fixed_value);
      set_axis(coords, s.row_axis, s.row_values[static_cast<std::size_t>(r)]);
      set_axis(coords, s.col_axis, s.col_values[static_cast<std::size_t>(c)]);
      const CostCell* cell = surface.find(coords, phase, backend);
      auto& reason =
          s.hole_reason[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      if (!cell) {
        reason = "absent";
      } else if (cell->excluded) {
        reason = cell->reason;
      } else {
        s.median_cost(r, c) = cell->median;
      }
    }
  }
  return s;
}

void export_slice_csv(const SurfaceSlice& s, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("export_slice_csv: cannot open " + path);
  out << to_string(s.row_axis) << "\\" << to_string(s.col_axis);
  for (Index v : s.col_values) out << "," << v;
  out << "\n";
  for (Index r = 0; r < s.median_cost.rows(); ++r) {
    out << s.row_values[static_cast<std::size_t>(r)];
    for (Index c = 0; c < s.median_cost.cols(); ++c) {
      out << ",";
      if (std::isfinite(s.median_cost(r, c))) out << fmt_double(s.median_cost(r, c));
    }
    out << "\n";
  }
  if (!out) throw IoError("export_slice_csv: write failed for " + path);
}

const AxisTrend& TrendReport::along(Axis axis) const {
  switch (axis) {
    case Axis::signals: return signals;
    case Axis::observations: return observations;
    case Axis::memory: return memory;
  }
  return signals;
}

namespace {

AxisTrend axis_trend(const CostSurface& surface, Phase phase,
                     const BackendId& backend, Axis axis, Axis other_a,
                     Axis other_b, double slack) {
  AxisTrend trend;
  const auto values = surface.axis_values(axis);
  const double log_slack = std::log1p(-std::min(slack, 0.999999));
  int nondecreasing = 0;
  int pairs = 0;
  double slope_sum = 0.0;
  int lines = 0;

  for (Index va : surface.axis_values(other_a)) {
    for (Index vb : surface.axis_values(other_b)) {
      // One grid line along `axis`; collect admissible medians in order.
      std::vector<std::pair<double, double>> pts;  // (log value, log median)
      for (Index v : values) {
        CellCoords coords;
        set_axis(coords, axis, v);
        set_axis(coords, other_a, va);
        set_axis(coords, other_b, vb);
        const CostCell* cell = surface.find(coords, phase, backend);
        if (!cell || cell->excluded || !(cell->median > 0.0)) continue;
        pts.emplace_back(std::log(static_cast<double>(v)),
                         std::log(cell->median));
      }
      for (std::size_t i = 1; i < pts.size(); ++i) {
        ++pairs;
        if (pts[i].second >= pts[i - 1].second + log_slack) ++nondecreasing;
      }
      if (pts.size() >= 2) {
        double mx = 0.0, my = 0.0;
        for (const auto& [x, y] : pts) {
          mx += x;
          my += y;
        }
        mx /= static_cast<double>(pts.size());
        my /= static_cast<double>(pts.size());
        double sxx = 0.0, sxy = 0.0;
        for (const auto& [x, y] : pts) {
          sxx += (x - mx) * (x - mx);
          sxy += (x - mx) * (y - my);
        }
        if (sxx > 0.0) {
          slope_sum += sxy / sxx;
          ++lines;
        }
      }
    }
  }

  trend.pair_count = pairs;
  trend.line_count = lines;
  trend.monotone_fraction =
      pairs > 0 ? static_cast<double>(nondecreasing) / pairs : kNaN;
  trend.loglog_slope = lines > 0 ? slope_sum / lines : kNaN;
  return trend;
}

}  // namespace

TrendReport trend_report(const CostSurface& surface, Phase phase,
                         const BackendId& backend, double monotone_slack) {
  TrendReport report;
  report.signals = axis_trend(surface, phase, backend, Axis::signals,
                              Axis::observations, Axis::memory, monotone_slack);
  report.observations =
      axis_trend(surface, phase, backend, Axis::observations, Axis::signals,
                 Axis::memory, monotone_slack);
  report.memory = axis_trend(surface, phase, backend, Axis::memory,
                             Axis::signals, Axis::observations, monotone_slack);
  return report;
}

// --- CSV ---------------------------------------------------------------

namespace {

constexpr const char* kCostCsvHeader =
    "phase,backend,n_signals,n_observations,n_memory,excluded,reason,"
    "median_s,mean_s,std_s,samples";

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw IoError(context + ": bad number \"" + s + "\"");
  return v;
}

Index parse_index(const std::string& s, const std::string& context) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || v < 0)
    throw IoError(context + ": bad index \"" + s + "\"");
  return static_cast<Index>(v);
}

}  // namespace

void export_cost_csv(const std::vector<CostCell>& cells,
                     const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("export_cost_csv: cannot open " + path);
  out << kCostCsvHeader << "\n";
  for (const auto& cell : cells) {
    out << to_string(cell.phase) << "," << cell.backend.label() << ","
        << cell.coords.n_signals << "," << cell.coords.n_observations << ","
        << cell.coords.n_memory << "," << (cell.excluded ? "true" : "false")
        << "," << cell.reason << ",";
    if (!cell.excluded) {
      out << fmt_double(cell.median) << "," << fmt_double(cell.mean) << ","
          << fmt_double(cell.stddev) << ",";
      for (std::size_t i = 0; i < cell.samples.size(); ++i) {
        if (i > 0) out << ";";
        out << fmt_double(cell.samples[i]);
      }
    } else {
      out << ",,,";
    }
    out << "\n";
  }
  if (!out) throw IoError("export_cost_csv: write failed for " + path);
}

std::vector<CostCell> import_cost_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("import_cost_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kCostCsvHeader)
    throw IoError("import_cost_csv: bad header in " + path);

  std::vector<CostCell> cells;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string context = path + ":" + std::to_string(lineno);
    const auto fields = split(line, ',');
    if (fields.size() != 11)
      throw IoError(context + ": expected 11 fields, got " +
                    std::to_string(fields.size()));

    CostCell cell;
    cell.phase = phase_from_string(fields[0]);
    cell.backend = BackendId::parse(fields[1]);
    cell.coords.n_signals = parse_index(fields[2], context);
    cell.coords.n_observations = parse_index(fields[3], context);
    cell.coords.n_memory = parse_index(fields[4], context);
    if (fields[5] != "true" && fields[5] != "false")
      throw IoError(context + ": bad excluded flag");
    cell.excluded = fields[5] == "true";
    cell.reason = fields[6];
    if (!cell.excluded) {
      for (const auto& s : split(fields[10], ';')) {
        if (!s.empty()) cell.samples.push_back(parse_double(s, context));
      }
      cell.recompute_aggregates();
      if (cell.median != parse_double(fields[7], context) ||
          cell.mean != parse_double(fields[8], context) ||
          cell.stddev != parse_double(fields[9], context))
        throw IoError(context + ": aggregates do not match samples");
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::vector<CostCell> cells_for_phase(const CostSurface& surface, Phase phase) {
  std::vector<CostCell> out;
  for (const auto& cell : surface.cells)
    if (cell.phase == phase) out.push_back(cell);
  return out;
}

// --- JSON --------------------------------------------------------------

json surface_to_json(const CostSurface& surface) {
  json caps = json::array();
  for (const auto& c : surface.metadata.backend_capabilities) {
    caps.push_back(json{{"backend", backend_to_json(c.id)},
                        {"deterministic_summation", c.deterministic_summation},
                        {"description", c.description}});
  }
  json cells = json::array();
  for (const auto& cell : surface.cells) {
    json jc{{"phase", to_string(cell.phase)},
            {"backend", backend_to_json(cell.backend)},
            {"n_signals", cell.coords.n_signals},
            {"n_observations", cell.coords.n_observations},
            {"n_memory", cell.coords.n_memory},
            {"excluded", cell.excluded},
            {"reason", cell.reason},
            {"samples", cell.samples},
            {"data_seeds", cell.data_seeds}};
    if (!cell.samples.empty()) {
      jc["median_s"] = cell.median;
      jc["mean_s"] = cell.mean;
      jc["std_s"] = cell.stddev;
    }
    cells.push_back(std::move(jc));
  }
  return json{
      {"format", "containerstress-surface"},
      {"version", 1},
      {"metadata",
       {{"generator", surface.metadata.generator},
        {"host", surface.metadata.host_description},
        {"hardware_threads", surface.metadata.hardware_threads},
        {"timer", surface.metadata.timer},
        {"rng_algorithm", surface.metadata.rng_algorithm},
        {"started_at", surface.metadata.started_at},
        {"finished_at", surface.metadata.finished_at},
        {"threads_override", surface.metadata.threads_override},
        {"partial", surface.metadata.partial},
        {"config", surface.metadata.config_echo},
        {"backend_capabilities", std::move(caps)}}},
      {"cells", std::move(cells)}};
}

CostSurface surface_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "containerstress-surface")
      throw IoError("surface: unexpected format tag");
    if (j.at("version").get<int>() != 1)
      throw IoError("surface: unsupported version");

    CostSurface surface;
    const json& meta = j.at("metadata");
    surface.metadata.generator = meta.at("generator").get<std::string>();
    surface.metadata.host_description = meta.at("host").get<std::string>();
    surface.metadata.hardware_threads = meta.at("hardware_threads").get<int>();
    surface.metadata.timer = meta.at("timer").get<std::string>();
    surface.metadata.rng_algorithm = meta.at("rng_algorithm").get<std::string>();
    surface.metadata.started_at = meta.at("started_at").get<std::string>();
    surface.metadata.finished_at = meta.at("finished_at").get<std::string>();
    surface.metadata.threads_override =
        meta.at("threads_override").get<std::string>();
    surface.metadata.partial = meta.at("partial").get<bool>();
    surface.metadata.config_echo = meta.at("config");
    for (const json& c : meta.at("backend_capabilities")) {
      BackendCapabilities caps;
      caps.id = backend_from_json(c.at("backend"));
      caps.deterministic_summation = c.at("deterministic_summation").get<bool>();
      caps.description = c.at("description").get<std::string>();
      surface.metadata.backend_capabilities.push_back(std::move(caps));
    }

    for (const json& jc : j.at("cells")) {
      CostCell cell;
      cell.phase = phase_from_string(jc.at("phase").get<std::string>());
      cell.backend = backend_from_json(jc.at("backend"));
      cell.coords.n_signals = jc.at("n_signals").get<Index>();
      cell.coords.n_observations = jc.at("n_observations").get<Index>();
      cell.coords.n_memory = jc.at("n_memory").get<Index>();
      cell.excluded = jc.at("excluded").get<bool>();
      cell.reason = jc.at("reason").get<std::string>();
      cell.samples = jc.at("samples").get<std::vector<double>>();
      cell.data_seeds = jc.at("data_seeds").get<std::vector<std::uint64_t>>();
      cell.recompute_aggregates();
      surface.cells.push_back(std::move(cell));
    }
    return surface;
  } catch (const json::exception& e) {
    throw IoError(std::string("surface: malformed JSON: ") + e.what());
  }
}

void export_surface_json(const CostSurface& surface, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("export_surface_json: cannot open " + path);
  out << surface_to_json(surface).dump(2) << "\n";
  if (!out) throw IoError("export_surface_json: write failed for " + path);
}

CostSurface import_surface_json(const std::string& path) {
  return surface_from_json(load_json_file(path));
}

void export_speedup_csv(const SpeedupSurface& surface, Phase phase,
                        const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("export_speedup_csv: cannot open " + path);
  out << "phase,backend_ref,backend_opt,n_signals,n_observations,n_memory,"
         "hole,reason,speedup\n";
  for (const auto& cell : surface.cells) {
    if (cell.phase != phase) continue;
    out << to_string(cell.phase) << "," << surface.reference_backend.label()
        << "," << surface.optimized_backend.label() << ","
        << cell.coords.n_signals << "," << cell.coords.n_observations << ","
        << cell.coords.n_memory << "," << (cell.hole ? "true" : "false") << ","
        << cell.reason << ",";
    if (!cell.hole) out << fmt_double(cell.speedup);
    out << "\n";
  }
  if (!out) throw IoError("export_speedup_csv: write failed for " + path);
}

}  // namespace cstress
