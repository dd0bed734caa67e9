#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "containerstress/config.hpp"
#include "containerstress/errors.hpp"
#include "containerstress/io.hpp"
#include "containerstress/rng.hpp"
#include "containerstress/signals.hpp"
#include "containerstress/surfaces.hpp"
#include "containerstress/sweep.hpp"
#include "containerstress/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit codes, also documented in the README:
//   0 success, 2 configuration error, 3 infeasible moment targets,
//   4 empty grid, 5 runtime failure after partial output.
constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kInfeasible = 3;
constexpr int kEmptyGrid = 4;
constexpr int kRuntimeFailure = 5;

std::string iso8601_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%FT%TZ", &tm);
  return buf;
}

void write_text_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw cstress::IoError("cannot open " + tmp.string());
    out << content;
    if (!out) throw cstress::IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

struct ManifestWriter {
  std::string command;
  fs::path out_dir;
  json config = json::object();
  std::string started_at = iso8601_utc_now();
  std::vector<std::string> artifacts;

  void add(const std::string& name) { artifacts.push_back(name); }

  void finish(int exit_status) const {
    if (out_dir.empty()) return;
    json manifest{{"command", command},
                  {"config", config},
                  {"out_dir", out_dir.string()},
                  {"started_at", started_at},
                  {"finished_at", iso8601_utc_now()},
                  {"exit_status", exit_status},
                  {"artifacts", artifacts}};
    write_text_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
  }
};

int cmd_synth(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed) {
  ManifestWriter manifest;
  manifest.command = "synth";
  try {
    cstress::SignalSpec spec =
        cstress::parse_signal_spec(cstress::load_json_file(config_path));
    if (seed) spec.seed = *seed;

    fs::create_directories(out_dir);
    manifest.out_dir = out_dir;
    manifest.config = cstress::signal_spec_to_json(spec);

    const cstress::SignalMatrix signals = cstress::synthesize(spec);
    const cstress::MomentReport report = cstress::moment_report(signals);

    cstress::write_signal_csv(signals, (fs::path(out_dir) / "signals.csv").string());
    manifest.add("signals.csv");
    cstress::write_signal_binary(signals, (fs::path(out_dir) / "signals.bin").string());
    manifest.add("signals.bin");
    manifest.add("signals.bin.json");
    write_text_atomic(fs::path(out_dir) / "moments.json",
                      cstress::moment_report_to_json(report).dump(2) + "\n");
    manifest.add("moments.json");
    manifest.add("manifest.json");
    manifest.finish(kOk);
    std::cout << "synth: wrote " << signals.n_observations() << " x "
              << signals.n_signals() << " signals to " << out_dir << "\n";
    return kOk;
  } catch (const cstress::MomentInfeasible& e) {
    std::cerr << "error: infeasible moment targets: " << e.what() << "\n";
    manifest.finish(kInfeasible);
    return kInfeasible;
  } catch (const cstress::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    manifest.finish(kConfigError);
    return kConfigError;
  }
}

void print_sweep_summary(const cstress::CostSurface& surface) {
  using cstress::Phase;
  std::cout << "phase    backend                          cells   median_min_s   "
               "median_max_s\n";
  for (Phase phase : {Phase::train, Phase::surveil}) {
    for (const auto& backend : surface.backends()) {
      double lo = 0.0, hi = 0.0;
      int count = 0;
      for (const auto& cell : surface.cells) {
        if (cell.phase != phase || !(cell.backend == backend) || cell.excluded)
          continue;
        lo = count == 0 ? cell.median : std::min(lo, cell.median);
        hi = count == 0 ? cell.median : std::max(hi, cell.median);
        ++count;
      }
      char line[160];
      std::snprintf(line, sizeof(line), "%-8s %-32s %5d   %12.6g   %12.6g\n",
                    cstress::to_string(phase).c_str(), backend.label().c_str(),
                    count, lo, hi);
      std::cout << line;
    }
  }
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              const std::string& backend_csv, std::optional<int> threads,
              std::optional<std::uint64_t> seed) {
  ManifestWriter manifest;
  manifest.command = "sweep";

  cstress::SweepConfig config;
  try {
    config = cstress::parse_sweep_config(cstress::load_json_file(config_path));
    if (!backend_csv.empty()) {
      config.backends.clear();
      std::istringstream in(backend_csv);
      std::string token;
      while (std::getline(in, token, ','))
        config.backends.push_back(cstress::BackendId::parse(token));
    }
    if (threads)
      cstress::override_worker_count(config, *threads,
                                     "cli:--threads=" + std::to_string(*threads));
    if (seed) config.master_seed = *seed;
    config.validate();

    fs::create_directories(out_dir);
    manifest.out_dir = out_dir;
    manifest.config = cstress::sweep_config_to_json(config);
  } catch (const cstress::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }

  std::vector<cstress::CostCell> partial_cells;
  auto progress = [&partial_cells](std::size_t index, std::size_t total,
                                   const cstress::CellCoords& coords,
                                   const std::vector<cstress::CostCell>& results) {
    std::cerr << "[cell " << index + 1 << "/" << total << "] n=" << coords.n_signals
              << " obs=" << coords.n_observations << " m=" << coords.n_memory;
    if (!results.empty() && results.front().excluded) {
      std::cerr << " excluded (" << results.front().reason << ")";
    } else {
      for (const auto& cell : results) {
        if (cell.phase == cstress::Phase::train)
          std::cerr << " " << cell.backend.label() << "=" << cell.median << "s";
      }
    }
    std::cerr << "\n";
    partial_cells.insert(partial_cells.end(), results.begin(), results.end());
  };

  auto write_outputs = [&](const cstress::CostSurface& surface) {
    cstress::export_cost_csv(cells_for_phase(surface, cstress::Phase::train),
                             (fs::path(out_dir) / "cost_train.csv").string());
    manifest.add("cost_train.csv");
    cstress::export_cost_csv(cells_for_phase(surface, cstress::Phase::surveil),
                             (fs::path(out_dir) / "cost_surveil.csv").string());
    manifest.add("cost_surveil.csv");
    cstress::export_surface_json(surface,
                                 (fs::path(out_dir) / "surface.json").string());
    manifest.add("surface.json");
    manifest.add("manifest.json");
  };

  try {
    const cstress::CostSurface surface = cstress::run_sweep(config, progress);
    write_outputs(surface);
    manifest.finish(kOk);
    print_sweep_summary(surface);
    return kOk;
  } catch (const cstress::EmptyGrid& e) {
    std::cerr << "error: " << e.what() << "\n";
    manifest.finish(kEmptyGrid);
    return kEmptyGrid;
  } catch (const std::exception& e) {
    std::cerr << "error: sweep aborted: " << e.what() << "\n";
    // Keep what completed; flag the surface as partial.
    cstress::CostSurface surface;
    surface.cells = std::move(partial_cells);
    surface.metadata.generator = std::string("containerstress ") + cstress::kVersion;
    surface.metadata.timer = cstress::to_string(config.timer);
    surface.metadata.rng_algorithm = cstress::kRngAlgorithm;
    surface.metadata.threads_override = config.threads_override_note;
    surface.metadata.config_echo = cstress::sweep_config_to_json(config);
    surface.metadata.partial = true;
    surface.metadata.started_at = manifest.started_at;
    surface.metadata.finished_at = iso8601_utc_now();
    for (const auto& backend : config.backends)
      surface.metadata.backend_capabilities.push_back(cstress::capabilities(backend));
    try {
      write_outputs(surface);
    } catch (const std::exception& inner) {
      std::cerr << "error: could not write partial output: " << inner.what()
                << "\n";
    }
    manifest.finish(kRuntimeFailure);
    return kRuntimeFailure;
  }
}

int cmd_speedup(const std::string& surface_path, const std::string& ref_token,
                const std::string& opt_token, const std::string& out_dir) {
  ManifestWriter manifest;
  manifest.command = "speedup";
  try {
    const cstress::CostSurface surface =
        cstress::import_surface_json(surface_path);
    const cstress::BackendId ref = cstress::resolve_backend(surface, ref_token);
    const cstress::BackendId opt = cstress::resolve_backend(surface, opt_token);
    const cstress::SpeedupSurface result = cstress::speedup(surface, ref, opt);

    fs::create_directories(out_dir);
    manifest.out_dir = out_dir;
    manifest.config = json{{"surface", surface_path},
                           {"ref", ref.label()},
                           {"opt", opt.label()}};
    cstress::export_speedup_csv(result, cstress::Phase::train,
                                (fs::path(out_dir) / "speedup_train.csv").string());
    manifest.add("speedup_train.csv");
    cstress::export_speedup_csv(result, cstress::Phase::surveil,
                                (fs::path(out_dir) / "speedup_surveil.csv").string());
    manifest.add("speedup_surveil.csv");
    manifest.add("manifest.json");
    manifest.finish(kOk);

    std::size_t holes = 0;
    for (const auto& cell : result.cells)
      if (cell.hole) ++holes;
    std::cout << "speedup: " << result.cells.size() - holes << " cells, "
              << holes << " holes (" << ref.label() << " vs " << opt.label()
              << ")\n";
    return kOk;
  } catch (const cstress::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    manifest.finish(kConfigError);
    return kConfigError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compute-cost scoping benchmarks for pluggable prognostic "
               "estimators"};
  app.set_version_flag("--version", std::string("containerstress ") + cstress::kVersion);
  app.require_subcommand(1);

  std::string config_path, out_dir, backend_csv, surface_path, ref_token,
      opt_token;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  CLI::App* synth = app.add_subcommand("synth", "Synthesize signals from a spec");
  synth->add_option("--config", config_path, "SignalSpec JSON path")->required();
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--seed", seed, "Override the spec seed");

  CLI::App* sweep = app.add_subcommand("sweep", "Run a cost sweep");
  sweep->add_option("--config", config_path, "SweepConfig JSON path")->required();
  sweep->add_option("--out", out_dir, "Output directory")->required();
  sweep->add_option("--backend", backend_csv,
                    "Comma-separated backend ids overriding the config");
  sweep->add_option("--threads", threads,
                    "Worker count override for optimized backends");
  sweep->add_option("--seed", seed, "Override the master seed");

  CLI::App* speedup = app.add_subcommand("speedup", "Cost ratios between backends");
  speedup->add_option("--surface", surface_path, "surface.json path")->required();
  speedup->add_option("--ref", ref_token, "Reference backend id")->required();
  speedup->add_option("--opt", opt_token, "Optimized backend id")->required();
  speedup->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  if (synth->parsed()) return cmd_synth(config_path, out_dir, seed);
  if (sweep->parsed())
    return cmd_sweep(config_path, out_dir, backend_csv, threads, seed);
  return cmd_speedup(surface_path, ref_token, opt_token, out_dir);
}
