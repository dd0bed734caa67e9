#include "containerstress/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "containerstress/errors.hpp"

namespace cstress {

using nlohmann::json;

namespace {

void require_keys(const json& j, const std::set<std::string>& allowed,
                  const char* context) {
  if (!j.is_object())
    throw ConfigError(std::string(context) + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key))
      throw ConfigError(std::string(context) + ": unknown key \"" + key + "\"");
  }
}

template <typename T>
T get_as(const json& j, const char* key, const char* context) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(context) + ": bad value for \"" + key +
                      "\": " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const char* context) {
  if (!j.contains(key)) return fallback;
  return get_as<T>(j, key, context);
}

/// Scalar-or-array per-signal target.
Vector per_signal_vector(const json& j, const char* key, Index n,
                         double fallback, const char* context) {
  if (!j.contains(key)) return Vector::Constant(n, fallback);
  const json& v = j.at(key);
  if (v.is_number()) return Vector::Constant(n, v.get<double>());
  if (v.is_array()) {
    if (static_cast<Index>(v.size()) != n)
      throw ConfigError(std::string(context) + ": \"" + key + "\" must have " +
                        std::to_string(n) + " entries");
    Vector out(n);
    for (Index i = 0; i < n; ++i) out[i] = v.at(static_cast<std::size_t>(i)).get<double>();
    return out;
  }
  throw ConfigError(std::string(context) + ": \"" + key +
                    "\" must be a number or an array");
}

}  // namespace

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

SignalSpec parse_signal_spec(const json& j) {
  static const std::set<std::string> keys = {
      "n_signals",        "n_observations", "ar_coefficient",
      "cross_correlation", "variance",      "skewness",
      "kurtosis",         "seed"};
  require_keys(j, keys, "signal spec");

  SignalSpec spec;
  spec.n_signals = get_as<Index>(j, "n_signals", "signal spec");
  spec.n_observations = get_as<Index>(j, "n_observations", "signal spec");
  if (spec.n_signals < 1 || spec.n_observations < 1)
    throw ConfigError("signal spec: dimensions must be positive");
  spec.ar_coefficient = get_or(j, "ar_coefficient", 0.0, "signal spec");
  spec.seed = get_or<std::uint64_t>(j, "seed", 0, "signal spec");

  const Index n = spec.n_signals;
  if (j.contains("cross_correlation") && j.at("cross_correlation").is_array()) {
    const json& rows = j.at("cross_correlation");
    if (static_cast<Index>(rows.size()) != n)
      throw ConfigError("signal spec: cross_correlation must be n x n");
    spec.cross_correlation.resize(n, n);
    for (Index r = 0; r < n; ++r) {
      const json& row = rows.at(static_cast<std::size_t>(r));
      if (!row.is_array() || static_cast<Index>(row.size()) != n)
        throw ConfigError("signal spec: cross_correlation must be n x n");
      for (Index c = 0; c < n; ++c)
        spec.cross_correlation(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
  } else {
    const double rho = get_or(j, "cross_correlation", 0.0, "signal spec");
    spec.cross_correlation = Matrix::Constant(n, n, rho);
    spec.cross_correlation.diagonal().setOnes();
  }
  spec.variance_target = per_signal_vector(j, "variance", n, 1.0, "signal spec");
  spec.skewness_target = per_signal_vector(j, "skewness", n, 0.0, "signal spec");
  spec.kurtosis_target = per_signal_vector(j, "kurtosis", n, 3.0, "signal spec");
  spec.validate();
  return spec;
}

json signal_spec_to_json(const SignalSpec& spec) {
  json corr = json::array();
  for (Index r = 0; r < spec.n_signals; ++r) {
    json row = json::array();
    for (Index c = 0; c < spec.n_signals; ++c)
      row.push_back(spec.cross_correlation(r, c));
    corr.push_back(std::move(row));
  }
  auto vec = [](const Vector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
  };
  return json{{"n_signals", spec.n_signals},
              {"n_observations", spec.n_observations},
              {"ar_coefficient", spec.ar_coefficient},
              {"cross_correlation", std::move(corr)},
              {"variance", vec(spec.variance_target)},
              {"skewness", vec(spec.skewness_target)},
              {"kurtosis", vec(spec.kurtosis_target)},
              {"seed", spec.seed}};
}

KernelConfig kernel_from_json(const json& j) {
  static const std::set<std::string> keys = {"kind", "bandwidth"};
  require_keys(j, keys, "kernel");
  KernelConfig cfg;
  const std::string kind = get_or<std::string>(j, "kind", "inverse_distance", "kernel");
  if (kind == "inverse_distance") {
    cfg.kind = KernelKind::inverse_distance;
  } else if (kind == "gaussian") {
    cfg.kind = KernelKind::gaussian;
  } else {
    throw ConfigError("kernel: unknown kind \"" + kind + "\"");
  }
  if (j.contains("bandwidth") && !j.at("bandwidth").is_null())
    cfg.bandwidth = get_as<double>(j, "bandwidth", "kernel");
  cfg.validate();
  return cfg;
}

json kernel_to_json(const KernelConfig& cfg) {
  json out{{"kind", to_string(cfg.kind)}};
  if (cfg.bandwidth) out["bandwidth"] = *cfg.bandwidth;
  return out;
}

BackendId backend_from_json(const json& j) {
  if (j.is_string()) return BackendId::parse(j.get<std::string>());
  static const std::set<std::string> keys = {"kind", "tile_size", "worker_count"};
  require_keys(j, keys, "backend");
  const std::string kind = get_as<std::string>(j, "kind", "backend");
  if (kind == "reference") return BackendId::reference();
  if (kind != "optimized")
    throw ConfigError("backend: unknown kind \"" + kind + "\"");
  const int tile = get_or(j, "tile_size", 64, "backend");
  const int workers = get_or(j, "worker_count", 0, "backend");
  return BackendId::optimized(workers, tile);
}

json backend_to_json(const BackendId& id) {
  if (id.kind == BackendId::Kind::reference) return json("reference");
  return json{{"kind", "optimized"},
              {"tile_size", id.tile_size},
              {"worker_count", id.worker_count}};
}

SweepConfig parse_sweep_config(const json& j) {
  static const std::set<std::string> keys = {
      "grid",   "replicates", "warmups",     "backends", "kernel",
      "signals", "master_seed", "timer",     "estimator"};
  require_keys(j, keys, "sweep config");

  SweepConfig config;

  if (!j.contains("grid")) throw ConfigError("sweep config: missing \"grid\"");
  {
    static const std::set<std::string> grid_keys = {
        "signal_counts", "observation_counts", "memory_counts",
        "training_observation_factor"};
    const json& g = j.at("grid");
    require_keys(g, grid_keys, "grid");
    config.grid.signal_counts =
        get_as<std::vector<Index>>(g, "signal_counts", "grid");
    config.grid.observation_counts =
        get_as<std::vector<Index>>(g, "observation_counts", "grid");
    config.grid.memory_counts =
        get_as<std::vector<Index>>(g, "memory_counts", "grid");
    config.grid.training_observation_factor =
        get_or<Index>(g, "training_observation_factor", 4, "grid");
  }

  config.replicates = get_or(j, "replicates", 5, "sweep config");
  config.warmups = get_or(j, "warmups", 1, "sweep config");
  config.master_seed = get_or<std::uint64_t>(j, "master_seed", 0, "sweep config");
  config.estimator = get_or<std::string>(j, "estimator", "mset2", "sweep config");
  config.timer = timer_from_string(
      get_or<std::string>(j, "timer", "wall_monotonic", "sweep config"));

  if (j.contains("kernel")) config.kernel = kernel_from_json(j.at("kernel"));

  if (j.contains("backends")) {
    if (!j.at("backends").is_array())
      throw ConfigError("sweep config: \"backends\" must be an array");
    for (const json& b : j.at("backends"))
      config.backends.push_back(backend_from_json(b));
  } else {
    config.backends = {BackendId::reference(), BackendId::optimized()};
  }

  if (j.contains("signals")) {
    static const std::set<std::string> sig_keys = {
        "ar_coefficient", "cross_correlation", "variance", "skewness",
        "kurtosis"};
    const json& s = j.at("signals");
    require_keys(s, sig_keys, "signals");
    config.signal_template.ar_coefficient =
        get_or(s, "ar_coefficient", 0.0, "signals");
    config.signal_template.cross_correlation =
        get_or(s, "cross_correlation", 0.0, "signals");
    config.signal_template.variance = get_or(s, "variance", 1.0, "signals");
    config.signal_template.skewness = get_or(s, "skewness", 0.0, "signals");
    config.signal_template.kurtosis = get_or(s, "kurtosis", 3.0, "signals");
  }

  if (const char* env = std::getenv("CONTAINERSTRESS_THREADS")) {
    char* end = nullptr;
    const long workers = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || workers < 1)
      throw ConfigError(
          "CONTAINERSTRESS_THREADS must be a positive integer, got \"" +
          std::string(env) + "\"");
    override_worker_count(config, static_cast<int>(workers),
                          "env:CONTAINERSTRESS_THREADS=" + std::string(env));
  }

  config.validate();
  return config;
}

json sweep_config_to_json(const SweepConfig& config) {
  json backends = json::array();
  for (const auto& b : config.backends) backends.push_back(backend_to_json(b));
  return json{
      {"grid",
       {{"signal_counts", config.grid.signal_counts},
        {"observation_counts", config.grid.observation_counts},
        {"memory_counts", config.grid.memory_counts},
        {"training_observation_factor", config.grid.training_observation_factor}}},
      {"replicates", config.replicates},
      {"warmups", config.warmups},
      {"backends", std::move(backends)},
      {"kernel", kernel_to_json(config.kernel)},
      {"signals",
       {{"ar_coefficient", config.signal_template.ar_coefficient},
        {"cross_correlation", config.signal_template.cross_correlation},
        {"variance", config.signal_template.variance},
        {"skewness", config.signal_template.skewness},
        {"kurtosis", config.signal_template.kurtosis}}},
      {"master_seed", config.master_seed},
      {"timer", to_string(config.timer)},
      {"estimator", config.estimator}};
}

void override_worker_count(SweepConfig& config, int workers,
                           const std::string& note) {
  if (workers < 1) throw ConfigError("worker override must be >= 1");
  for (auto& backend : config.backends) {
    if (backend.kind == BackendId::Kind::optimized)
      backend.worker_count = workers;
  }
  config.threads_override_note = note;
}

}  // namespace cstress
