#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "containerstress/signals.hpp"
#include "containerstress/sweep.hpp"

namespace cstress {

/// Parses a JSON file; throws IoError for unreadable paths and
/// ConfigError for malformed JSON.
nlohmann::json load_json_file(const std::string& path);

// All parsers reject unknown keys so config files stay auditable.

SignalSpec parse_signal_spec(const nlohmann::json& j);
nlohmann::json signal_spec_to_json(const SignalSpec& spec);

KernelConfig kernel_from_json(const nlohmann::json& j);
nlohmann::json kernel_to_json(const KernelConfig& cfg);

BackendId backend_from_json(const nlohmann::json& j);
nlohmann::json backend_to_json(const BackendId& id);

/// Applies the CONTAINERSTRESS_THREADS environment override to the
/// optimized backends and records it in threads_override_note.
SweepConfig parse_sweep_config(const nlohmann::json& j);
nlohmann::json sweep_config_to_json(const SweepConfig& config);

/// Forces worker_count on every optimized backend (CLI --threads).
void override_worker_count(SweepConfig& config, int workers,
                           const std::string& note);

}  // namespace cstress
