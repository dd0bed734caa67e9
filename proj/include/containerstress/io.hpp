#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "containerstress/signals.hpp"

namespace cstress {

/// CSV with header row "t,s0,s1,...", one observation per row, LF line
/// endings, '.' decimal separator, full round-trip precision.
void write_signal_csv(const SignalMatrix& m, const std::string& path);
SignalMatrix read_signal_csv(const std::string& path);

/// Raw little-endian float64 column-major buffer plus a JSON sidecar at
/// path + ".json" carrying dimensions and (when available) the spec.
void write_signal_binary(const SignalMatrix& m, const std::string& path);
SignalMatrix read_signal_binary(const std::string& path);

nlohmann::json moment_report_to_json(const MomentReport& report);

}  // namespace cstress
