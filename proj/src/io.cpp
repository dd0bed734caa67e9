#include "containerstress/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "containerstress/config.hpp"
#include "containerstress/errors.hpp"

namespace cstress {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little,
              "signal binaries are little-endian");

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_signal_csv(const SignalMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("write_signal_csv: cannot open " + path);
  out << "t";
  for (Index s = 0; s < m.n_signals(); ++s) out << ",s" << s;
  out << "\n";
  for (Index t = 0; t < m.n_observations(); ++t) {
    out << t;
    for (Index s = 0; s < m.n_signals(); ++s)
      out << "," << fmt_double(m.data(t, s));
    out << "\n";
  }
  if (!out) throw IoError("write_signal_csv: write failed for " + path);
}

SignalMatrix read_signal_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_signal_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw IoError("read_signal_csv: empty file " + path);
  if (line.rfind("t", 0) != 0)
    throw IoError("read_signal_csv: bad header in " + path);
  Index n_signals = 0;
  for (char c : line)
    if (c == ',') ++n_signals;

  std::vector<double> values;
  Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    if (!std::getline(ls, field, ','))
      throw IoError("read_signal_csv: bad row in " + path);
    Index got = 0;
    while (std::getline(ls, field, ',')) {
      char* end = nullptr;
      values.push_back(std::strtod(field.c_str(), &end));
      if (end == field.c_str())
        throw IoError("read_signal_csv: bad number \"" + field + "\" in " + path);
      ++got;
    }
    if (got != n_signals)
      throw IoError("read_signal_csv: ragged row in " + path);
    ++rows;
  }

  SignalMatrix out;
  out.data.resize(rows, n_signals);
  for (Index t = 0; t < rows; ++t)
    for (Index s = 0; s < n_signals; ++s)
      out.data(t, s) = values[static_cast<std::size_t>(t * n_signals + s)];
  return out;
}

void write_signal_binary(const SignalMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("write_signal_binary: cannot open " + path);
  out.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(sizeof(double) *
                                         static_cast<std::size_t>(m.data.size())));
  if (!out) throw IoError("write_signal_binary: write failed for " + path);
  out.close();

  json sidecar{{"rows", m.n_observations()},
               {"cols", m.n_signals()},
               {"dtype", "float64"},
               {"order", "column-major"},
               {"endianness", "little"},
               {"spec", m.spec ? signal_spec_to_json(*m.spec) : json(nullptr)}};
  std::ofstream side(path + ".json", std::ios::trunc);
  if (!side) throw IoError("write_signal_binary: cannot open " + path + ".json");
  side << sidecar.dump(2) << "\n";
}

SignalMatrix read_signal_binary(const std::string& path) {
  const json sidecar = load_json_file(path + ".json");
  SignalMatrix out;
  try {
    const auto rows = sidecar.at("rows").get<Index>();
    const auto cols = sidecar.at("cols").get<Index>();
    if (sidecar.at("dtype").get<std::string>() != "float64" ||
        sidecar.at("order").get<std::string>() != "column-major" ||
        sidecar.at("endianness").get<std::string>() != "little")
      throw IoError("read_signal_binary: unsupported layout in sidecar");
    out.data.resize(rows, cols);
    if (!sidecar.at("spec").is_null())
      out.spec = parse_signal_spec(sidecar.at("spec"));
  } catch (const json::exception& e) {
    throw IoError("read_signal_binary: bad sidecar: " + std::string(e.what()));
  }

  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_signal_binary: cannot open " + path);
  in.read(reinterpret_cast<char*>(out.data.data()),
          static_cast<std::streamsize>(sizeof(double) *
                                       static_cast<std::size_t>(out.data.size())));
  if (!in) throw IoError("read_signal_binary: truncated " + path);
  return out;
}

json moment_report_to_json(const MomentReport& report) {
  auto vec = [](const Vector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
  };
  json corr = json::array();
  for (Index r = 0; r < report.cross_correlation.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < report.cross_correlation.cols(); ++c)
      row.push_back(report.cross_correlation(r, c));
    corr.push_back(std::move(row));
  }
  return json{{"mean", vec(report.mean)},
              {"variance", vec(report.variance)},
              {"skewness", vec(report.skewness)},
              {"kurtosis", vec(report.kurtosis)},
              {"lag1_autocorr", vec(report.lag1_autocorr)},
              {"cross_correlation", std::move(corr)}};
}

}  // namespace cstress
