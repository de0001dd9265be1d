// Trace directory layout: metadata.json + trace.csv (+ states.bin).
//
// CSV numbers are printed with a fixed %.17g format so that reruns with the
// same seed are byte-identical; wall-clock information stays in the metadata
// file only.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgflow/flow.hpp"

namespace lgflow {

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// FNV-1a, used to stamp every report with a hash of its configuration
inline std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hash_hex(const std::string& data) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(data)));
  return buf;
}

struct TraceIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
void write_trace(const std::filesystem::path& dir, const FlowTrace<Scalar>& trace,
                 nlohmann::json metadata, bool dump_states = false) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw TraceIoError("cannot create trace directory " + dir.string());

  const int n_states = static_cast<int>(trace.states.size());
  metadata["trace"] = {
      {"states", n_states},
      {"dt", static_cast<double>(trace.dt)},
      {"completed", trace.completed},
      {"energy_monotone", trace.energy_monotone},
      {"states_file", dump_states ? "states.bin" : ""},
  };
  if (n_states > 0) {
    metadata["trace"]["components"] = trace.states.front().components();
    metadata["trace"]["nodes"] = trace.states.front().grid.num_nodes();
    metadata["trace"]["layout"] = "row-major float64, one state per row";
  }
  {
    std::ofstream meta(dir / "metadata.json");
    if (!meta) throw TraceIoError("cannot write " + (dir / "metadata.json").string());
    meta << metadata.dump(2) << "\n";
  }

  std::ofstream csv(dir / "trace.csv");
  if (!csv) throw TraceIoError("cannot write " + (dir / "trace.csv").string());
  csv << "step,time,energy,mass,el_residual,normal_trace_residual,fenchel_gap,"
         "boundary_residual,iterations\n";
  for (int k = 0; k < n_states; ++k) {
    csv << k << "," << format_number(trace.times[k]) << ","
        << format_number(trace.energies[k]) << "," << format_number(trace.masses[k]);
    if (k > 0 && k - 1 < static_cast<int>(trace.certificates.size())) {
      const auto& c = trace.certificates[k - 1];
      csv << "," << format_number(c.euler_lagrange_residual) << ","
          << format_number(c.normal_trace_residual) << "," << format_number(c.fenchel_gap)
          << "," << format_number(c.boundary_subgradient_residual) << ","
          << trace.iterations[k - 1];
    } else {
      csv << ",0,0,0,0,0";
    }
    csv << "\n";
  }
  csv.close();

  if (dump_states && n_states > 0) {
    std::ofstream bin(dir / "states.bin", std::ios::binary);
    if (!bin) throw TraceIoError("cannot write " + (dir / "states.bin").string());
    for (const auto& state : trace.states) {
      // row-major: node-major within a state, components fastest
      for (int k = 0; k < state.values.cols(); ++k)
        for (int r = 0; r < state.values.rows(); ++r) {
          const double v = static_cast<double>(state.values(r, k));
          bin.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
    }
  }
}

struct TraceRow {
  int step = 0;
  double time = 0, energy = 0, mass = 0;
  double el_residual = 0, normal_trace_residual = 0, fenchel_gap = 0, boundary_residual = 0;
  long iterations = 0;
};

inline std::vector<TraceRow> read_trace_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw TraceIoError("missing trace file " + file.string());
  std::vector<TraceRow> rows;
  std::string line;
  std::getline(in, line); // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TraceRow r;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%ld", &r.step, &r.time,
                    &r.energy, &r.mass, &r.el_residual, &r.normal_trace_residual,
                    &r.fenchel_gap, &r.boundary_residual, &r.iterations) != 9)
      throw TraceIoError("corrupt row in " + file.string() + ": " + line);
    rows.push_back(r);
  }
  return rows;
}

inline nlohmann::json read_metadata(const std::filesystem::path& dir) {
  std::ifstream in(dir / "metadata.json");
  if (!in) throw TraceIoError("missing metadata file " + (dir / "metadata.json").string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw TraceIoError("corrupt metadata file " + (dir / "metadata.json").string() + ": " +
                       e.what());
  }
  return j;
}

} // namespace lgflow
