// Result files: per-step CSV time series, VTK legacy field dumps, step logs,
// and the run/sweep drivers used by the command-line tool.
#pragma once

#include <string>
#include <vector>

#include "isr/scenarios.hpp"
#include "isr/solver.hpp"

namespace isr {

/// Column names of the time series CSV, in file order.
const std::vector<std::string>& timeseries_columns();

/// One row per record, 17 significant digits. Throws IoError.
void write_timeseries(const std::vector<OutputRecord>& records, const std::string& path);
/// Inverse of write_timeseries (bit-exact). Throws IoError on malformed input.
std::vector<OutputRecord> read_timeseries(const std::string& path);

/// Per-step diagnostics: step, t, dt, iterations, species solves, substeps,
/// retries, wall time, last residual norm, warnings.
void write_step_log(const std::vector<StepLog>& logs, const std::string& path);

/// Quantities derived from a state for a field dump.
struct FieldSnapshot {
  Eigen::VectorXd J_nodal;
  std::vector<double> Jg;     // per cell, averaged over Gauss points
  std::vector<double> theta;  // per cell
};

FieldSnapshot make_snapshot(const Simulator& sim, const State& state);

/// VTK legacy ASCII unstructured grid: points, hexahedra, point data (u,
/// c0/J of P, T, E, and rho0_S/J), cell data (Jg, theta). Throws IoError.
void write_fields(const Mesh& mesh, const State& state, const FieldSnapshot& snapshot,
                  const std::string& path);

/// Mesh-only VTK dump with layer ids as cell data and node-set membership
/// flags as point data.
void write_mesh(const Mesh& mesh, const std::string& path);

struct RunOutputs {
  RunResult result;
  std::vector<std::string> field_files;
  std::string timeseries_path;
  std::string log_path;
};

/// Builds the scenario, runs it and writes timeseries.csv, steps.csv and
/// fields_NNNNN.vtk (every output.field_interval days, if > 0) into `directory`.
RunOutputs run_scenario(const SimulationConfig& config, const std::string& directory);

struct SweepRun {
  std::string value;
  std::vector<OutputRecord> records;
};

/// Runs the base configuration once per value of `parameter` ("section.key"),
/// each into its own subdirectory, and writes sweep.csv with the monitor Jg
/// and u_Z trajectories side by side.
std::vector<SweepRun> sweep(const SimulationConfig& base, const std::string& parameter,
                            const std::vector<std::string>& values, const std::string& directory);

/// Writes the combined sweep CSV (time column, then Jg and u_Z per value).
void write_sweep_table(const std::string& parameter, const std::vector<SweepRun>& runs,
                       const std::string& path);

}  // namespace isr
