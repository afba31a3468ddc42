#include "isr/output.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "isr/config.hpp"
#include "isr/error.hpp"

namespace isr {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_for_writing(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("error while writing '" + path + "'");
}

}  // namespace

const std::vector<std::string>& timeseries_columns() {
  static const std::vector<std::string> cols{
      "t", "u_x", "u_y", "u_z", "Jg", "theta", "c_P", "c_T", "c_E", "rho_S",
      "newton_iterations", "wall_seconds"};
  return cols;
}

void write_timeseries(const std::vector<OutputRecord>& records, const std::string& path) {
  std::ofstream out = open_for_writing(path);
  const auto& cols = timeseries_columns();
  for (size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const OutputRecord& r : records) {
    out << num(r.t) << ',' << num(r.u_monitor(0)) << ',' << num(r.u_monitor(1)) << ','
        << num(r.u_monitor(2)) << ',' << num(r.Jg) << ',' << num(r.theta);
    for (double c : r.c_spatial) out << ',' << num(c);
    out << ',' << r.newton_iterations << ',' << num(r.wall_seconds) << '\n';
  }
  finish(out, path);
}

std::vector<OutputRecord> read_timeseries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  const size_t ncol = timeseries_columns().size();
  std::vector<OutputRecord> records;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      v.push_back(std::strtod(cell.c_str(), &end));
      if (end == cell.c_str()) throw IoError(path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
    }
    if (v.size() != ncol)
      throw IoError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(ncol) + " columns");
    OutputRecord r;
    r.t = v[0];
    r.u_monitor = Vec3d(v[1], v[2], v[3]);
    r.Jg = v[4];
    r.theta = v[5];
    for (int X = 0; X < 4; ++X) r.c_spatial[X] = v[6 + X];
    r.newton_iterations = static_cast<int>(v[10]);
    r.wall_seconds = v[11];
    records.push_back(r);
  }
  return records;
}

void write_step_log(const std::vector<StepLog>& logs, const std::string& path) {
  std::ofstream out = open_for_writing(path);
  out << "step,t,dt,newton_iterations,solves_P,solves_T,solves_E,solves_S,substeps,retries,"
         "wall_seconds,final_residual,growth_clamped,warnings\n";
  for (const StepLog& l : logs) {
    out << l.step << ',' << num(l.t) << ',' << num(l.dt) << ',' << l.newton_iterations;
    for (int s : l.species_solves) out << ',' << s;
    out << ',' << l.substeps << ',' << l.retries << ',' << num(l.wall_seconds) << ','
        << (l.residual_history.empty() ? std::string() : num(l.residual_history.back())) << ','
        << (l.growth_clamped ? 1 : 0) << ',';
    std::string w;
    for (const std::string& s : l.warnings) w += (w.empty() ? "" : " | ") + s;
    for (char& ch : w)
      if (ch == ',' || ch == '\n') ch = ' ';
    out << w << '\n';
  }
  finish(out, path);
}

FieldSnapshot make_snapshot(const Simulator& sim, const State& state) {
  FieldSnapshot s;
  s.J_nodal = sim.nodal_J(state.x);
  sim.element_growth(state, s.Jg, s.theta);
  return s;
}

namespace {

void write_grid(std::ostream& out, const Mesh& mesh, const std::string& title) {
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_nodes() << " double\n";
  for (const Vec3d& X : mesh.nodes) out << num(X(0)) << ' ' << num(X(1)) << ' ' << num(X(2)) << '\n';
  const int ne = mesh.num_elements();
  out << "CELLS " << ne << ' ' << 9 * ne << '\n';
  for (const auto& el : mesh.elements) {
    out << 8;
    for (int n : el) out << ' ' << n;
    out << '\n';
  }
  out << "CELL_TYPES " << ne << '\n';
  for (int e = 0; e < ne; ++e) out << "12\n";
}

void scalar(std::ostream& out, const std::string& name, const std::vector<double>& v) {
  out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (double x : v) out << num(x) << '\n';
}

}  // namespace

void write_fields(const Mesh& mesh, const State& state, const FieldSnapshot& snapshot,
                  const std::string& path) {
  const int nn = mesh.num_nodes();
  const int ne = mesh.num_elements();
  if (state.x.size() != kDofsPerNode * nn || snapshot.J_nodal.size() != nn ||
      static_cast<int>(snapshot.Jg.size()) != ne || static_cast<int>(snapshot.theta.size()) != ne)
    throw InvalidArgument("write_fields: state or snapshot does not match the mesh");
  std::ofstream out = open_for_writing(path);
  write_grid(out, mesh, "isr fields t=" + num(state.t));
  out << "POINT_DATA " << nn << '\n';
  out << "VECTORS u double\n";
  for (int n = 0; n < nn; ++n) {
    const Vec3d u = state.u(n);
    out << num(u(0)) << ' ' << num(u(1)) << ' ' << num(u(2)) << '\n';
  }
  const char* names[4] = {"c_P", "c_T", "c_E", "rho_S"};
  for (int X = 0; X < 4; ++X) {
    std::vector<double> v(nn);
    for (int n = 0; n < nn; ++n) v[n] = state.x(dof_index(n, X)) / snapshot.J_nodal(n);
    scalar(out, names[X], v);
  }
  out << "CELL_DATA " << ne << '\n';
  scalar(out, "Jg", snapshot.Jg);
  scalar(out, "theta", snapshot.theta);
  finish(out, path);
}

void write_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out = open_for_writing(path);
  write_grid(out, mesh, "isr mesh");
  out << "POINT_DATA " << mesh.num_nodes() << '\n';
  for (const auto& [name, nodes] : mesh.node_sets) {
    std::vector<double> flag(mesh.num_nodes(), 0.0);
    for (int n : nodes) flag[n] = 1.0;
    scalar(out, "set_" + name, flag);
  }
  out << "CELL_DATA " << mesh.num_elements() << '\n';
  std::vector<double> layer(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) layer[e] = static_cast<int>(mesh.layers[e]);
  scalar(out, "layer", layer);
  finish(out, path);
}

RunOutputs run_scenario(const SimulationConfig& config, const std::string& directory) {
  const Scenario sc = build_scenario(config);
  RunOutputs outputs;
  const double interval = config.output.field_interval;
  double next_dump = 0.0;
  int dump = 0;
  auto observer = [&](const State& state, const Simulator& sim) {
    if (!(interval > 0.0) || state.t < next_dump - 1e-9 * interval) return;
    char name[32];
    std::snprintf(name, sizeof name, "fields_%05d.vtk", dump++);
    const std::string path = (fs::path(directory) / name).string();
    write_fields(sc.model.mesh, state, make_snapshot(sim, state), path);
    outputs.field_files.push_back(path);
    while (next_dump <= state.t + 1e-9 * interval) next_dump += interval;
  };
  outputs.result = run(sc.model, config.time, observer);
  outputs.timeseries_path = (fs::path(directory) / "timeseries.csv").string();
  outputs.log_path = (fs::path(directory) / "steps.csv").string();
  write_timeseries(outputs.result.records, outputs.timeseries_path);
  write_step_log(outputs.result.logs, outputs.log_path);
  return outputs;
}

std::vector<SweepRun> sweep(const SimulationConfig& base, const std::string& parameter,
                            const std::vector<std::string>& values, const std::string& directory) {
  if (values.empty()) throw InvalidArgument("sweep: no values given");
  std::vector<SweepRun> runs;
  for (const std::string& value : values) {
    SimulationConfig c = base;
    set_config_value(c, parameter, value);
    std::string tag = parameter + "=" + value;
    for (char& ch : tag)
      if (ch == '/' || ch == ' ') ch = '_';
    RunOutputs out = run_scenario(c, (fs::path(directory) / tag).string());
    runs.push_back({value, std::move(out.result.records)});
  }
  write_sweep_table(parameter, runs, (fs::path(directory) / "sweep.csv").string());
  return runs;
}

void write_sweep_table(const std::string& parameter, const std::vector<SweepRun>& runs,
                       const std::string& path) {
  // Rows are the union of the time stamps; runs lacking a time leave blanks.
  std::map<double, std::vector<const OutputRecord*>> rows;
  for (size_t i = 0; i < runs.size(); ++i)
    for (const OutputRecord& r : runs[i].records) {
      auto& row = rows[r.t];
      row.resize(runs.size(), nullptr);
      row[i] = &r;
    }
  std::ofstream out = open_for_writing(path);
  out << 't';
  for (const SweepRun& r : runs) out << ",Jg[" << parameter << '=' << r.value << ']';
  for (const SweepRun& r : runs) out << ",u_z[" << parameter << '=' << r.value << ']';
  out << '\n';
  for (const auto& [t, row] : rows) {
    out << num(t);
    for (const OutputRecord* r : row) out << ',' << (r ? num(r->Jg) : std::string());
    for (const OutputRecord* r : row) out << ',' << (r ? num(r->u_monitor(2)) : std::string());
    out << '\n';
  }
  finish(out, path);
}

}  // namespace isr
