// Command-line front end:
//   isr run <config> [--dt D] [--t-end T] [--scheme monolithic|staggered] [-o DIR]
//   isr sweep <config> --param section.key --values v1,v2,... [same flags]
//   isr mesh-dump <config> [-o FILE]
// Exit codes: 0 success, 2 config, 3 geometry, 4 convergence, 5 I/O,
// 6 invalid argument, 1 anything else.
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "isr/config.hpp"
#include "isr/error.hpp"
#include "isr/output.hpp"
#include "isr/scenarios.hpp"

namespace {

struct Overrides {
  std::optional<double> dt;
  std::optional<double> t_end;
  std::optional<std::string> scheme;
  std::optional<std::string> output_dir;
  bool verbose = false;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--dt", o.dt, "time step in days");
  cmd->add_option("--t-end", o.t_end, "end time in days");
  cmd->add_option("--scheme", o.scheme, "monolithic or staggered")
      ->check(CLI::IsMember({"monolithic", "staggered"}));
  cmd->add_option("-o,--output-dir", o.output_dir, "output directory");
  cmd->add_flag("-v,--verbose", o.verbose, "print Newton residuals");
}

isr::SimulationConfig load_with_overrides(const std::string& path, const Overrides& o) {
  isr::SimulationConfig c = isr::load_config(path);
  if (o.dt) isr::set_config_value(c, "time.dt", std::to_string(*o.dt));
  if (o.t_end) isr::set_config_value(c, "time.t_end", std::to_string(*o.t_end));
  if (o.scheme) isr::set_config_value(c, "time.scheme", *o.scheme);
  if (o.output_dir) c.output.directory = *o.output_dir;
  c.time.verbose = o.verbose;
  return c;
}

void print_summary(const std::vector<isr::OutputRecord>& records) {
  if (records.empty()) return;
  const isr::OutputRecord& r = records.back();
  std::printf("t = %g days: Jg = %.6f, theta = %.6f, u_z = %.6e mm (%zu records)\n", r.t, r.Jg,
              r.theta, r.u_monitor(2), records.size());
}

std::vector<std::string> split_values(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const std::string& s : raw) {
    size_t start = 0;
    while (start <= s.size()) {
      const size_t comma = s.find(',', start);
      const std::string part = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!part.empty()) out.push_back(part);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled growth and restenosis simulator"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides overrides;

  CLI::App* run_cmd = app.add_subcommand("run", "run a scenario");
  run_cmd->add_option("config", config_path, "configuration file")->required();
  add_overrides(run_cmd, overrides);

  std::string param;
  std::vector<std::string> values;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a scenario once per parameter value");
  sweep_cmd->add_option("config", config_path, "configuration file")->required();
  sweep_cmd->add_option("--param", param, "parameter as section.key")->required();
  sweep_cmd->add_option("--values", values, "comma-separated values")->required();
  add_overrides(sweep_cmd, overrides);

  std::string mesh_out;
  CLI::App* mesh_cmd = app.add_subcommand("mesh-dump", "write the scenario mesh as VTK");
  mesh_cmd->add_option("config", config_path, "configuration file")->required();
  mesh_cmd->add_option("-o,--output", mesh_out, "output file (default <output dir>/mesh.vtk)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(isr::ErrorCategory::InvalidArgument);
  }

  try {
    if (*run_cmd) {
      const isr::SimulationConfig c = load_with_overrides(config_path, overrides);
      const isr::RunOutputs out = isr::run_scenario(c, c.output.directory);
      print_summary(out.result.records);
      std::printf("wrote %s, %s and %zu field files\n", out.timeseries_path.c_str(),
                  out.log_path.c_str(), out.field_files.size());
    } else if (*sweep_cmd) {
      const isr::SimulationConfig c = load_with_overrides(config_path, overrides);
      const auto runs = isr::sweep(c, param, split_values(values), c.output.directory);
      for (const auto& r : runs) {
        std::printf("%s = %s: ", param.c_str(), r.value.c_str());
        print_summary(r.records);
      }
      std::printf("wrote %s\n", (std::filesystem::path(c.output.directory) / "sweep.csv").c_str());
    } else if (*mesh_cmd) {
      const isr::SimulationConfig c = isr::load_config(config_path);
      const isr::Scenario sc = isr::build_scenario(c);
      const std::string path =
          mesh_out.empty() ? (std::filesystem::path(c.output.directory) / "mesh.vtk").string() : mesh_out;
      isr::write_mesh(sc.model.mesh, path);
      std::printf("%d nodes, %d elements, %zu flux quads, %zu constrained dofs -> %s\n",
                  sc.model.mesh.num_nodes(), sc.model.mesh.num_elements(), sc.model.flux_quads.size(),
                  sc.model.fixed_dofs.size(), path.c_str());
    }
  } catch (const isr::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
