#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "isr/config.hpp"
#include "isr/error.hpp"
#include "isr/output.hpp"
#include "isr/scenarios.hpp"

using namespace isr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("isr_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  int n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

// Minimal reader for the legacy VTK files written by write_fields.
struct VtkFile {
  int points = -1, cells = -1, cell_list = -1, cell_types = -1;
  std::vector<int> types;
  std::vector<Vec3d> vectors;
  std::map<std::string, std::vector<double>> scalars;
};

VtkFile read_vtk(const fs::path& path) {
  std::ifstream in(path);
  VtkFile f;
  std::string tok;
  int point_data = 0, cell_data = 0, current = 0;
  while (in >> tok) {
    if (tok == "POINTS") {
      std::string type;
      in >> f.points >> type;
      for (int i = 0; i < 3 * f.points; ++i) in >> tok;
    } else if (tok == "CELLS") {
      in >> f.cells >> f.cell_list;
      for (int i = 0; i < f.cell_list; ++i) in >> tok;
    } else if (tok == "CELL_TYPES") {
      in >> f.cell_types;
      f.types.resize(f.cell_types);
      for (int& t : f.types) in >> t;
    } else if (tok == "POINT_DATA") {
      in >> point_data;
      current = point_data;
    } else if (tok == "CELL_DATA") {
      in >> cell_data;
      current = cell_data;
    } else if (tok == "VECTORS") {
      std::string name, type;
      in >> name >> type;
      f.vectors.resize(current);
      for (Vec3d& v : f.vectors) in >> v(0) >> v(1) >> v(2);
    } else if (tok == "SCALARS") {
      std::string name, type, lookup, table;
      int comps;
      in >> name >> type >> comps >> lookup >> table;
      auto& v = f.scalars[name];
      v.resize(current);
      for (double& x : v) in >> x;
    }
  }
  return f;
}

}  // namespace

TEST_CASE("empty block config gives the default parameters") {
  const SimulationConfig c = parse_config("scenario = block\n");
  CHECK(c.scenario == ScenarioKind::Block);
  CHECK(c.block_length == 1.0);
  CHECK(c.block_divisions == 4);
  CHECK(c.time.dt == 1.0);
  CHECK(c.time.t_end == 370.0);
  for (const LayerParams& l : c.layers) {
    const SpeciesParams& s = l.species;
    CHECK(s.D_P == 0.1);
    CHECK(s.eta_P == 1e-6);
    CHECK(s.eps_P == 1e-7);
    CHECK(s.c_P_th == 1e-15);
    CHECK(s.l_P == 1e16);
    CHECK(s.D_T == 0.1);
    CHECK(s.eps_T == 1e-7);
    CHECK(s.c_T_th == 1e-16);
    CHECK(s.l_T == 1e16);
    CHECK(s.eta_E == 1e-7);
    CHECK(s.eps_E == 1e21);
    CHECK(s.c_E_eq == 7.0e-9);
    CHECK(s.c_E_th == 7.0007e-9);
    CHECK(s.chi_C == 1e11);
    CHECK(s.chi_H == 1e6);
    CHECK(s.eta_S == 1e14);
    CHECK(s.rho_S_eq == 3.7e5);
    const StructuralParams& m = l.structural;
    CHECK(m.mu == 0.02);
    CHECK(m.lambda == 10.0);
    CHECK(m.k1_bar == 0.112);
    CHECK(m.k2 == 20.61);
    CHECK(m.kappa == 0.1);
    CHECK(m.alpha == 41.0);
    CHECK(m.growth_model == GrowthModel::IsotropicMatrix);
  }
  CHECK(c.peak_q_P == 1e-19);
  CHECK(c.peak_q_T == 1e-18);
}

TEST_CASE("artery defaults apply the layer values on top of the block defaults") {
  const SimulationConfig c = parse_config("scenario = angioplasty\n");
  struct Row {
    double D_P, eps_E, chi_C, chi_H, eta_S, mu, lambda, k1, k2, kappa, alpha;
  };
  const Row media{0.01, 3.0e23, 1.0e11, 1.0e6, 1.0e13, 0.02, 10.0, 0.112, 20.61, 0.24, 41.0};
  const Row adventitia{0.005, 3.0e23, 0.0, 0.0, 0.0, 0.008, 10.0, 0.362, 7.089, 0.17, 50.1};
  for (auto [layer, row] : {std::pair{Layer::Media, media}, std::pair{Layer::Adventitia, adventitia}}) {
    const LayerParams& l = c.layer(layer);
    CHECK(l.species.D_P == row.D_P);
    CHECK(l.species.eps_E == row.eps_E);
    CHECK(l.species.chi_C == row.chi_C);
    CHECK(l.species.chi_H == row.chi_H);
    CHECK(l.species.eta_S == row.eta_S);
    CHECK(l.structural.mu == row.mu);
    CHECK(l.structural.lambda == row.lambda);
    CHECK(l.structural.k1_bar == row.k1);
    CHECK(l.structural.k2 == row.k2);
    CHECK(l.structural.kappa == row.kappa);
    CHECK(l.structural.alpha == row.alpha);
    // Unlisted entries keep the block defaults.
    CHECK(l.species.D_T == 0.1);
    CHECK(l.species.eta_E == 1e-7);
    CHECK(l.species.c_E_th == 7.0007e-9);
  }
  CHECK(c.artery.length == 6.0);
  CHECK(c.artery.r_inner == 1.55);
  CHECK(c.artery.r_media_outer == 1.89);
  CHECK(c.artery.r_outer == 2.21);

  const SimulationConfig s = parse_config("scenario = stent\n");
  CHECK(s.artery.length == 3.0);
  for (Layer l : {Layer::Media, Layer::Adventitia}) {
    CHECK(s.layer(l).structural.growth_model == GrowthModel::StressFreeAnisotropic);
    CHECK(s.layer(l).structural.kappa == 0.0);
  }
}

TEST_CASE("config overrides") {
  const SimulationConfig c = parse_config(
      "# isotropic dispersion variant\n"
      "scenario = block\n"
      "[structural]\n"
      "kappa = 0.3\n"
      "alpha = 30 degrees\n"
      "[species]\n"
      "D_P = 0.05 mm^2/day   # slower\n"
      "rho_S_eq = 4e5 cells/mm^3\n"
      "[time]\n"
      "dt = 0.5 days\n"
      "scheme = staggered\n"
      "freeze_mechanics = yes\n"
      "[flux]\n"
      "profile = 0 0 0; 10 1e-19 1e-18; 50 0 0\n"
      "[output]\n"
      "monitor_point = 0.5, 0.5, 1 mm\n");
  CHECK(c.layers[0].structural.kappa == 0.3);
  CHECK(c.layers[0].structural.alpha == 30.0);
  CHECK(c.layers[0].species.D_P == 0.05);
  CHECK(c.layers[0].species.rho_S_eq == 4e5);
  CHECK(c.layers[0].structural.rho_S_eq == 4e5);
  CHECK(c.time.dt == 0.5);
  CHECK(c.time.scheme == Scheme::Staggered);
  CHECK(c.time.freeze_mechanics);
  CHECK(c.custom_profile);
  CHECK(c.influx_profile().q(Field::P, 5.0) == doctest::Approx(0.5e-19));
  REQUIRE(c.output.monitor_point.has_value());
  CHECK((*c.output.monitor_point - Vec3d(0.5, 0.5, 1.0)).norm() == 0.0);

  // Per-layer sections override whole-family ones regardless of order.
  const SimulationConfig a = parse_config(
      "scenario = angioplasty\n[species.media]\neta_E = 2e-7\n[species]\neta_E = 5e-8\n");
  CHECK(a.layer(Layer::Media).species.eta_E == 2e-7);
  CHECK(a.layer(Layer::Adventitia).species.eta_E == 5e-8);

  SimulationConfig b = SimulationConfig::defaults(ScenarioKind::Block);
  set_config_value(b, "structural.kappa", "0.05");
  CHECK(b.layers[0].structural.kappa == 0.05);
  set_config_value(b, "time.dt", "0.25 day");
  CHECK(b.time.dt == 0.25);
  CHECK_THROWS_AS(set_config_value(b, "structural.kappa", "0.5"), ConfigError);
  CHECK_THROWS_AS(set_config_value(b, "kappa", "0.1"), ConfigError);
  CHECK_THROWS_AS(set_config_value(b, "species.media.eta_E", "1e-7"), ConfigError);
  SimulationConfig art = SimulationConfig::defaults(ScenarioKind::Angioplasty);
  set_config_value(art, "species.media.eta_E", "3e-7 mol/cell/day");
  CHECK(art.layer(Layer::Media).species.eta_E == 3e-7);
  CHECK(art.layer(Layer::Adventitia).species.eta_E == 1e-7);
}

TEST_CASE("config errors carry line numbers") {
  std::string e = config_error("scenario = block\n[species]\nD_Q = 0.1\n");
  CHECK(e.find("<config>:3:") != std::string::npos);
  CHECK(e.find("unknown key 'D_Q'") != std::string::npos);

  e = config_error("scenario = block\n\n[species]\nD_P = 0.1 mm/day\n");
  CHECK(e.find("<config>:4:") != std::string::npos);
  CHECK(e.find("unit mismatch") != std::string::npos);
  CHECK(e.find("mm^2/day") != std::string::npos);

  e = config_error("[species]\nD_P = 0.1\n");
  CHECK(e.find("missing 'scenario") != std::string::npos);

  e = config_error("scenario = block\n[time]\ndt = 1\ndt = 2\n");
  CHECK(e.find("<config>:4:") != std::string::npos);
  CHECK(e.find("duplicate") != std::string::npos);

  e = config_error("scenario = block\n[species.media]\neta_E = 1e-7\n");
  CHECK(e.find("<config>:3:") != std::string::npos);
  CHECK(e.find("artery") != std::string::npos);

  e = config_error("scenario = block\n[solver]\n");
  CHECK(e.find("<config>:2:") != std::string::npos);

  e = config_error("scenario = block\n[time]\ndt = fast\n");
  CHECK(e.find("<config>:3:") != std::string::npos);
  CHECK(e.find("expected a number") != std::string::npos);

  e = config_error("scenario = cube\n");
  CHECK(e.find("<config>:1:") != std::string::npos);

  // Anisotropic growth needs aligned fibers.
  e = config_error("scenario = block\n[structural]\ngrowth_model = stress_free_anisotropic\n");
  CHECK(e.find("kappa must be 0") != std::string::npos);
  CHECK_NOTHROW(parse_config(
      "scenario = block\n[structural]\ngrowth_model = stress_free_anisotropic\nkappa = 0\n"));

  CHECK_THROWS_AS(load_config("/nonexistent/isr.ini"), IoError);
}

TEST_CASE("block scenario") {
  const Scenario sc = build_scenario(SimulationConfig::defaults(ScenarioKind::Block));
  const Model& m = sc.model;
  CHECK(m.mesh.num_elements() == 64);
  for (int i = 0; i < 3; ++i) {
    int count = 0;
    for (int d : m.fixed_dofs) count += (d % kDofsPerNode == 4 + i);
    CHECK(count == 25);
  }
  CHECK(m.flux_quads.size() == 16u);
  for (const SurfaceQuad& q : m.flux_quads)
    for (int n : q.nodes) CHECK(m.mesh.nodes[n](2) == 1.0);
  CHECK((m.mesh.nodes[m.monitor_node] - Vec3d(1, 1, 1)).norm() == 0.0);
}

TEST_CASE("angioplasty scenario") {
  SimulationConfig c = SimulationConfig::defaults(ScenarioKind::Angioplasty);
  c.artery.divisions = {2, 2, 6, 12};
  const Scenario sc = build_scenario(c);
  const Model& m = sc.model;
  const State s = m.initial_state();
  for (int n = 0; n < m.mesh.num_nodes(); ++n) {
    CHECK(s.c0(n, Field::P) == 0.0);
    CHECK(s.c0(n, Field::T) == 0.0);
    CHECK(s.c0(n, Field::E) == 7.0e-9);
    CHECK(s.c0(n, Field::S) == 3.7e5);
    CHECK(s.u(n).norm() == 0.0);
  }
  for (int e = 0; e < m.mesh.num_elements(); ++e) {
    const LayerParams& lp = c.layer(m.mesh.layers[e]);
    CHECK(m.materials[e].species.D_P == lp.species.D_P);
    CHECK(m.materials[e].structural.k1_bar == lp.structural.k1_bar);
  }
  for (const SurfaceQuad& q : m.flux_quads)
    for (int n : q.nodes) {
      CHECK(m.mesh.nodes[n](2) >= 2.0 - 1e-12);
      CHECK(m.mesh.nodes[n](2) <= 5.0 + 1e-12);
    }
  const Vec3d P = m.mesh.nodes[m.monitor_node];
  CHECK(std::hypot(P(0), P(1)) == doctest::Approx(1.55));
  CHECK(P(2) == doctest::Approx(3.5));

  const ThicknessProfile t0 = neointimal_thickness(m.mesh, s, 3.5);
  CHECK(t0.theta.size() == 7u);
  CHECK(t0.max() == 0.0);
  CHECK(t0.mean() == 0.0);
  CHECK_THROWS_AS(neointimal_thickness(m.mesh, s, 7.0), InvalidArgument);

  // An inward radial displacement of the lumen reads as thickness.
  State moved = s;
  for (int n : m.mesh.node_set("lumen")) {
    const Vec3d X = m.mesh.nodes[n];
    const Vec3d er = Vec3d(X(0), X(1), 0.0).normalized();
    moved.x.segment<3>(u_dof(n, 0)) = -0.05 * er;
  }
  const ThicknessProfile t1 = neointimal_thickness(m.mesh, moved, 3.3);
  CHECK(t1.max() == doctest::Approx(0.05));
  CHECK(t1.mean() == doctest::Approx(0.05));
}

TEST_CASE("stent scenario") {
  SimulationConfig c = SimulationConfig::defaults(ScenarioKind::Stent);
  c.artery.divisions = {2, 2, 6, 30};  // 0.1 mm rings
  const Scenario sc = build_scenario(c);
  const Model& m = sc.model;
  const std::vector<int>& strut = m.mesh.node_set("strut");
  REQUIRE(!strut.empty());
  for (int n : strut) {
    CHECK(std::abs(m.mesh.nodes[n](2) - 1.5) <= 0.05 + 1e-9);
    for (int i = 0; i < 3; ++i)
      CHECK(std::binary_search(m.fixed_dofs.begin(), m.fixed_dofs.end(), u_dof(n, i)));
  }
  // Flux patch = lumen quads minus those touching the strut band.
  size_t excluded = 0;
  for (const SurfaceQuad& q : m.mesh.patch("lumen")) {
    const bool touches = std::any_of(q.nodes.begin(), q.nodes.end(), [&](int n) {
      return std::binary_search(strut.begin(), strut.end(), n);
    });
    const bool in_flux = std::any_of(m.flux_quads.begin(), m.flux_quads.end(),
                                     [&](const SurfaceQuad& f) { return f.nodes == q.nodes; });
    CHECK(in_flux == !touches);
    excluded += touches;
  }
  CHECK(excluded == 2u * 6u);
  CHECK(m.flux_quads.size() + excluded == m.mesh.patch("lumen").size());
}

TEST_CASE("time series files") {
  const fs::path dir = scratch("timeseries");
  write_timeseries({}, (dir / "empty.csv").string());
  CHECK(count_lines(dir / "empty.csv") == 1);
  CHECK(read_timeseries((dir / "empty.csv").string()).empty());

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<OutputRecord> recs(371);
  for (size_t k = 0; k < recs.size(); ++k) {
    OutputRecord& r = recs[k];
    r.t = static_cast<double>(k);
    r.u_monitor = Vec3d(u(rng), u(rng), u(rng)) * 1e-3;
    r.Jg = 1.0 + u(rng) / 3.0;
    r.theta = std::cbrt(r.Jg);
    for (double& c : r.c_spatial) c = std::abs(u(rng)) * 1e-15 / 3.0;
    r.newton_iterations = static_cast<int>(k % 5);
    r.wall_seconds = 0.1 * std::abs(u(rng));
  }
  const fs::path path = dir / "ts.csv";
  write_timeseries(recs, path.string());
  CHECK(count_lines(path) == 372);
  {
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,u_x,u_y,u_z,Jg,theta,c_P,c_T,c_E,rho_S,newton_iterations,wall_seconds");
  }
  const std::vector<OutputRecord> back = read_timeseries(path.string());
  REQUIRE(back.size() == recs.size());
  bool exact = true;
  for (size_t k = 0; k < recs.size(); ++k) {
    exact = exact && back[k].t == recs[k].t && back[k].u_monitor == recs[k].u_monitor &&
            back[k].Jg == recs[k].Jg && back[k].theta == recs[k].theta &&
            back[k].c_spatial == recs[k].c_spatial &&
            back[k].newton_iterations == recs[k].newton_iterations &&
            back[k].wall_seconds == recs[k].wall_seconds;
  }
  CHECK(exact);

  std::ofstream((dir / "bad.csv").string()) << "t,u_x\n1,2\n";
  CHECK_THROWS_AS(read_timeseries((dir / "bad.csv").string()), IoError);
  CHECK_THROWS_AS(read_timeseries((dir / "missing.csv").string()), IoError);
  CHECK_THROWS_AS(write_timeseries(recs, "/proc/isr_cannot_write/ts.csv"), IoError);
}

TEST_CASE("VTK field dumps") {
  SimulationConfig c = SimulationConfig::defaults(ScenarioKind::Block);
  c.block_divisions = 2;
  c.time.t_end = 40.0;
  c.time.dt = 2.0;
  c.output.field_interval = 20.0;
  const fs::path dir = scratch("vtk");
  const RunOutputs out = run_scenario(c, dir.string());
  REQUIRE(out.field_files.size() == 3u);  // t = 0, 20, 40
  CHECK(count_lines(out.timeseries_path) == 22);
  CHECK(count_lines(out.log_path) == 21);

  const VtkFile first = read_vtk(out.field_files.front());
  CHECK(first.points == 27);
  CHECK(first.cells == 8);
  CHECK(first.cell_list == 72);
  CHECK(first.cell_types == 8);
  for (int t : first.types) CHECK(t == 12);
  for (const auto& name : {"c_P", "c_T", "c_E", "rho_S"}) CHECK(first.scalars.at(name).size() == 27u);
  for (double th : first.scalars.at("theta")) CHECK(th == 1.0);
  for (double jg : first.scalars.at("Jg")) CHECK(jg == 1.0);
  for (const Vec3d& v : first.vectors) CHECK(v.norm() == 0.0);

  const VtkFile last = read_vtk(out.field_files.back());
  const State& s = out.result.final_state;
  REQUIRE(last.vectors.size() == 27u);
  for (int n = 0; n < 27; ++n) CHECK((last.vectors[n] - s.u(n)).norm() == 0.0);
  CHECK(*std::max_element(last.scalars.at("theta").begin(), last.scalars.at("theta").end()) > 1.0);

  const Mesh mesh = build_block(1.0, 2);
  write_mesh(mesh, (dir / "mesh.vtk").string());
  const VtkFile mf = read_vtk(dir / "mesh.vtk");
  CHECK(mf.points == 27);
  CHECK(mf.scalars.count("set_z0") == 1u);
  CHECK(mf.scalars.count("layer") == 1u);
  double z0 = 0.0;
  for (double v : mf.scalars.at("set_z0")) z0 += v;
  CHECK(z0 == 9.0);
}

TEST_CASE("sweeps") {
  SimulationConfig c = SimulationConfig::defaults(ScenarioKind::Block);
  c.block_divisions = 2;
  c.time.t_end = 60.0;
  c.time.dt = 2.0;
  const fs::path dir = scratch("sweep");

  const std::vector<SweepRun> one = sweep(c, "structural.kappa", {"0.1"}, (dir / "one").string());
  const RunOutputs plain = run_scenario(c, (dir / "plain").string());
  REQUIRE(one.size() == 1u);
  REQUIRE(one[0].records.size() == plain.result.records.size());
  for (size_t k = 0; k < one[0].records.size(); ++k) {
    CHECK(one[0].records[k].Jg == plain.result.records[k].Jg);
    CHECK(one[0].records[k].u_monitor == plain.result.records[k].u_monitor);
    CHECK(one[0].records[k].c_spatial == plain.result.records[k].c_spatial);
  }
  CHECK(fs::exists(dir / "one" / "structural.kappa=0.1" / "timeseries.csv"));
  CHECK(count_lines(dir / "one" / "sweep.csv") == 32);

  // Faster collagen secretion heals the ECM faster.
  const std::vector<SweepRun> runs =
      sweep(c, "species.eta_E", {"1e-8", "1e-7", "1e-6"}, (dir / "eta").string());
  std::vector<double> deficit;
  for (const SweepRun& r : runs) {
    double d = 0.0;
    for (const OutputRecord& rec : r.records) d += std::max(0.0, 7.0e-9 - rec.c_spatial[2]);
    deficit.push_back(d);
  }
  CHECK(deficit[0] > deficit[1]);
  CHECK(deficit[1] > deficit[2]);
  {
    std::ifstream in(dir / "eta" / "sweep.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header.find("Jg[species.eta_E=1e-8]") != std::string::npos);
    CHECK(header.find("u_z[species.eta_E=1e-6]") != std::string::npos);
  }
  CHECK_THROWS_AS(sweep(c, "structural.kappa", {}, dir.string()), InvalidArgument);
}
