#include "isr/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "isr/error.hpp"

namespace isr {

const char* scenario_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Block: return "block";
    case ScenarioKind::Angioplasty: return "angioplasty";
    case ScenarioKind::Stent: return "stent";
  }
  return "?";
}

ScenarioKind parse_scenario_kind(const std::string& name) {
  if (name == "block") return ScenarioKind::Block;
  if (name == "angioplasty") return ScenarioKind::Angioplasty;
  if (name == "stent") return ScenarioKind::Stent;
  throw ConfigError("unknown scenario '" + name + "' (expected block, angioplasty or stent)");
}

namespace {

// Media and adventitia values, applied on top of the block parameters.
void apply_artery_layer(LayerParams& p, Layer layer) {
  const bool media = layer == Layer::Media;
  p.species.D_P = media ? 0.01 : 0.005;
  p.species.eps_E = 3.0e23;
  p.species.chi_C = media ? 1.0e11 : 0.0;
  p.species.chi_H = media ? 1.0e6 : 0.0;
  p.species.eta_S = media ? 1.0e13 : 0.0;
  p.structural.mu = media ? 0.02 : 0.008;
  p.structural.lambda = 10.0;
  p.structural.k1_bar = media ? 0.112 : 0.362;
  p.structural.k2 = media ? 20.61 : 7.089;
  p.structural.kappa = media ? 0.24 : 0.17;
  p.structural.alpha = media ? 41.0 : 50.1;
}

}  // namespace

SimulationConfig SimulationConfig::defaults(ScenarioKind kind) {
  SimulationConfig c;
  c.scenario = kind;
  for (LayerParams& l : c.layers) {
    l.species = SpeciesParams{};
    l.structural = StructuralParams{};
  }
  if (kind == ScenarioKind::Block) return c;

  apply_artery_layer(c.layer(Layer::Media), Layer::Media);
  apply_artery_layer(c.layer(Layer::Adventitia), Layer::Adventitia);
  if (kind == ScenarioKind::Stent) {
    c.artery.length = 3.0;
    c.artery.divisions.longitudinal = 18;
    c.artery.damage_start = 0.0;
    c.artery.damage_length = 3.0;
    for (LayerParams& l : c.layers) {
      l.structural.growth_model = GrowthModel::StressFreeAnisotropic;
      l.structural.kappa = 0.0;
    }
  }
  return c;
}

InfluxProfile SimulationConfig::influx_profile() const {
  return custom_profile ? flux.profile : InfluxProfile::damage_and_recovery(peak_q_P, peak_q_T);
}

void SimulationConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  try {
    time.validate();
    influx_profile().validate();
    for (const LayerParams& l : layers) {
      l.species.validate();
      l.structural.validate();
    }
  } catch (const InvalidArgument& e) {
    fail(e.what());
  }
  for (int i = 0; i < 3; ++i) {
    const StructuralParams& s = layers[i].structural;
    if (s.growth_model == GrowthModel::StressFreeAnisotropic && s.kappa > 0.0)
      fail(std::string("layer ") + layer_name(static_cast<Layer>(i)) +
           ": the stress-free anisotropic growth model assumes perfectly aligned fibers; "
           "kappa must be 0 (got " + std::to_string(s.kappa) + ")");
    if (layers[i].species.c_E_eq != s.c_E_eq || layers[i].species.rho_S_eq != s.rho_S_eq)
      fail("species and structural c_E_eq / rho_S_eq disagree");
  }
  if (!(flux.p_en >= 0.0)) fail("p_en must be non-negative");
  if (!(peak_q_P >= 0.0) || !(peak_q_T >= 0.0)) fail("influx peaks must be non-negative");
  if (scenario == ScenarioKind::Block) {
    if (!(block_length > 0.0)) fail("block length must be positive");
    if (block_divisions < 1) fail("block divisions must be at least 1");
  }
  if (scenario == ScenarioKind::Stent && !(strut_width > 0.0 && strut_width < artery.length))
    fail("strut width must lie in (0, length)");
  if (!(output.field_interval >= 0.0)) fail("field_interval must be non-negative");
}

namespace {

int nearest_node(const Mesh& mesh, const Vec3d& p, const std::vector<int>* subset = nullptr) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  auto consider = [&](int n) {
    const double d = (mesh.nodes[n] - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = n;
    }
  };
  if (subset)
    for (int n : *subset) consider(n);
  else
    for (int n = 0; n < mesh.num_nodes(); ++n) consider(n);
  return best;
}

void fix(Model& m, const std::vector<int>& nodes, int component) {
  for (int n : nodes) {
    m.fixed_dofs.push_back(u_dof(n, component));
    m.fixed_values.push_back(0.0);
  }
}

}  // namespace

Scenario build_scenario(const SimulationConfig& config) {
  config.validate();
  Scenario sc;
  sc.config = config;
  Model& m = sc.model;

  Vec3d monitor;
  switch (config.scenario) {
    case ScenarioKind::Block: {
      m.mesh = build_block(config.block_length, config.block_divisions);
      m.flux_quads = m.mesh.patch("flux");
      fix(m, m.mesh.node_set("x0"), 0);
      fix(m, m.mesh.node_set("y0"), 1);
      fix(m, m.mesh.node_set("z0"), 2);
      const double L = config.block_length;
      monitor = Vec3d(L, L, L);
      break;
    }
    case ScenarioKind::Angioplasty:
    case ScenarioKind::Stent: {
      m.mesh = build_artery_quadrant(config.artery);
      fix(m, m.mesh.node_set("theta0"), 1);
      fix(m, m.mesh.node_set("theta90"), 0);
      fix(m, m.mesh.node_set("z0"), 2);
      fix(m, m.mesh.node_set("zl"), 2);
      const double ri = config.artery.r_inner;
      const double c45 = std::sqrt(0.5);
      if (config.scenario == ScenarioKind::Angioplasty) {
        m.flux_quads = m.mesh.patch("flux");
        monitor = Vec3d(ri * c45, ri * c45,
                        config.artery.damage_start + 0.5 * config.artery.damage_length);
      } else {
        const double zc = 0.5 * config.artery.length;
        const double hw = 0.5 * config.strut_width;
        const double tol = 1e-9 * config.artery.length;
        std::vector<int> band;
        for (int n : m.mesh.node_set("lumen"))
          if (std::abs(m.mesh.nodes[n](2) - zc) <= hw + tol) band.push_back(n);
        if (band.empty()) throw ConfigError("strut band contains no lumen nodes");
        for (int i = 0; i < 3; ++i) fix(m, band, i);
        m.mesh.node_sets["strut"] = band;
        for (const SurfaceQuad& q : m.mesh.patch("lumen")) {
          double zmin = 1e300, zmax = -1e300;
          for (int n : q.nodes) {
            zmin = std::min(zmin, m.mesh.nodes[n](2));
            zmax = std::max(zmax, m.mesh.nodes[n](2));
          }
          const bool overlaps = zmax > zc - hw + tol && zmin < zc + hw - tol;
          const bool touches_band = std::any_of(q.nodes.begin(), q.nodes.end(), [&](int n) {
            return std::binary_search(band.begin(), band.end(), n);
          });
          if (!overlaps && !touches_band) m.flux_quads.push_back(q);
        }
        m.mesh.surface_patches["flux"] = m.flux_quads;
        monitor = Vec3d(ri * c45, ri * c45, zc + 3.0 * config.strut_width);
      }
      break;
    }
  }
  // Remove duplicate constraints (nodes on two fixed planes keep one entry per component).
  {
    std::vector<std::pair<int, double>> fd;
    for (size_t k = 0; k < m.fixed_dofs.size(); ++k) fd.emplace_back(m.fixed_dofs[k], m.fixed_values[k]);
    std::sort(fd.begin(), fd.end());
    fd.erase(std::unique(fd.begin(), fd.end(),
                         [](const auto& a, const auto& b) { return a.first == b.first; }),
             fd.end());
    m.fixed_dofs.clear();
    m.fixed_values.clear();
    for (const auto& [d, v] : fd) {
      m.fixed_dofs.push_back(d);
      m.fixed_values.push_back(v);
    }
  }

  m.materials.reserve(m.mesh.num_elements());
  for (int e = 0; e < m.mesh.num_elements(); ++e) {
    const LayerParams& lp = config.layer(m.mesh.layers[e]);
    const FiberPair fibers = fiber_frame(m.mesh, e, lp.structural.alpha);
    m.materials.push_back(make_element_material(lp.species, lp.structural, fibers));
  }
  m.flux.p_en = config.flux.p_en;
  m.flux.profile = config.influx_profile();
  const Vec3d target = config.output.monitor_point.value_or(monitor);
  m.monitor_node = config.scenario == ScenarioKind::Block || config.output.monitor_point
                       ? nearest_node(m.mesh, target)
                       : nearest_node(m.mesh, target, &m.mesh.node_set("lumen"));
  m.validate();
  return sc;
}

double ThicknessProfile::max() const {
  return thickness.empty() ? 0.0 : *std::max_element(thickness.begin(), thickness.end());
}

double ThicknessProfile::mean() const {
  if (thickness.empty()) return 0.0;
  return std::accumulate(thickness.begin(), thickness.end(), 0.0) /
         static_cast<double>(thickness.size());
}

ThicknessProfile neointimal_thickness(const Mesh& mesh, const State& state, double z) {
  const std::vector<int>& lumen = mesh.node_set("lumen");
  // Group lumen nodes into rings by their Z coordinate.
  std::vector<double> zs;
  for (int n : lumen) zs.push_back(mesh.nodes[n](2));
  std::sort(zs.begin(), zs.end());
  zs.erase(std::unique(zs.begin(), zs.end(),
                       [](double a, double b) { return std::abs(a - b) < 1e-9; }),
           zs.end());
  if (zs.empty() || z < zs.front() - 1e-9 || z > zs.back() + 1e-9)
    throw InvalidArgument("neointimal_thickness: Z outside the lumen surface");
  size_t k = std::upper_bound(zs.begin(), zs.end(), z) - zs.begin();
  k = std::clamp<size_t>(k, 1, zs.size() - 1);
  const double z0 = zs[k - 1], z1 = zs[k];
  const double w = std::clamp((z - z0) / (z1 - z0), 0.0, 1.0);

  auto ring = [&](double zr) {
    std::vector<std::pair<double, double>> out;  // (theta, -u_r)
    for (int n : lumen) {
      const Vec3d& X = mesh.nodes[n];
      if (std::abs(X(2) - zr) > 1e-9) continue;
      const double r = std::hypot(X(0), X(1));
      const Vec3d er(X(0) / r, X(1) / r, 0.0);
      out.emplace_back(std::atan2(X(1), X(0)), -state.u(n).dot(er));
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  const auto a = ring(z0), b = ring(z1);
  ThicknessProfile p;
  for (size_t i = 0; i < a.size() && i < b.size(); ++i) {
    p.theta.push_back(a[i].first);
    p.thickness.push_back((1.0 - w) * a[i].second + w * b[i].second);
  }
  return p;
}

}  // namespace isr
