// Scenario definitions: the unrestrained block, the balloon-angioplasty
// artery quadrant and a simplified (contact-free) stent variant.
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "isr/constitutive.hpp"
#include "isr/fem_elements.hpp"
#include "isr/mesh.hpp"
#include "isr/solver.hpp"
#include "isr/species_kinetics.hpp"

namespace isr {

enum class ScenarioKind { Block, Angioplasty, Stent };

const char* scenario_name(ScenarioKind kind);
/// Accepts "block", "angioplasty" and "stent"; throws ConfigError otherwise.
ScenarioKind parse_scenario_kind(const std::string& name);

struct LayerParams {
  SpeciesParams species;
  StructuralParams structural;
};

struct OutputControls {
  std::string directory = "output";
  double field_interval = 0.0;  // days between VTK dumps; 0 disables
  std::optional<Vec3d> monitor_point;
};

struct SimulationConfig {
  ScenarioKind scenario = ScenarioKind::Block;

  double block_length = 1.0;  // mm
  int block_divisions = 4;
  ArteryGeometry artery;
  double strut_width = 0.1;  // mm

  /// Indexed by Layer: homogeneous (block), media, adventitia.
  std::array<LayerParams, 3> layers;

  double peak_q_P = 1e-19;  // mol/mm^2/day
  double peak_q_T = 1e-18;
  FluxPatchParams flux;
  bool custom_profile = false;  // profile given explicitly instead of from the peaks

  TimeSteppingConfig time;
  OutputControls output;

  LayerParams& layer(Layer l) { return layers[static_cast<int>(l)]; }
  const LayerParams& layer(Layer l) const { return layers[static_cast<int>(l)]; }

  /// Scenario defaults: block parameters for every layer, media and
  /// adventitia values on top for the artery layers, growth model and
  /// geometry per scenario.
  static SimulationConfig defaults(ScenarioKind kind);

  /// Influx profile actually used (explicit or built from the peaks).
  InfluxProfile influx_profile() const;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

struct Scenario {
  SimulationConfig config;
  Model model;
};

Scenario build_scenario(const SimulationConfig& config);

/// Neointimal thickness -u_r of the lumen surface along the line Z = z, as a
/// function of the circumferential angle (radians).
struct ThicknessProfile {
  std::vector<double> theta;
  std::vector<double> thickness;  // mm

  double max() const;
  double mean() const;
};

ThicknessProfile neointimal_thickness(const Mesh& mesh, const State& state, double z);

}  // namespace isr
