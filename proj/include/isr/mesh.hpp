// Structured hexahedral meshes for the block and artery-quadrant geometries.
#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "isr/tensor.hpp"

namespace isr {

enum class Layer { Homogeneous, Media, Adventitia };

const char* layer_name(Layer layer);

/// How collagen fiber directions are laid out over the mesh.
enum class FiberConvention {
  Block,     // +-alpha from the X axis in the X-Y plane
  Cylinder,  // +-alpha from the Z axis in the circumferential-longitudinal plane
};

/// Quadrilateral facet of a parent hexahedron. Node order is such that
/// dX/dxi x dX/deta points out of the solid.
struct SurfaceQuad {
  std::array<int, 4> nodes;
  int element;
};

struct Mesh {
  std::vector<Vec3d> nodes;
  std::vector<std::array<int, 8>> elements;
  std::vector<Layer> layers;
  std::map<std::string, std::vector<int>> node_sets;
  std::map<std::string, std::vector<SurfaceQuad>> surface_patches;
  FiberConvention fiber_convention = FiberConvention::Block;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }

  const std::vector<int>& node_set(const std::string& name) const;
  const std::vector<SurfaceQuad>& patch(const std::string& name) const;

  /// Reference volume of one element (2x2x2 Gauss).
  double element_volume(int e) const;
  double volume() const;

  /// Throws GeometryError if any structural invariant is violated.
  void validate() const;
};

/// Cube [0, L]^3 with n divisions per axis. Node sets x0,x1,y0,y1,z0,z1;
/// surface patches "top" (Z = L) and "flux" (same quads).
Mesh build_block(double side_length, int divisions);

struct ArteryDivisions {
  int radial_media = 3;
  int radial_adventitia = 3;
  int circumferential = 20;
  int longitudinal = 36;
};

struct ArteryGeometry {
  double length = 6.0;
  double r_inner = 1.55;
  double r_media_outer = 1.89;
  double r_outer = 2.21;
  ArteryDivisions divisions;
  double damage_start = 2.0;
  double damage_length = 3.0;
};

/// Quarter cylinder theta in [0, pi/2]. Node sets theta0 (Y = 0 plane),
/// theta90 (X = 0 plane), z0, zl, lumen, outer. Patches "lumen" (whole inner
/// surface, normals toward the axis) and "flux" (lumen quads whose
/// longitudinal extent lies inside the damage window).
Mesh build_artery_quadrant(const ArteryGeometry& geometry);

struct FiberPair {
  Vec3d a1;
  Vec3d a2;
};

/// Two unit fiber directions at +-alpha for element `element`.
FiberPair fiber_frame(const Mesh& mesh, int element, double alpha_deg);

/// Quads of `quads` whose centroid satisfies `keep`.
std::vector<SurfaceQuad> select_quads(
    const Mesh& mesh, const std::vector<SurfaceQuad>& quads,
    const std::function<bool(const Vec3d& centroid)>& keep);

Vec3d element_centroid(const Mesh& mesh, int element);
Vec3d quad_centroid(const Mesh& mesh, const SurfaceQuad& quad);
/// Unit outward normal at the quad center in the reference configuration.
Vec3d quad_normal(const Mesh& mesh, const SurfaceQuad& quad);

}  // namespace isr
