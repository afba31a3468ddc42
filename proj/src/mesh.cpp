#include "isr/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "isr/error.hpp"
#include "isr/shape.hpp"

namespace isr {

const char* layer_name(Layer layer) {
  switch (layer) {
    case Layer::Homogeneous: return "homogeneous";
    case Layer::Media: return "media";
    case Layer::Adventitia: return "adventitia";
  }
  return "unknown";
}

const std::vector<int>& Mesh::node_set(const std::string& name) const {
  auto it = node_sets.find(name);
  if (it == node_sets.end()) throw GeometryError("unknown node set '" + name + "'");
  return it->second;
}

const std::vector<SurfaceQuad>& Mesh::patch(const std::string& name) const {
  auto it = surface_patches.find(name);
  if (it == surface_patches.end())
    throw GeometryError("unknown surface patch '" + name + "'");
  return it->second;
}

namespace {

Eigen::Matrix3d reference_jacobian(const Mesh& mesh, int e, const Hex8Shape& s) {
  Eigen::Matrix3d J = Eigen::Matrix3d::Zero();
  for (int a = 0; a < 8; ++a)
    J += mesh.nodes[mesh.elements[e][a]] * s.dN.row(a);
  return J;
}

// Local node lists of the six hexahedron faces.
constexpr std::array<std::array<int, 4>, 6> kHexFaces{{
    {0, 1, 2, 3}, {4, 5, 6, 7}, {0, 1, 5, 4},
    {1, 2, 6, 5}, {2, 3, 7, 6}, {3, 0, 4, 7},
}};

}  // namespace

double Mesh::element_volume(int e) const {
  const auto& rule = gauss_hex_2x2x2();
  double v = 0.0;
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const auto& p = rule.points[q];
    v += rule.weights[q] * reference_jacobian(*this, e, shape_hex8(p(0), p(1), p(2))).determinant();
  }
  return v;
}

double Mesh::volume() const {
  double v = 0.0;
  for (int e = 0; e < num_elements(); ++e) v += element_volume(e);
  return v;
}

void Mesh::validate() const {
  const int nn = num_nodes();
  if (layers.size() != elements.size())
    throw GeometryError("layer tags do not cover every element");
  for (int e = 0; e < num_elements(); ++e) {
    std::set<int> distinct(elements[e].begin(), elements[e].end());
    if (distinct.size() != 8) throw GeometryError("element " + std::to_string(e) + " repeats a node");
    for (int n : elements[e])
      if (n < 0 || n >= nn)
        throw GeometryError("element " + std::to_string(e) + " node index out of range");
    for (const auto& c : kHexCorners) {
      if (reference_jacobian(*this, e, shape_hex8(c[0], c[1], c[2])).determinant() <= 0.0)
        throw InvertedElementError(e, "element " + std::to_string(e) +
                                          " has a non-positive corner Jacobian");
    }
  }
  for (const auto& [name, quads] : surface_patches) {
    for (const auto& q : quads) {
      if (q.element < 0 || q.element >= num_elements())
        throw GeometryError("patch '" + name + "' references a missing element");
      const auto& hex = elements[q.element];
      std::set<int> quad_nodes(q.nodes.begin(), q.nodes.end());
      bool is_face = false;
      for (const auto& f : kHexFaces) {
        std::set<int> face{hex[f[0]], hex[f[1]], hex[f[2]], hex[f[3]]};
        if (face == quad_nodes) is_face = true;
      }
      if (!is_face)
        throw GeometryError("patch '" + name + "' quad is not a face of its parent element");
    }
  }
}

Mesh build_block(double side_length, int divisions) {
  if (!(side_length > 0.0)) throw InvalidArgument("block side length must be positive");
  if (divisions < 1) throw InvalidArgument("block divisions must be at least 1");

  Mesh mesh;
  mesh.fiber_convention = FiberConvention::Block;
  const int n = divisions, np = n + 1;
  const double h = side_length / n;
  auto id = [np](int i, int j, int k) { return i + np * (j + np * k); };

  mesh.nodes.reserve(np * np * np);
  for (int k = 0; k < np; ++k)
    for (int j = 0; j < np; ++j)
      for (int i = 0; i < np; ++i) mesh.nodes.emplace_back(i * h, j * h, k * h);

  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        mesh.elements.push_back({id(i, j, k), id(i + 1, j, k), id(i + 1, j + 1, k),
                                  id(i, j + 1, k), id(i, j, k + 1), id(i + 1, j, k + 1),
                                  id(i + 1, j + 1, k + 1), id(i, j + 1, k + 1)});
        mesh.layers.push_back(Layer::Homogeneous);
      }

  auto& ns = mesh.node_sets;
  for (int b = 0; b < np; ++b)
    for (int a = 0; a < np; ++a) {
      ns["x0"].push_back(id(0, a, b));
      ns["x1"].push_back(id(n, a, b));
      ns["y0"].push_back(id(a, 0, b));
      ns["y1"].push_back(id(a, n, b));
      ns["z0"].push_back(id(a, b, 0));
      ns["z1"].push_back(id(a, b, n));
    }
  for (auto& [_, v] : ns) std::sort(v.begin(), v.end());

  std::vector<SurfaceQuad> top;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int e = i + n * (j + n * (n - 1));
      top.push_back({{id(i, j, n), id(i + 1, j, n), id(i + 1, j + 1, n), id(i, j + 1, n)}, e});
    }
  mesh.surface_patches["top"] = top;
  mesh.surface_patches["flux"] = top;
  return mesh;
}

Mesh build_artery_quadrant(const ArteryGeometry& g) {
  if (!(0.0 < g.r_inner && g.r_inner < g.r_media_outer && g.r_media_outer < g.r_outer))
    throw GeometryError("artery radii must satisfy 0 < r_inner < r_media_outer < r_outer");
  if (!(g.length > 0.0)) throw GeometryError("artery length must be positive");
  if (!(g.damage_length > 0.0)) throw GeometryError("damage window is empty");
  if (g.damage_start < 0.0 || g.damage_start + g.damage_length > g.length + 1e-12)
    throw GeometryError("damage window must lie inside [0, length]");
  const auto& d = g.divisions;
  if (d.radial_media < 1 || d.radial_adventitia < 1 || d.circumferential < 1 || d.longitudinal < 1)
    throw InvalidArgument("artery divisions must be at least 1");

  Mesh mesh;
  mesh.fiber_convention = FiberConvention::Cylinder;
  const int nr = d.radial_media + d.radial_adventitia, nc = d.circumferential, nl = d.longitudinal;
  const int npr = nr + 1, npc = nc + 1, npl = nl + 1;
  auto id = [npr, npc](int i, int j, int k) { return i + npr * (j + npc * k); };

  std::vector<double> radii(npr);
  for (int i = 0; i <= d.radial_media; ++i)
    radii[i] = g.r_inner + (g.r_media_outer - g.r_inner) * i / d.radial_media;
  for (int i = 1; i <= d.radial_adventitia; ++i)
    radii[d.radial_media + i] =
        g.r_media_outer + (g.r_outer - g.r_media_outer) * i / d.radial_adventitia;

  mesh.nodes.reserve(npr * npc * npl);
  for (int k = 0; k < npl; ++k) {
    const double z = g.length * k / nl;
    for (int j = 0; j < npc; ++j) {
      const double theta = 0.5 * std::numbers::pi * j / nc;
      double c = std::cos(theta), s = std::sin(theta);
      if (j == 0) { c = 1.0; s = 0.0; }
      if (j == nc) { c = 0.0; s = 1.0; }
      for (int i = 0; i < npr; ++i) mesh.nodes.emplace_back(radii[i] * c, radii[i] * s, z);
    }
  }

  for (int k = 0; k < nl; ++k)
    for (int j = 0; j < nc; ++j)
      for (int i = 0; i < nr; ++i) {
        mesh.elements.push_back({id(i, j, k), id(i + 1, j, k), id(i + 1, j + 1, k),
                                  id(i, j + 1, k), id(i, j, k + 1), id(i + 1, j, k + 1),
                                  id(i + 1, j + 1, k + 1), id(i, j + 1, k + 1)});
        mesh.layers.push_back(i < d.radial_media ? Layer::Media : Layer::Adventitia);
      }
  auto elem = [nr, nc](int i, int j, int k) { return i + nr * (j + nc * k); };

  auto& ns = mesh.node_sets;
  for (int k = 0; k < npl; ++k)
    for (int i = 0; i < npr; ++i) {
      ns["theta0"].push_back(id(i, 0, k));
      ns["theta90"].push_back(id(i, nc, k));
    }
  for (int j = 0; j < npc; ++j)
    for (int i = 0; i < npr; ++i) {
      ns["z0"].push_back(id(i, j, 0));
      ns["zl"].push_back(id(i, j, nl));
    }
  for (int k = 0; k < npl; ++k)
    for (int j = 0; j < npc; ++j) {
      ns["lumen"].push_back(id(0, j, k));
      ns["outer"].push_back(id(nr, j, k));
    }
  for (auto& [_, v] : ns) std::sort(v.begin(), v.end());

  // Lumen facets: xi along Z, eta along theta gives e_z x e_theta = -e_r.
  std::vector<SurfaceQuad> lumen;
  for (int k = 0; k < nl; ++k)
    for (int j = 0; j < nc; ++j)
      lumen.push_back({{id(0, j, k), id(0, j, k + 1), id(0, j + 1, k + 1), id(0, j + 1, k)},
                       elem(0, j, k)});
  mesh.surface_patches["lumen"] = lumen;

  const double z0 = g.damage_start, z1 = g.damage_start + g.damage_length;
  const double tol = 1e-9 * g.length;
  std::vector<SurfaceQuad> flux;
  for (const auto& q : lumen) {
    double zmin = 1e300, zmax = -1e300;
    for (int n : q.nodes) {
      zmin = std::min(zmin, mesh.nodes[n](2));
      zmax = std::max(zmax, mesh.nodes[n](2));
    }
    if (zmin >= z0 - tol && zmax <= z1 + tol) flux.push_back(q);
  }
  if (flux.empty()) throw GeometryError("damage window contains no complete lumen facet");
  mesh.surface_patches["flux"] = flux;
  return mesh;
}

Vec3d element_centroid(const Mesh& mesh, int element) {
  Vec3d c = Vec3d::Zero();
  for (int n : mesh.elements.at(element)) c += mesh.nodes[n];
  return c / 8.0;
}

Vec3d quad_centroid(const Mesh& mesh, const SurfaceQuad& quad) {
  Vec3d c = Vec3d::Zero();
  for (int n : quad.nodes) c += mesh.nodes[n];
  return c / 4.0;
}

Vec3d quad_normal(const Mesh& mesh, const SurfaceQuad& quad) {
  const auto s = shape_quad4(0.0, 0.0);
  Vec3d t1 = Vec3d::Zero(), t2 = Vec3d::Zero();
  for (int a = 0; a < 4; ++a) {
    t1 += s.dN(a, 0) * mesh.nodes[quad.nodes[a]];
    t2 += s.dN(a, 1) * mesh.nodes[quad.nodes[a]];
  }
  return t1.cross(t2).normalized();
}

FiberPair fiber_frame(const Mesh& mesh, int element, double alpha_deg) {
  if (element < 0 || element >= mesh.num_elements())
    throw InvalidArgument("fiber_frame: element " + std::to_string(element) + " does not exist");
  const double alpha = alpha_deg * std::numbers::pi / 180.0;
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  if (mesh.fiber_convention == FiberConvention::Block) {
    return {Vec3d(ca, sa, 0.0), Vec3d(ca, -sa, 0.0)};
  }
  const Vec3d c = element_centroid(mesh, element);
  const double theta = std::atan2(c(1), c(0));
  const Vec3d e_theta(-std::sin(theta), std::cos(theta), 0.0);
  const Vec3d e_z(0.0, 0.0, 1.0);
  return {ca * e_z + sa * e_theta, ca * e_z - sa * e_theta};
}

std::vector<SurfaceQuad> select_quads(const Mesh& mesh, const std::vector<SurfaceQuad>& quads,
                                      const std::function<bool(const Vec3d&)>& keep) {
  std::vector<SurfaceQuad> out;
  for (const auto& q : quads)
    if (keep(quad_centroid(mesh, q))) out.push_back(q);
  return out;
}

}  // namespace isr
