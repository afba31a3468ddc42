// Trilinear hexahedron and bilinear quadrilateral shape functions plus
// Gauss rules. Local hexahedron node order:
//   0(-,-,-) 1(+,-,-) 2(+,+,-) 3(-,+,-) 4(-,-,+) 5(+,-,+) 6(+,+,+) 7(-,+,+)
#pragma once

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Core>

namespace isr {

inline constexpr std::array<std::array<int, 3>, 8> kHexCorners{{
    {-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
    {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1},
}};

inline constexpr std::array<std::array<int, 2>, 4> kQuadCorners{{
    {-1, -1}, {1, -1}, {1, 1}, {-1, 1},
}};

struct Hex8Shape {
  Eigen::Matrix<double, 8, 1> N;
  Eigen::Matrix<double, 8, 3> dN;  // d/d(xi, eta, zeta)
};

inline Hex8Shape shape_hex8(double xi, double eta, double zeta) {
  Hex8Shape s;
  for (int a = 0; a < 8; ++a) {
    const double x = kHexCorners[a][0], y = kHexCorners[a][1], z = kHexCorners[a][2];
    const double fx = 1.0 + x * xi, fy = 1.0 + y * eta, fz = 1.0 + z * zeta;
    s.N(a) = 0.125 * fx * fy * fz;
    s.dN(a, 0) = 0.125 * x * fy * fz;
    s.dN(a, 1) = 0.125 * fx * y * fz;
    s.dN(a, 2) = 0.125 * fx * fy * z;
  }
  return s;
}

struct Quad4Shape {
  Eigen::Matrix<double, 4, 1> N;
  Eigen::Matrix<double, 4, 2> dN;
};

inline Quad4Shape shape_quad4(double xi, double eta) {
  Quad4Shape s;
  for (int a = 0; a < 4; ++a) {
    const double x = kQuadCorners[a][0], y = kQuadCorners[a][1];
    s.N(a) = 0.25 * (1.0 + x * xi) * (1.0 + y * eta);
    s.dN(a, 0) = 0.25 * x * (1.0 + y * eta);
    s.dN(a, 1) = 0.25 * (1.0 + x * xi) * y;
  }
  return s;
}

struct QuadRule {
  std::vector<Eigen::Vector3d> points;  // unused coordinates are zero
  std::vector<double> weights;
};

/// 2x2x2 Gauss rule; weights sum to 8.
inline const QuadRule& gauss_hex_2x2x2() {
  static const QuadRule rule = [] {
    QuadRule r;
    const double g = 1.0 / std::sqrt(3.0);
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i) {
          r.points.emplace_back(i ? g : -g, j ? g : -g, k ? g : -g);
          r.weights.push_back(1.0);
        }
    return r;
  }();
  return rule;
}

/// 2x2 Gauss rule; weights sum to 4.
inline const QuadRule& gauss_quad_2x2() {
  static const QuadRule rule = [] {
    QuadRule r;
    const double g = 1.0 / std::sqrt(3.0);
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i) {
        r.points.emplace_back(i ? g : -g, j ? g : -g, 0.0);
        r.weights.push_back(1.0);
      }
    return r;
  }();
  return rule;
}

}  // namespace isr
