// Small 3x3 tensor helpers shared by the constitutive and element kernels.
#pragma once

#include <Eigen/Dense>

#include "isr/dual.hpp"

namespace isr {

template <class T>
using Mat3 = Eigen::Matrix<T, 3, 3>;
template <class T>
using Vec3 = Eigen::Matrix<T, 3, 1>;

using Mat3d = Mat3<double>;
using Vec3d = Vec3<double>;

template <class T>
T det3(const Mat3<T>& a) {
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
         a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

/// Cofactor inverse; caller guarantees a non-singular argument.
template <class T>
Mat3<T> inv3(const Mat3<T>& a) {
  Mat3<T> c;
  c(0, 0) = a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
  c(0, 1) = a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2);
  c(0, 2) = a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1);
  c(1, 0) = a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2);
  c(1, 1) = a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0);
  c(1, 2) = a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2);
  c(2, 0) = a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0);
  c(2, 1) = a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1);
  c(2, 2) = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  const T d = a(0, 0) * c(0, 0) + a(0, 1) * c(1, 0) + a(0, 2) * c(2, 0);
  const T inv_d = T(1.0) / d;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c(i, j) *= inv_d;
  return c;
}

template <class T>
T trace3(const Mat3<T>& a) {
  return a(0, 0) + a(1, 1) + a(2, 2);
}

/// Double contraction A : B = A_ij B_ij.
template <class T, class U>
auto ddot(const Mat3<T>& a, const Mat3<U>& b) {
  decltype(a(0, 0) * b(0, 0)) s(0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s += a(i, j) * b(i, j);
  return s;
}

/// Casts a double tensor into scalar type T (derivative parts zero).
template <class T>
Mat3<T> lift(const Mat3d& a) {
  Mat3<T> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = T(a(i, j));
  return r;
}
template <class T>
Vec3<T> lift(const Vec3d& a) {
  return Vec3<T>(T(a(0)), T(a(1)), T(a(2)));
}

template <class T>
Mat3d values(const Mat3<T>& a) {
  Mat3d r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = value_of(a(i, j));
  return r;
}

}  // namespace isr
