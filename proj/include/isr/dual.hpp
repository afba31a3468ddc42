// Forward-mode automatic differentiation with a fixed number of directions.
//
// Dual<T, N> carries a value and N directional derivatives. T may itself be
// a Dual, which gives second derivatives by nesting. Element tangents are
// computed by seeding the point-level unknowns and reading the derivative
// parts back out of the residual integrands.
#pragma once

#include <array>
#include <cmath>
#include <type_traits>

#include <Eigen/Core>

namespace isr {

template <class T, int N>
struct Dual {
  T v{};
  std::array<T, N> d{};

  Dual() = default;
  Dual(double x) : v(x) { d.fill(T(0.0)); }  // NOLINT: implicit on purpose
  template <class U = T, class = std::enable_if_t<!std::is_same_v<U, double>>>
  Dual(const T& x) : v(x) {  // NOLINT
    d.fill(T(0.0));
  }

  /// Independent variable number `i` with value `x`.
  static Dual variable(const T& x, int i) {
    Dual r(x);
    r.d[i] = T(1.0);
    return r;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (int i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const T inv = T(1.0) / o.v;
    for (int i = 0; i < N; ++i) d[i] = (d[i] - v * inv * o.d[i]) * inv;
    v *= inv;
    return *this;
  }
};

template <class T, int N>
Dual<T, N> operator+(Dual<T, N> a, const Dual<T, N>& b) { return a += b; }
template <class T, int N>
Dual<T, N> operator-(Dual<T, N> a, const Dual<T, N>& b) { return a -= b; }
template <class T, int N>
Dual<T, N> operator*(Dual<T, N> a, const Dual<T, N>& b) { return a *= b; }
template <class T, int N>
Dual<T, N> operator/(Dual<T, N> a, const Dual<T, N>& b) { return a /= b; }

template <class T, int N>
Dual<T, N> operator-(const Dual<T, N>& a) {
  Dual<T, N> r;
  r.v = -a.v;
  for (int i = 0; i < N; ++i) r.d[i] = -a.d[i];
  return r;
}
template <class T, int N>
Dual<T, N> operator+(const Dual<T, N>& a) { return a; }

// Mixed operations with plain doubles avoid promoting the double to a Dual.
template <class T, int N>
Dual<T, N> operator+(Dual<T, N> a, double b) { a.v += b; return a; }
template <class T, int N>
Dual<T, N> operator+(double b, Dual<T, N> a) { a.v += b; return a; }
template <class T, int N>
Dual<T, N> operator-(Dual<T, N> a, double b) { a.v -= b; return a; }
template <class T, int N>
Dual<T, N> operator-(double b, const Dual<T, N>& a) { return Dual<T, N>(b) - a; }
template <class T, int N>
Dual<T, N> operator*(Dual<T, N> a, double b) {
  a.v *= b;
  for (auto& x : a.d) x *= b;
  return a;
}
template <class T, int N>
Dual<T, N> operator*(double b, Dual<T, N> a) { return a * b; }
template <class T, int N>
Dual<T, N> operator/(Dual<T, N> a, double b) { return a * (1.0 / b); }
template <class T, int N>
Dual<T, N> operator/(double b, const Dual<T, N>& a) { return Dual<T, N>(b) / a; }

template <class T, int N>
bool operator<(const Dual<T, N>& a, const Dual<T, N>& b) { return a.v < b.v; }
template <class T, int N>
bool operator>(const Dual<T, N>& a, const Dual<T, N>& b) { return a.v > b.v; }
template <class T, int N>
bool operator<=(const Dual<T, N>& a, const Dual<T, N>& b) { return a.v <= b.v; }
template <class T, int N>
bool operator>=(const Dual<T, N>& a, const Dual<T, N>& b) { return a.v >= b.v; }
template <class T, int N>
bool operator==(const Dual<T, N>& a, const Dual<T, N>& b) { return a.v == b.v; }
template <class T, int N>
bool operator!=(const Dual<T, N>& a, const Dual<T, N>& b) { return a.v != b.v; }
template <class T, int N>
bool operator<(const Dual<T, N>& a, double b) { return a.v < b; }
template <class T, int N>
bool operator>(const Dual<T, N>& a, double b) { return a.v > b; }
template <class T, int N>
bool operator<=(const Dual<T, N>& a, double b) { return a.v <= b; }
template <class T, int N>
bool operator>=(const Dual<T, N>& a, double b) { return a.v >= b; }

namespace detail {
template <class T, int N>
Dual<T, N> chain(const Dual<T, N>& a, const T& f, const T& df) {
  Dual<T, N> r;
  r.v = f;
  for (int i = 0; i < N; ++i) r.d[i] = df * a.d[i];
  return r;
}
}  // namespace detail

template <class T, int N>
Dual<T, N> exp(const Dual<T, N>& a) {
  using std::exp;
  const T e = exp(a.v);
  return detail::chain(a, e, e);
}
template <class T, int N>
Dual<T, N> log(const Dual<T, N>& a) {
  using std::log;
  return detail::chain(a, T(log(a.v)), T(1.0 / a.v));
}
template <class T, int N>
Dual<T, N> sqrt(const Dual<T, N>& a) {
  using std::sqrt;
  const T s = sqrt(a.v);
  return detail::chain(a, s, T(0.5 / s));
}
template <class T, int N>
Dual<T, N> cbrt(const Dual<T, N>& a) {
  using std::cbrt;
  const T s = cbrt(a.v);
  return detail::chain(a, s, T(1.0 / (3.0 * s * s)));
}
template <class T, int N>
Dual<T, N> pow(const Dual<T, N>& a, double p) {
  using std::pow;
  return detail::chain(a, T(pow(a.v, p)), T(p * pow(a.v, p - 1.0)));
}
template <class T, int N>
Dual<T, N> sin(const Dual<T, N>& a) {
  using std::sin;
  using std::cos;
  return detail::chain(a, T(sin(a.v)), T(cos(a.v)));
}
template <class T, int N>
Dual<T, N> cos(const Dual<T, N>& a) {
  using std::sin;
  using std::cos;
  return detail::chain(a, T(cos(a.v)), T(-sin(a.v)));
}
template <class T, int N>
Dual<T, N> abs(const Dual<T, N>& a) {
  return a.v < 0.0 ? -a : a;
}

// Eigen needs these for custom real scalars.
template <class T, int N>
const Dual<T, N>& conj(const Dual<T, N>& x) { return x; }
template <class T, int N>
const Dual<T, N>& real(const Dual<T, N>& x) { return x; }
template <class T, int N>
Dual<T, N> imag(const Dual<T, N>&) { return Dual<T, N>(0.0); }
template <class T, int N>
Dual<T, N> abs2(const Dual<T, N>& x) { return x * x; }

/// Value part of a (possibly nested) Dual or a plain double.
inline double value_of(double x) { return x; }
template <class T, int N>
double value_of(const Dual<T, N>& x) { return value_of(x.v); }

/// Positive part <x> = max(x, 0) with a zero derivative on the inactive side.
template <class T>
T macaulay(const T& x) {
  return x > 0.0 ? x : T(0.0);
}

}  // namespace isr

namespace Eigen {
template <class T, int N>
struct NumTraits<isr::Dual<T, N>> : NumTraits<double> {
  using Real = isr::Dual<T, N>;
  using NonInteger = isr::Dual<T, N>;
  using Nested = isr::Dual<T, N>;
  using Literal = isr::Dual<T, N>;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 2 * N + 1,
    MulCost = 3 * N + 1
  };
};

template <class T, int N, typename BinaryOp>
struct ScalarBinaryOpTraits<isr::Dual<T, N>, double, BinaryOp> {
  using ReturnType = isr::Dual<T, N>;
};
template <class T, int N, typename BinaryOp>
struct ScalarBinaryOpTraits<double, isr::Dual<T, N>, BinaryOp> {
  using ReturnType = isr::Dual<T, N>;
};
}  // namespace Eigen
