#pragma once

#include <cmath>

namespace dextr {

// Second-order forward-mode scalar: a value together with its first and
// second derivative along one curve parameter. Arithmetic follows truncated
// Taylor rules, so composing ops composes derivatives exactly.
struct Jet2 {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

inline Jet2 lift_constant(double x) { return Jet2{x, 0.0, 0.0}; }

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  return Jet2{a.v + b.v, a.d1 + b.d1, a.d2 + b.d2};
}

inline Jet2 operator-(const Jet2& a, const Jet2& b) {
  return Jet2{a.v - b.v, a.d1 - b.d1, a.d2 - b.d2};
}

inline Jet2 operator-(const Jet2& a) { return Jet2{-a.v, -a.d1, -a.d2}; }

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  return Jet2{a.v * b.v,
              a.v * b.d1 + a.d1 * b.v,
              a.v * b.d2 + 2.0 * a.d1 * b.d1 + a.d2 * b.v};
}

inline Jet2 operator*(const Jet2& a, double s) {
  return Jet2{a.v * s, a.d1 * s, a.d2 * s};
}
inline Jet2 operator*(double s, const Jet2& a) { return a * s; }

inline Jet2 operator+(const Jet2& a, double s) { return Jet2{a.v + s, a.d1, a.d2}; }
inline Jet2 operator+(double s, const Jet2& a) { return a + s; }
inline Jet2 operator-(const Jet2& a, double s) { return Jet2{a.v - s, a.d1, a.d2}; }

inline Jet2& operator+=(Jet2& a, const Jet2& b) {
  a.v += b.v;
  a.d1 += b.d1;
  a.d2 += b.d2;
  return a;
}

// Solves a = c*b for the derivative slots of c.
inline Jet2 operator/(const Jet2& a, const Jet2& b) {
  Jet2 c;
  c.v = a.v / b.v;
  c.d1 = (a.d1 - c.v * b.d1) / b.v;
  c.d2 = (a.d2 - c.v * b.d2 - 2.0 * c.d1 * b.d1) / b.v;
  return c;
}

inline Jet2 operator/(const Jet2& a, double s) { return a * (1.0 / s); }

// Solves s*s = a; requires a.v > 0.
inline Jet2 jet_sqrt(const Jet2& a) {
  Jet2 s;
  s.v = std::sqrt(a.v);
  s.d1 = a.d1 / (2.0 * s.v);
  s.d2 = (0.5 * a.d2 - s.d1 * s.d1) / s.v;
  return s;
}

// The kink at v == 0 is resolved to the zero branch: a clipped unit carries
// no derivative signal.
inline Jet2 jet_relu(const Jet2& a) { return a.v > 0.0 ? a : Jet2{}; }

// Uniform scalar helpers so layer ops can be templated over double and Jet2.
inline double value_of(double x) { return x; }
inline double value_of(const Jet2& x) { return x.v; }

inline double scalar_sqrt(double x) { return std::sqrt(x); }
inline Jet2 scalar_sqrt(const Jet2& x) { return jet_sqrt(x); }

inline double scalar_relu(double x) { return x > 0.0 ? x : 0.0; }
inline Jet2 scalar_relu(const Jet2& x) { return jet_relu(x); }

inline bool scalar_finite(double x) { return std::isfinite(x); }
inline bool scalar_finite(const Jet2& x) {
  return std::isfinite(x.v) && std::isfinite(x.d1) && std::isfinite(x.d2);
}

}  // namespace dextr
