#pragma once

#include <cmath>

namespace gfm {

/// A pair of rotating-frame components (d/q or D/Q), per-unit.
struct Vec2 {
  double a = 0.0;
  double b = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {a + o.a, b + o.b}; }
  constexpr Vec2 operator-(Vec2 o) const { return {a - o.a, b - o.b}; }
  constexpr Vec2 operator*(double s) const { return {a * s, b * s}; }
  constexpr bool operator==(const Vec2&) const = default;

  constexpr double dot(Vec2 o) const { return a * o.a + b * o.b; }
  constexpr double norm2() const { return a * a + b * b; }
  double norm() const { return std::hypot(a, b); }
  bool finite() const { return std::isfinite(a) && std::isfinite(b); }
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }

/// Angle of the local dq frame relative to the global DQ frame. Never wrapped.
struct FrameState {
  double theta = 0.0;
};

/// R(theta) * v_dq.
inline Vec2 rotate_to_global(double theta, Vec2 v_dq) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c * v_dq.a - s * v_dq.b, s * v_dq.a + c * v_dq.b};
}

/// R(theta)^T * v_DQ.
inline Vec2 rotate_to_local(double theta, Vec2 v_DQ) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c * v_DQ.a + s * v_DQ.b, -s * v_DQ.a + c * v_DQ.b};
}

/// d(theta)/dt in rad/s; omega and omega0 in p.u., omega_b in rad/s.
constexpr double theta_derivative(double omega, double omega0, double omega_b) {
  return omega_b * (omega - omega0);
}

}  // namespace gfm
