#pragma once

#include <numbers>

#include "gfm/frames.hpp"

namespace gfm {

/// Filter and line constants the inverter controller is allowed to know.
/// The network R and L are deliberately absent.
struct KnownPhysicalParams {
  double omega_b = 120.0 * std::numbers::pi;  // rad/s
  double C_f = 0.30;
  double L_f = 0.05;
  double R_f = 7.2e-3;
};

/// Full circuit constants (per-unit except omega_b). R and L belong to the
/// external network and are only read by the plant and by the analysis layer.
struct PhysicalParams {
  double omega_b = 120.0 * std::numbers::pi;
  double C_f = 0.30;
  double L_f = 0.05;
  double R_f = 7.2e-3;
  double L = 0.8;
  double R = 0.2;

  KnownPhysicalParams known() const { return {omega_b, C_f, L_f, R_f}; }
  /// Throws ConfigError unless every constant is finite and strictly positive.
  void validate() const;
};

struct InverterState {
  Vec2 v_c;  // PCC voltage
  Vec2 i_t;  // terminal current
  Vec2 i_g;  // grid current
};

struct PowerFilterState {
  double q1 = 0.0;
  double q2 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
};

/// The ten plant states: inverter electrical states plus the power filters.
struct PlantState {
  InverterState inv;
  PowerFilterState filter;
};

/// Circuit dynamics of the inverter, LC filter and RL line in the local dq
/// frame. `v_g_dq` must already be expressed in the local frame.
InverterState plant_derivative(const InverterState& inv, double omega, Vec2 v_t, Vec2 v_g_dq,
                               const PhysicalParams& params);

}  // namespace gfm
