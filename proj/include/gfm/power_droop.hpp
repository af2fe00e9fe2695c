#pragma once

#include <limits>

#include "gfm/frames.hpp"
#include "gfm/plant.hpp"

namespace gfm {

inline constexpr double kUnlimited = std::numeric_limits<double>::infinity();

/// Droop setpoints, droop gains and power-filter constants.
///
/// Q_bar defaults to 1.5 p.u. and P_bar to +inf; neither value is reported
/// with the reference scenario, so both are local choices. A finite Q_bar is
/// required for the unfiltered boundedness guarantees (checked at scenario
/// validation, not here).
struct DroopParams {
  double V0 = 1.0;
  double omega0 = 1.0;
  double P0 = 1.0;
  double Q0 = 0.5;
  double K_P = 5e-3;
  double K_Q = 1e-4;
  double xi_p = 1.2;
  double xi_q = 1.2;
  double omega_pc = 332.8;  // rad/s
  double omega_qc = 732.8;  // rad/s
  double P_bar = kUnlimited;
  double Q_bar = 1.5;

  void validate() const;
};

struct InstantaneousPower {
  double p = 0.0;
  double q = 0.0;
};

InstantaneousPower instantaneous_power(Vec2 v_c, Vec2 i_g);

/// Clamp to [-limit, limit]; identity for limit = +inf.
inline double saturate(double limit, double y) {
  if (y > limit) return limit;
  if (y < -limit) return -limit;
  return y;
}

/// Second-order low-pass filters with saturated inputs.
PowerFilterState power_filter_derivative(const PowerFilterState& f, double p, double q,
                                         const DroopParams& params);

/// Reactive-power/voltage droop. The q reference is identically zero.
Vec2 droop_voltage_ref(double q1, const DroopParams& params);

/// Active-power/frequency droop, p.u.
double droop_frequency(double p1, const DroopParams& params);

}  // namespace gfm
