#include "gfm/power_droop.hpp"

#include <cmath>
#include <string>

#include "gfm/errors.hpp"

namespace gfm {

void DroopParams::validate() const {
  auto finite = [](double v, const char* name) {
    if (!std::isfinite(v)) throw ConfigError(std::string("droop.") + name + " must be finite");
  };
  finite(V0, "V0");
  finite(omega0, "omega0");
  finite(P0, "P0");
  finite(Q0, "Q0");
  finite(K_P, "K_P");
  finite(K_Q, "K_Q");
  if (!(std::isfinite(xi_p) && xi_p > 1.0)) throw ConfigError("droop.xi_p must be > 1");
  if (!(std::isfinite(xi_q) && xi_q > 1.0)) throw ConfigError("droop.xi_q must be > 1");
  if (!(std::isfinite(omega_pc) && omega_pc > 0.0)) throw ConfigError("droop.omega_pc must be > 0");
  if (!(std::isfinite(omega_qc) && omega_qc > 0.0)) throw ConfigError("droop.omega_qc must be > 0");
  // +inf is allowed for both limits
  if (!(P_bar > 0.0)) throw ConfigError("droop.P_bar must be > 0 (or inf)");
  if (!(Q_bar > 0.0)) throw ConfigError("droop.Q_bar must be > 0 (or inf)");
}

InstantaneousPower instantaneous_power(Vec2 v_c, Vec2 i_g) {
  return {v_c.a * i_g.a + v_c.b * i_g.b, v_c.b * i_g.a - v_c.a * i_g.b};
}

PowerFilterState power_filter_derivative(const PowerFilterState& f, double p, double q,
                                         const DroopParams& dp) {
  const double wq = dp.omega_qc;
  const double wp = dp.omega_pc;
  PowerFilterState d;
  d.q1 = f.q2;
  d.q2 = -2.0 * dp.xi_q * wq * f.q2 - wq * wq * (f.q1 - saturate(dp.Q_bar, q));
  d.p1 = f.p2;
  d.p2 = -2.0 * dp.xi_p * wp * f.p2 - wp * wp * (f.p1 - saturate(dp.P_bar, p));
  return d;
}

Vec2 droop_voltage_ref(double q1, const DroopParams& dp) {
  return {dp.V0 + dp.K_Q * (dp.Q0 - q1), 0.0};
}

double droop_frequency(double p1, const DroopParams& dp) { return dp.omega0 + dp.K_P * (dp.P0 - p1); }

}  // namespace gfm
