#include "gfm/plant.hpp"

#include <cmath>
#include <string>

#include "gfm/errors.hpp"

namespace gfm {

namespace {

void require_positive(double v, const char* name) {
  if (!(std::isfinite(v) && v > 0.0)) {
    throw ConfigError(std::string("physical.") + name + " must be finite and > 0");
  }
}

}  // namespace

void PhysicalParams::validate() const {
  require_positive(omega_b, "omega_b");
  require_positive(C_f, "C_f");
  require_positive(L_f, "L_f");
  require_positive(R_f, "R_f");
  require_positive(L, "L");
  require_positive(R, "R");
}

InverterState plant_derivative(const InverterState& x, double omega, Vec2 v_t, Vec2 v_g,
                               const PhysicalParams& p) {
  const double wb = p.omega_b;
  const double ww = wb * omega;

  InverterState d;
  d.v_c.a = ww * x.v_c.b + (wb / p.C_f) * (x.i_t.a - x.i_g.a);
  d.v_c.b = -ww * x.v_c.a + (wb / p.C_f) * (x.i_t.b - x.i_g.b);

  d.i_t.a = ww * x.i_t.b + (wb / p.L_f) * (v_t.a - x.v_c.a) - (wb * p.R_f / p.L_f) * x.i_t.a;
  d.i_t.b = -ww * x.i_t.a + (wb / p.L_f) * (v_t.b - x.v_c.b) - (wb * p.R_f / p.L_f) * x.i_t.b;

  d.i_g.a = ww * x.i_g.b + (wb / p.L) * (x.v_c.a - v_g.a) - (wb * p.R / p.L) * x.i_g.a;
  d.i_g.b = -ww * x.i_g.a + (wb / p.L) * (x.v_c.b - v_g.b) - (wb * p.R / p.L) * x.i_g.b;
  return d;
}

}  // namespace gfm
