#include "gfm/controllers.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gfm/errors.hpp"

namespace gfm {

namespace {

void require_positive(double v, const char* name) {
  if (!(std::isfinite(v) && v > 0.0)) {
    throw ConfigError(std::string("dads.") + name + " must be finite and > 0");
  }
}

double guarded_exp(double z, const char* axis) {
  if (!(z <= max_adaptive_gain())) {
    throw GainBlowUp(std::string("adaptive gain z_") + axis + " = " + std::to_string(z) +
                     " overflows exp(); reduce Gamma or raise epsilon");
  }
  return std::exp(z);
}

}  // namespace

void DadsParams::validate() const {
  require_positive(K_VC, "K_VC");
  require_positive(K_CC, "K_CC");
  require_positive(mu_d, "mu_d");
  require_positive(mu_q, "mu_q");
  require_positive(Gamma_d, "Gamma_d");
  require_positive(Gamma_q, "Gamma_q");
  require_positive(epsilon, "epsilon");
}

void PiParams::validate() const {
  for (double v : {Kp_cc, Ki_cc, Kf_cc, Kp_vc, Ki_vc, Kf_vc}) {
    if (!std::isfinite(v)) throw ConfigError("pi gains must be finite");
  }
}

double max_adaptive_gain() { return std::log(std::numeric_limits<double>::max()); }

Vec2 dads_reference_currents(const PlantState& x, double omega, Vec2 v_ref, const DadsParams& k,
                             const DroopParams& droop, const KnownPhysicalParams& phys) {
  const InverterState& s = x.inv;
  const double Cf = phys.C_f;
  const double wb = phys.omega_b;
  return {
      s.i_g.a - Cf * omega * s.v_c.b - (Cf * droop.K_Q / wb) * x.filter.q2 -
          (Cf * k.K_VC / wb) * (s.v_c.a - v_ref.a),
      s.i_g.b + Cf * omega * s.v_c.a - (Cf * k.K_VC / wb) * s.v_c.b,
  };
}

ControlOutput dads_control(const PlantState& x, const AdaptiveState& z, double omega, Vec2 v_ref,
                           double q_sat, const DadsParams& k, const DroopParams& droop,
                           const KnownPhysicalParams& phys) {
  const InverterState& s = x.inv;
  const PowerFilterState& f = x.filter;
  const double wb = phys.omega_b;
  const double Cf = phys.C_f;
  const double Lf = phys.L_f;
  const double Rf = phys.R_f;

  const Vec2 i_ref = dads_reference_currents(x, omega, v_ref, k, droop, phys);
  const double e_vd = s.v_c.a - v_ref.a;
  const double e_id = s.i_t.a - i_ref.a;
  const double e_iq = s.i_t.b - i_ref.b;

  const double damping = wb * wb / 4.0;
  const double gain_d =
      k.K_CC + (1.0 + guarded_exp(z.z_d, "d")) * damping / k.mu_d *
                   (1.0 + s.i_g.a * s.i_g.a + s.v_c.a * s.v_c.a);
  const double gain_q =
      k.K_CC + (1.0 + guarded_exp(z.z_q, "q")) * damping / k.mu_q *
                   (1.0 + s.i_g.b * s.i_g.b + s.v_c.b * s.v_c.b);

  const double u_d = -gain_d * e_id - (wb / Cf) * e_vd;
  const double u_q = -gain_q * e_iq - (wb / Cf) * s.v_c.b;

  const double wqc = droop.omega_qc;
  const double bracket_d = -2.0 * wb * omega * (s.i_t.b - s.i_g.b) + (wb * Rf / Lf) * s.i_t.a +
                           wb * (1.0 / Lf + omega * omega * Cf) * s.v_c.a +
                           Cf * droop.K_P * f.p2 * s.v_c.b - k.K_VC * e_id +
                           (Cf * k.K_VC * k.K_VC / wb) * e_vd +
                           (2.0 * droop.xi_q * wqc * droop.K_Q * Cf / wb) * f.q2 +
                           (wqc * wqc * droop.K_Q * Cf / wb) * (f.q1 - q_sat) + u_d;
  const double bracket_q =
      2.0 * wb * omega * (s.i_t.a - s.i_g.a) + (wb * Rf / Lf) * s.i_t.b +
      wb * (1.0 / Lf + Cf * omega * omega + Cf * k.K_VC * k.K_VC / (wb * wb)) * s.v_c.b -
      Cf * droop.K_P * f.p2 * s.v_c.a - k.K_VC * e_iq + u_q;

  ControlOutput out;
  out.v_t_nominal = {(Lf / wb) * bracket_d, (Lf / wb) * bracket_q};
  out.i_t_ref = i_ref;
  out.W_d = 0.5 * e_vd * e_vd + 0.5 * e_id * e_id;
  out.W_q = 0.5 * s.v_c.b * s.v_c.b + 0.5 * e_iq * e_iq;
  out.aux[0] = adaptation_derivative(z.z_d, out.W_d, k.Gamma_d, k.epsilon);
  out.aux[1] = adaptation_derivative(z.z_q, out.W_q, k.Gamma_q, k.epsilon);
  out.aux_count = 2;
  return out;
}

double adaptation_derivative(double z, double W, double Gamma, double epsilon) {
  const double excess = W - epsilon;
  if (!(excess > 0.0)) return 0.0;
  return Gamma * std::exp(-z) * excess;
}

ControlOutput pi_control(const PlantState& x, const PiState& pi, double omega, Vec2 v_ref,
                         const PiParams& g, const KnownPhysicalParams& phys) {
  const InverterState& s = x.inv;
  const double Cf = phys.C_f;
  const double Lf = phys.L_f;

  // voltage loop
  const Vec2 i_ref{
      -g.Kp_vc * (s.v_c.a - v_ref.a) - g.Ki_vc * pi.beta_d + g.Kf_vc * s.i_g.a -
          omega * Cf * s.v_c.b,
      -g.Kp_vc * (s.v_c.b - v_ref.b) - g.Ki_vc * pi.beta_q + g.Kf_vc * s.i_g.b +
          omega * Cf * s.v_c.a,
  };
  // current loop
  const Vec2 v_t{
      -g.Kp_cc * (s.i_t.a - i_ref.a) - g.Ki_cc * pi.gamma_d + g.Kf_cc * s.v_c.a -
          omega * Lf * s.i_t.b,
      -g.Kp_cc * (s.i_t.b - i_ref.b) - g.Ki_cc * pi.gamma_q + g.Kf_cc * s.v_c.b +
          omega * Lf * s.i_t.a,
  };

  const double e_vd = s.v_c.a - v_ref.a;
  const Vec2 e_i = s.i_t - i_ref;

  ControlOutput out;
  out.v_t_nominal = v_t;
  out.i_t_ref = i_ref;
  out.W_d = 0.5 * e_vd * e_vd + 0.5 * e_i.a * e_i.a;
  out.W_q = 0.5 * s.v_c.b * s.v_c.b + 0.5 * e_i.b * e_i.b;
  out.aux[0] = e_i.a;     // gamma_d'
  out.aux[1] = e_i.b;     // gamma_q'
  out.aux[2] = e_vd;      // beta_d'
  out.aux[3] = s.v_c.b;   // beta_q'
  out.aux_count = 4;
  return out;
}

}  // namespace gfm
