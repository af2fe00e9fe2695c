#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "gfm/frames.hpp"
#include "gfm/plant.hpp"
#include "gfm/power_droop.hpp"

namespace gfm {

/// Gains of the deadzone-adapted backstepping controller. Defaults are the
/// reference-scenario values.
struct DadsParams {
  double K_VC = 10.0;  // 1/s
  double K_CC = 10.0;  // 1/s
  double mu_d = 1.0;
  double mu_q = 1.0;
  double Gamma_d = 1e6;
  double Gamma_q = 1e6;
  double epsilon = 1e-4;

  /// Exponential decay rate of the error energies, min(K_VC, K_CC).
  double decay_rate() const { return K_VC < K_CC ? K_VC : K_CC; }
  void validate() const;
};

/// Log-gains of the nonlinear damping terms.
struct AdaptiveState {
  double z_d = 0.0;
  double z_q = 0.0;
};

/// Cascaded PI baseline. Gains are not published for the reference scenario;
/// the defaults put the current loop near 7.5 krad/s and the voltage loop
/// near 1.3 krad/s.
struct PiParams {
  double Kp_cc = 1.0;
  double Ki_cc = 100.0;
  double Kf_cc = 1.0;
  double Kp_vc = 1.0;
  double Ki_vc = 20.0;
  double Kf_vc = 1.0;

  void validate() const;
};

struct PiState {
  double gamma_d = 0.0;  // current-loop integrators
  double gamma_q = 0.0;
  double beta_d = 0.0;  // voltage-loop integrators
  double beta_q = 0.0;
};

/// Nominal terminal-voltage command with the error energies and the
/// derivatives of the controller's own states (z_d, z_q for DADS;
/// gamma_d, gamma_q, beta_d, beta_q for PI).
struct ControlOutput {
  Vec2 v_t_nominal;
  double W_d = 0.0;
  double W_q = 0.0;
  Vec2 i_t_ref;
  std::array<double, 4> aux{};
  std::size_t aux_count = 0;

  std::span<const double> aux_derivatives() const { return {aux.data(), aux_count}; }
};

/// Largest z for which exp(z) is representable.
double max_adaptive_gain();

/// Outer-loop (virtual control) terminal-current references.
Vec2 dads_reference_currents(const PlantState& x, double omega, Vec2 v_ref, const DadsParams& params,
                             const DroopParams& droop, const KnownPhysicalParams& phys);

/// Full DADS-BS law. `q_sat` is sat_Qbar(q) as used by the reactive-power
/// filter. Throws GainBlowUp if exp(z_d) or exp(z_q) overflows.
ControlOutput dads_control(const PlantState& x, const AdaptiveState& z, double omega, Vec2 v_ref,
                           double q_sat, const DadsParams& params, const DroopParams& droop,
                           const KnownPhysicalParams& phys);

/// Deadzone adaptation law Gamma * exp(-z) * max(W - epsilon, 0).
double adaptation_derivative(double z, double W, double Gamma, double epsilon);

ControlOutput pi_control(const PlantState& x, const PiState& pi, double omega, Vec2 v_ref,
                         const PiParams& params, const KnownPhysicalParams& phys);

}  // namespace gfm
