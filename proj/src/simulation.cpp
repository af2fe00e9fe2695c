#include "gfm/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gfm/errors.hpp"
#include "gfm/frames.hpp"
#include "gfm/power_droop.hpp"

namespace gfm {

std::size_t state_dimension(ControllerKind kind) {
  return kind == ControllerKind::dads ? kControllerOffset + 2 : kControllerOffset + 4;
}

void pack(const AugmentedState& s, ControllerKind kind, std::span<double> out) {
  const InverterState& inv = s.plant.inv;
  const PowerFilterState& f = s.plant.filter;
  out[0] = inv.v_c.a;
  out[1] = inv.v_c.b;
  out[2] = inv.i_t.a;
  out[3] = inv.i_t.b;
  out[4] = inv.i_g.a;
  out[5] = inv.i_g.b;
  out[6] = f.q1;
  out[7] = f.q2;
  out[8] = f.p1;
  out[9] = f.p2;
  out[kThetaIndex] = s.theta;
  if (kind == ControllerKind::dads) {
    out[kControllerOffset] = s.adaptive.z_d;
    out[kControllerOffset + 1] = s.adaptive.z_q;
  } else {
    out[kControllerOffset] = s.pi.gamma_d;
    out[kControllerOffset + 1] = s.pi.gamma_q;
    out[kControllerOffset + 2] = s.pi.beta_d;
    out[kControllerOffset + 3] = s.pi.beta_q;
  }
}

AugmentedState unpack(std::span<const double> y, ControllerKind kind) {
  AugmentedState s;
  s.plant.inv = {{y[0], y[1]}, {y[2], y[3]}, {y[4], y[5]}};
  s.plant.filter = {y[6], y[7], y[8], y[9]};
  s.theta = y[kThetaIndex];
  if (kind == ControllerKind::dads) {
    s.adaptive = {y[kControllerOffset], y[kControllerOffset + 1]};
  } else {
    s.pi = {y[kControllerOffset], y[kControllerOffset + 1], y[kControllerOffset + 2],
            y[kControllerOffset + 3]};
  }
  return s;
}

ClosedLoopSignals evaluate_signals(const AugmentedState& s, Vec2 v_g_DQ, const ScenarioConfig& cfg) {
  const KnownPhysicalParams known = cfg.phys.known();
  ClosedLoopSignals sig;
  sig.v_g_local = rotate_to_local(s.theta, v_g_DQ);
  sig.power = instantaneous_power(s.plant.inv.v_c, s.plant.inv.i_g);
  sig.q_sat = saturate(cfg.droop.Q_bar, sig.power.q);
  sig.omega = droop_frequency(s.plant.filter.p1, cfg.droop);
  sig.v_ref = droop_voltage_ref(s.plant.filter.q1, cfg.droop);

  if (cfg.controller == ControllerKind::dads) {
    sig.control = dads_control(s.plant, s.adaptive, sig.omega, sig.v_ref, sig.q_sat, cfg.dads,
                               cfg.droop, known);
  } else {
    sig.control = pi_control(s.plant, s.pi, sig.omega, sig.v_ref, cfg.pi, known);
  }
  sig.safety = apply_filter(s.plant, sig.omega, sig.control.v_t_nominal, cfg.safety, known);
  return sig;
}

namespace {

std::string dump_state(std::span<const double> y, std::span<const double> dydt) {
  std::ostringstream os;
  os.precision(17);
  os << "y = [";
  for (std::size_t i = 0; i < y.size(); ++i) os << (i ? ", " : "") << y[i];
  os << "], dy/dt = [";
  for (std::size_t i = 0; i < dydt.size(); ++i) os << (i ? ", " : "") << dydt[i];
  os << "]";
  return os.str();
}

}  // namespace

void closed_loop_rhs(std::span<const double> y, Vec2 v_g_DQ, const ScenarioConfig& cfg,
                     std::span<double> dydt) {
  const ControllerKind kind = cfg.controller;
  const AugmentedState s = unpack(y, kind);
  const ClosedLoopSignals sig = evaluate_signals(s, v_g_DQ, cfg);

  const InverterState d_inv =
      plant_derivative(s.plant.inv, sig.omega, sig.safety.v_t_applied, sig.v_g_local, cfg.phys);
  const PowerFilterState d_f =
      power_filter_derivative(s.plant.filter, sig.power.p, sig.power.q, cfg.droop);

  dydt[0] = d_inv.v_c.a;
  dydt[1] = d_inv.v_c.b;
  dydt[2] = d_inv.i_t.a;
  dydt[3] = d_inv.i_t.b;
  dydt[4] = d_inv.i_g.a;
  dydt[5] = d_inv.i_g.b;
  dydt[6] = d_f.q1;
  dydt[7] = d_f.q2;
  dydt[8] = d_f.p1;
  dydt[9] = d_f.p2;
  dydt[kThetaIndex] = theta_derivative(sig.omega, cfg.droop.omega0, cfg.phys.omega_b);
  const auto aux = sig.control.aux_derivatives();
  std::copy(aux.begin(), aux.end(), dydt.begin() + kControllerOffset);

  const std::size_t n = state_dimension(kind);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(dydt[i])) {
      throw IntegrationError("non-finite closed-loop derivative: " +
                             dump_state(y.first(n), std::span<const double>(dydt.data(), n)));
    }
  }
}

std::vector<double> closed_loop_rhs(std::span<const double> y, double t, const ScenarioConfig& cfg) {
  std::vector<double> d(state_dimension(cfg.controller));
  closed_loop_rhs(y, grid_voltage(t, cfg.grid), cfg, d);
  return d;
}

AugmentedState initial_state(const ScenarioConfig& cfg) {
  const InitialConditions& ic = cfg.initial;
  AugmentedState s;
  s.plant.inv = {ic.v_c, ic.i_t, ic.i_g};
  if (ic.filter) {
    s.plant.filter = *ic.filter;
  } else {
    const InstantaneousPower pq = instantaneous_power(ic.v_c, ic.i_g);
    s.plant.filter = {saturate(cfg.droop.Q_bar, pq.q), 0.0, saturate(cfg.droop.P_bar, pq.p), 0.0};
  }
  s.theta = ic.theta;
  s.adaptive = ic.z;
  s.pi = ic.pi;
  return s;
}

TrajectoryRecord make_record(double t, const AugmentedState& s, Vec2 v_g_DQ, const ScenarioConfig& cfg) {
  const ClosedLoopSignals sig = evaluate_signals(s, v_g_DQ, cfg);
  TrajectoryRecord r;
  r.t = t;
  r.state = s;
  r.p = sig.power.p;
  r.q = sig.power.q;
  r.omega = sig.omega;
  r.v_ref = sig.v_ref;
  r.W_d = sig.control.W_d;
  r.W_q = sig.control.W_q;
  r.eta = sig.safety.eta;
  r.h = sig.safety.h;
  r.filter_active = sig.safety.active;
  r.v_t = sig.safety.v_t_applied;
  r.v_t_nominal = sig.control.v_t_nominal;
  r.v_g_local = sig.v_g_local;
  return r;
}

SimulationResult integrate(const ScenarioConfig& cfg) {
  cfg.validate();
  const ControllerKind kind = cfg.controller;
  const double t_end = cfg.t_end;

  SimulationResult result;
  result.controller = kind;

  // Uniform output grid; the integrator lands on each of these exactly.
  std::vector<double> out_times;
  const double dt = cfg.integrator.output_interval;
  const auto n_out = static_cast<std::size_t>(std::floor(t_end / dt + 1e-9));
  out_times.reserve(n_out + 1);
  for (std::size_t k = 1; k <= n_out; ++k) out_times.push_back(static_cast<double>(k) * dt);
  if (out_times.empty() || out_times.back() < t_end) out_times.push_back(t_end);
  std::size_t next_out = 0;

  std::vector<double> edges{0.0};
  for (double b : cfg.grid.breakpoints(t_end)) edges.push_back(b);
  edges.push_back(t_end);

  std::vector<double> stops = out_times;
  stops.insert(stops.end(), edges.begin() + 1, edges.end());
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  auto add_record = [&](double t, std::span<const double> y) {
    TrajectoryRecord r = make_record(t, unpack(y, kind), grid_voltage(t, cfg.grid), cfg);
    while (next_out < out_times.size() && out_times[next_out] < t) ++next_out;
    if (next_out < out_times.size() && out_times[next_out] == t) {
      r.on_output_grid = true;
      ++next_out;
    }
    if (t == 0.0) r.on_output_grid = true;
    if (cfg.safety.enabled) result.events.record(t, r.eta);
    result.records.push_back(std::move(r));
  };

  std::vector<double> y(state_dimension(kind));
  pack(initial_state(cfg), kind, y);
  double t = 0.0;
  add_record(t, y);

  OdeIntegrator solver(cfg.integrator);
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double t_right = edges[k + 1];
    const Vec2 v_g = cfg.grid.value_between(edges[k], t_right);
    const OdeRhs rhs = [&cfg, v_g](double, std::span<const double> yy, std::span<double> dd) {
      closed_loop_rhs(yy, v_g, cfg, dd);
    };
    solver.advance(rhs, t, y, t_right, stops,
                   [&](double tt, std::span<const double> yy) { add_record(tt, yy); });
  }
  result.stats = solver.stats();
  return result;
}

}  // namespace gfm
