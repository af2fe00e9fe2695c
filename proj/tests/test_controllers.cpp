#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "gfm/controllers.hpp"
#include "gfm/errors.hpp"
#include "gfm/plant.hpp"
#include "gfm/power_droop.hpp"
#include "gfm/scenario.hpp"
#include "gfm/simulation.hpp"

using gfm::Vec2;

namespace {

struct Sample {
  gfm::PlantState x;
  gfm::AdaptiveState z;
  Vec2 v_g;
  gfm::PhysicalParams phys;
};

Sample draw(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_real_distribution<double> fast(-50.0, 50.0);
  std::uniform_real_distribution<double> zz(-5.0, 8.0);
  std::uniform_real_distribution<double> pos(0.05, 3.0);
  Sample s;
  s.x.inv = {{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}};
  s.x.filter = {u(rng), fast(rng), u(rng), fast(rng)};
  s.z = {zz(rng), zz(rng)};
  s.v_g = {u(rng), u(rng)};
  s.phys.R = pos(rng);
  s.phys.L = pos(rng);
  return s;
}

// Closed-loop plant and filter derivative under the DADS law, built from the
// component models only.
gfm::PlantState flow(const gfm::PlantState& x, const gfm::AdaptiveState& z, Vec2 v_g,
                     const gfm::PhysicalParams& phys, const gfm::DroopParams& droop,
                     const gfm::DadsParams& k, gfm::ControlOutput* out = nullptr) {
  const auto pw = gfm::instantaneous_power(x.inv.v_c, x.inv.i_g);
  const double w = gfm::droop_frequency(x.filter.p1, droop);
  const Vec2 v_ref = gfm::droop_voltage_ref(x.filter.q1, droop);
  const double q_sat = gfm::saturate(droop.Q_bar, pw.q);
  const auto c = gfm::dads_control(x, z, w, v_ref, q_sat, k, droop, phys.known());
  if (out) *out = c;
  gfm::PlantState d;
  d.inv = gfm::plant_derivative(x.inv, w, c.v_t_nominal, v_g, phys);
  d.filter = gfm::power_filter_derivative(x.filter, pw.p, pw.q, droop);
  return d;
}

gfm::PlantState shifted(const gfm::PlantState& x, const gfm::PlantState& d, double h) {
  gfm::PlantState y = x;
  y.inv.v_c = x.inv.v_c + h * d.inv.v_c;
  y.inv.i_t = x.inv.i_t + h * d.inv.i_t;
  y.inv.i_g = x.inv.i_g + h * d.inv.i_g;
  y.filter.q1 += h * d.filter.q1;
  y.filter.q2 += h * d.filter.q2;
  y.filter.p1 += h * d.filter.p1;
  y.filter.p2 += h * d.filter.p2;
  return y;
}

Vec2 i_ref_of(const gfm::PlantState& x, const gfm::DroopParams& droop, const gfm::DadsParams& k,
              const gfm::PhysicalParams& phys) {
  const double w = gfm::droop_frequency(x.filter.p1, droop);
  const Vec2 v_ref = gfm::droop_voltage_ref(x.filter.q1, droop);
  return gfm::dads_reference_currents(x, w, v_ref, k, droop, phys.known());
}

}  // namespace

TEST_CASE("backstepping error dynamics along the closed loop") {
  // Along trajectories the law must produce
  //   e_v' = (wb/Cf) e_i - K_VC e_v
  //   e_i' = u - (wb/L) (v_c - v_g - R i_g)
  // with u = -(K_CC + N(z)) e_i - (wb/Cf) e_v, where the second term is the
  // only place the unknown network enters.
  std::mt19937_64 rng(41);
  const gfm::DroopParams droop;
  const gfm::DadsParams k;
  for (int n = 0; n < 2000; ++n) {
    const Sample s = draw(rng);
    const double wb = s.phys.omega_b;
    const double Cf = s.phys.C_f;
    gfm::ControlOutput c;
    const gfm::PlantState d = flow(s.x, s.z, s.v_g, s.phys, droop, k, &c);

    // i_ref is at most quadratic in the state, so the central difference is
    // exact up to rounding.
    const double scale = 1.0 + std::max({std::abs(d.inv.i_g.a), std::abs(d.inv.v_c.a),
                                         std::abs(d.filter.q2), std::abs(d.filter.p2)});
    const double h = 1e-4 / scale;
    const Vec2 rp = i_ref_of(shifted(s.x, d, h), droop, k, s.phys);
    const Vec2 rm = i_ref_of(shifted(s.x, d, -h), droop, k, s.phys);
    const Vec2 dref = (rp - rm) * (0.5 / h);

    const Vec2 i_ref = i_ref_of(s.x, droop, k, s.phys);
    const double e_vd = s.x.inv.v_c.a - gfm::droop_voltage_ref(s.x.filter.q1, droop).a;
    const double e_vq = s.x.inv.v_c.b;
    const Vec2 e_i = s.x.inv.i_t - i_ref;

    const double dev_d = d.inv.v_c.a + droop.K_Q * s.x.filter.q2;
    const double dev_q = d.inv.v_c.b;
    CHECK(dev_d == doctest::Approx(wb / Cf * e_i.a - k.K_VC * e_vd).epsilon(1e-9).scale(1e3));
    CHECK(dev_q == doctest::Approx(wb / Cf * e_i.b - k.K_VC * e_vq).epsilon(1e-9).scale(1e3));

    const double damp = wb * wb / 4.0;
    const auto& x = s.x.inv;
    const double N_d = (1.0 + std::exp(s.z.z_d)) * damp / k.mu_d * (1.0 + x.i_g.a * x.i_g.a + x.v_c.a * x.v_c.a);
    const double N_q = (1.0 + std::exp(s.z.z_q)) * damp / k.mu_q * (1.0 + x.i_g.b * x.i_g.b + x.v_c.b * x.v_c.b);
    const double u_d = -(k.K_CC + N_d) * e_i.a - wb / Cf * e_vd;
    const double u_q = -(k.K_CC + N_q) * e_i.b - wb / Cf * e_vq;
    const double dist_d = wb / s.phys.L * (x.v_c.a - s.v_g.a - s.phys.R * x.i_g.a);
    const double dist_q = wb / s.phys.L * (x.v_c.b - s.v_g.b - s.phys.R * x.i_g.b);

    const Vec2 de_i = d.inv.i_t - dref;
    const double mag_d = std::abs(u_d) + std::abs(dist_d) + std::abs(d.inv.i_t.a) + 1.0;
    const double mag_q = std::abs(u_q) + std::abs(dist_q) + std::abs(d.inv.i_t.b) + 1.0;
    CHECK(std::abs(de_i.a - (u_d - dist_d)) <= 1e-8 * mag_d);
    CHECK(std::abs(de_i.b - (u_q - dist_q)) <= 1e-8 * mag_q);

    CHECK(c.W_d == doctest::Approx(0.5 * (e_vd * e_vd + e_i.a * e_i.a)));
    CHECK(c.W_q == doctest::Approx(0.5 * (e_vq * e_vq + e_i.b * e_i.b)));
  }
}

TEST_CASE("adaptation law") {
  CHECK(gfm::adaptation_derivative(0.0, 1e-4, 1e6, 1e-4) == 0.0);
  CHECK(gfm::adaptation_derivative(3.0, 0.0, 1e6, 1e-4) == 0.0);
  CHECK(gfm::adaptation_derivative(0.0, 2e-4, 1e6, 1e-4) == doctest::Approx(100.0));
  CHECK(gfm::adaptation_derivative(std::log(2.0), 2e-4, 1e6, 1e-4) == doctest::Approx(50.0));

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> W(0.0, 1.0);
  std::uniform_real_distribution<double> z(-10.0, 10.0);
  for (int i = 0; i < 10000; ++i) {
    const double w = W(rng);
    const double r = gfm::adaptation_derivative(z(rng), w, 1e6, 0.5);
    CHECK(r >= 0.0);
    if (w <= 0.5) CHECK(r == 0.0);
  }
}

TEST_CASE("adaptive gain overflow is reported") {
  gfm::PlantState x;
  const gfm::DroopParams droop;
  const gfm::DadsParams k;
  CHECK_NOTHROW(gfm::dads_control(x, {700.0, 0.0}, 1.0, {1.0, 0.0}, 0.0, k, droop, {}));
  CHECK_THROWS_AS(gfm::dads_control(x, {800.0, 0.0}, 1.0, {1.0, 0.0}, 0.0, k, droop, {}),
                  gfm::GainBlowUp);
  CHECK_THROWS_AS(gfm::dads_control(x, {0.0, 800.0}, 1.0, {1.0, 0.0}, 0.0, k, droop, {}),
                  gfm::GainBlowUp);
}

TEST_CASE("controller output ignores the network parameters") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> pos(0.01, 10.0);
  for (int n = 0; n < 500; ++n) {
    const Sample s = draw(rng);
    gfm::AugmentedState a;
    a.plant = s.x;
    a.adaptive = s.z;
    a.theta = s.v_g.a;
    for (auto kind : {gfm::ControllerKind::dads, gfm::ControllerKind::pi}) {
      gfm::ScenarioConfig c1;
      c1.controller = kind;
      gfm::ScenarioConfig c2 = c1;
      c2.phys.R = pos(rng);
      c2.phys.L = pos(rng);
      const auto o1 = gfm::evaluate_signals(a, s.v_g, c1).control;
      const auto o2 = gfm::evaluate_signals(a, s.v_g, c2).control;
      CHECK(std::memcmp(&o1.v_t_nominal, &o2.v_t_nominal, sizeof(Vec2)) == 0);
      CHECK(std::memcmp(o1.aux.data(), o2.aux.data(), sizeof(double) * 4) == 0);
    }
  }
}

TEST_CASE("cascaded PI law by hand") {
  gfm::PiParams g{2.0, 30.0, 1.0, 3.0, 40.0, 0.5};
  gfm::KnownPhysicalParams phys;
  gfm::PlantState x;
  x.inv = {{0.9, 0.1}, {0.4, -0.2}, {0.3, 0.05}};
  gfm::PiState st{0.01, -0.02, 0.03, 0.04};
  const double w = 1.002;
  const Vec2 v_ref{1.0, 0.0};
  const auto out = gfm::pi_control(x, st, w, v_ref, g, phys);
  const double ird = -3.0 * (0.9 - 1.0) - 40.0 * 0.03 + 0.5 * 0.3 - w * phys.C_f * 0.1;
  const double irq = -3.0 * 0.1 - 40.0 * 0.04 + 0.5 * 0.05 + w * phys.C_f * 0.9;
  CHECK(out.i_t_ref.a == doctest::Approx(ird));
  CHECK(out.i_t_ref.b == doctest::Approx(irq));
  const double vtd = -2.0 * (0.4 - ird) - 30.0 * 0.01 + 0.9 - w * phys.L_f * (-0.2);
  const double vtq = -2.0 * (-0.2 - irq) - 30.0 * (-0.02) + 0.1 + w * phys.L_f * 0.4;
  CHECK(out.v_t_nominal.a == doctest::Approx(vtd));
  CHECK(out.v_t_nominal.b == doctest::Approx(vtq));
  REQUIRE(out.aux_count == 4);
  CHECK(out.aux[0] == doctest::Approx(0.4 - ird));
  CHECK(out.aux[1] == doctest::Approx(-0.2 - irq));
  CHECK(out.aux[2] == doctest::Approx(0.9 - 1.0));
  CHECK(out.aux[3] == doctest::Approx(0.1));
}

TEST_CASE("gain validation") {
  gfm::DadsParams k;
  CHECK_NOTHROW(k.validate());
  CHECK(k.decay_rate() == 10.0);
  k.K_CC = 4.0;
  CHECK(k.decay_rate() == 4.0);
  k.epsilon = 0.0;
  CHECK_THROWS_AS(k.validate(), gfm::ConfigError);
  gfm::PiParams p;
  p.Ki_vc = INFINITY;
  CHECK_THROWS_AS(p.validate(), gfm::ConfigError);
}
