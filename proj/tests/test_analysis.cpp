#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "gfm/analysis.hpp"

using gfm::TrajectoryRecord;
using gfm::Vec2;

namespace {

// Samples every 1 ms on [0, T] with a prescribed voltage error.
template <class Err>
std::vector<TrajectoryRecord> synthetic(double T, Err err) {
  std::vector<TrajectoryRecord> out;
  for (int k = 0; k * 1e-3 <= T + 1e-12; ++k) {
    TrajectoryRecord r;
    r.t = k * 1e-3;
    r.v_ref = {1.0, 0.0};
    const Vec2 e = err(r.t);
    r.state.plant.inv.v_c = {1.0 + e.a, e.b};
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("residual band") {
  const double eps = 1e-4;
  CHECK(gfm::residual_bound(eps) == doctest::Approx(std::sqrt(2e-4)));
  const auto flat = synthetic(2.0, [](double) { return Vec2{}; });
  CHECK(gfm::check_residual_band(flat, eps, 0.5).pass);
  CHECK(gfm::check_residual_band(flat, eps, 0.5).measured == 0.0);

  const auto late = synthetic(2.0, [](double t) { return Vec2{t > 1.9 ? 0.02 : 0.0, 0.0}; });
  const auto rep = gfm::check_residual_band(late, eps, 0.5);
  CHECK(!rep.pass);
  CHECK(rep.measured == doctest::Approx(0.02));
  CHECK(rep.worst_time > 1.9);

  // within 5 % of the band passes, beyond fails
  const double b = gfm::residual_bound(eps);
  const auto edge = synthetic(2.0, [&](double) { return Vec2{0.0, 1.04 * b}; });
  CHECK(gfm::check_residual_band(edge, eps, 0.5).pass);
  const auto over = synthetic(2.0, [&](double) { return Vec2{0.0, -1.06 * b}; });
  CHECK(!gfm::check_residual_band(over, eps, 0.5).pass);

  CHECK_THROWS_AS(gfm::check_residual_band(flat, eps, 5.0), std::invalid_argument);
  const gfm::TimeWindow empty{10.0, 11.0};
  CHECK_THROWS_AS(gfm::check_residual_band(flat, eps, std::span(&empty, 1)), std::invalid_argument);
}

TEST_CASE("segment windows") {
  const gfm::GridProfile g;
  const auto tails = gfm::segment_tail_windows(g, 6.0, 0.5);
  REQUIRE(tails.size() == 3);
  CHECK(tails[0].t0 == 1.5);
  CHECK(tails[0].t1 == 2.0);
  CHECK(tails[1].t0 == 3.5);
  CHECK(tails[2].t1 == 6.0);
  const auto settled = gfm::segment_settled_windows(g, 6.0, 1.0);
  REQUIRE(settled.size() == 3);
  CHECK(settled[1].t0 == 3.0);
  CHECK(gfm::segment_settled_windows(g, 6.0, 2.5).empty());

  const auto per_window = synthetic(6.0, [](double t) { return Vec2{t > 3.5 && t < 3.6 ? 0.1 : 0.0, 0.0}; });
  const auto rep = gfm::check_residual_band(per_window, 1e-4, tails);
  CHECK(!rep.pass);
  CHECK(rep.worst_time == doctest::Approx(3.5).epsilon(1e-2));
}

TEST_CASE("decay envelope") {
  gfm::DecayEnvelope env;
  env.R = 0.0;
  env.v_g_bound_d = 0.0;
  env.v_g_bound_q = 0.0;
  // constant part mu / (k L^2) = 1 / (10 * 0.64)
  const double floor = 1.0 / (10 * 0.64);
  std::vector<TrajectoryRecord> traj(3);
  traj[0].t = 0.0;
  traj[0].W_d = 1.0;
  traj[1].t = 0.1;
  traj[1].W_d = 0.5 * (2.0 * std::exp(-2.0) + floor);
  traj[2].t = 0.2;
  traj[2].W_q = 0.5 * floor * 0.9;
  auto rep = gfm::check_decay_envelope(traj, env);
  CHECK(rep.pass);
  CHECK(rep.measured == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
  traj[2].W_q = 0.5 * floor * 1.01;
  rep = gfm::check_decay_envelope(traj, env);
  CHECK(!rep.pass);
  CHECK(rep.worst_time == 0.2);
}

TEST_CASE("current invariance") {
  std::vector<TrajectoryRecord> traj(4);
  for (int k = 0; k < 4; ++k) {
    traj[k].t = 0.001 * k;
    traj[k].state.plant.inv.i_t = {0.3 * k, 0.0};
  }
  CHECK(gfm::check_current_invariance(traj, 1.2, 1e9).pass);
  traj[3].state.plant.inv.i_t = {1.2002, 0.0};
  const auto rep = gfm::check_current_invariance(traj, 1.2, 1e9);
  CHECK(!rep.pass);
  CHECK(rep.measured == doctest::Approx(1.2002));
  CHECK(rep.worst_time == 0.003);
  // a slow barrier slope makes the decay of h itself a violation
  traj[3].state.plant.inv.i_t = {1.1, 0.0};
  CHECK(!gfm::check_current_invariance(traj, 1.2, 1.0).pass);

  CHECK(gfm::check_current_exceeds(traj, 1.0, {0.0, 1.0}).pass);
  CHECK(!gfm::check_current_exceeds(traj, 1.0, {0.0, 0.0025}).pass);
}

TEST_CASE("gain monotonicity and deadzone freeze") {
  std::vector<TrajectoryRecord> traj(5);
  for (int k = 0; k < 5; ++k) {
    traj[k].t = k;
    traj[k].state.adaptive = {0.1 * k, 0.0};
    traj[k].W_d = k < 2 ? 1.0 : 1e-5;
    traj[k].W_q = 1e-5;
  }
  CHECK(gfm::check_gain_monotone_bounded(traj).pass);
  CHECK(!gfm::check_deadzone_freeze(traj, 1e-4).pass);
  for (int k = 2; k < 5; ++k) traj[k].state.adaptive.z_d = 0.2;
  CHECK(gfm::check_deadzone_freeze(traj, 1e-4).pass);
  traj[4].state.adaptive.z_q = -1e-6;
  CHECK(!gfm::check_gain_monotone_bounded(traj).pass);
  traj[4].state.adaptive.z_q = INFINITY;
  CHECK(!gfm::check_gain_monotone_bounded(traj).pass);
}

TEST_CASE("settle time") {
  const auto traj = synthetic(2.0, [](double t) { return Vec2{std::exp(-5.0 * t), 0.0}; });
  const double band = 0.01;
  const double ts = gfm::settle_time(traj, band, 0.0, 2.0);
  CHECK(ts == doctest::Approx(std::log(100.0) / 5.0).epsilon(2e-3));
  CHECK(gfm::settle_time(traj, 10.0, 0.0, 2.0) == 0.0);
}

TEST_CASE("filter closed form against the matrix exponential") {
  std::mt19937_64 rng(81);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int n = 0; n < 500; ++n) {
    const double b = std::exp(std::log(1000.0) * U(rng));
    const double xi = 1.0 + 1e-3 + 2.0 * U(rng);
    const double u = 4.0 * U(rng) - 2.0;
    const gfm::FilterInit init{4 * U(rng) - 2, 4 * U(rng) - 2};
    const double t = 3.0 * U(rng) / b;
    // augmented linear system in (eta1, eta2, u)
    Eigen::Matrix3d A;
    A << 0, 1, 0, -b * b, -2 * xi * b, b * b, 0, 0, 0;
    const Eigen::Vector3d x = (A * t).exp() * Eigen::Vector3d(init.eta1, init.eta2, u);
    const auto [e1, e2] = gfm::filter_exponential_oracle(b, xi, init, u, t);
    CHECK(e1 == doctest::Approx(x(0)).epsilon(1e-8).scale(1.0));
    CHECK(e2 == doctest::Approx(x(1)).epsilon(1e-8).scale(b));
  }
  const auto [a0, b0] = gfm::filter_exponential_oracle(10.0, 1.2, {0.3, -0.7}, 0.5, 0.0);
  CHECK(a0 == doctest::Approx(0.3));
  CHECK(b0 == doctest::Approx(-0.7));
  const auto [a1, b1] = gfm::filter_exponential_oracle(10.0, 1.2, {0.3, -0.7}, 0.5, 100.0);
  CHECK(a1 == doctest::Approx(0.5));
  CHECK(b1 == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("filter bounds hold along the exact solution") {
  std::mt19937_64 rng(82);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int n = 0; n < 2000; ++n) {
    const double b = std::exp(std::log(1000.0) * U(rng));
    const double xi = 1.0 + 1e-3 + 2.0 * U(rng);
    const double M = 2.0 * U(rng);
    const double u = M * (2 * U(rng) - 1);
    const gfm::FilterInit init{4 * U(rng) - 2, 4 * U(rng) - 2};
    const auto [B1, B2] = gfm::lemma1_bounds(b, xi, init, M);
    for (int k = 0; k <= 200; ++k) {
      const double t = 20.0 / b * k / 200.0;
      const auto [e1, e2] = gfm::filter_exponential_oracle(b, xi, init, u, t);
      CHECK(std::abs(e1) <= B1 * (1 + 1e-12));
      CHECK(std::abs(e2) <= B2 * (1 + 1e-12));
    }
  }
  CHECK_THROWS_AS(gfm::lemma1_bounds(1.0, 1.0, {}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gfm::lemma1_bounds(0.0, 2.0, {}, 1.0), std::invalid_argument);
}

TEST_CASE("half-space projection") {
  const gfm::HalfSpace hs{{1.0, 0.0}, 1.0};
  CHECK(gfm::qp_projection_oracle({2.0, 5.0}, hs) == Vec2{1.0, 5.0});
  CHECK(gfm::qp_projection_oracle({0.5, 5.0}, hs) == Vec2{0.5, 5.0});
  const gfm::HalfSpace diag{{1.0, 1.0}, 0.0};
  const Vec2 p = gfm::qp_projection_oracle({1.0, 1.0}, diag);
  CHECK(p.a == doctest::Approx(0.0).scale(1.0));
  CHECK(p.b == doctest::Approx(0.0).scale(1.0));
  CHECK_THROWS_AS(gfm::qp_projection_oracle({1.0, 1.0}, {{0.0, 0.0}, -1.0}), std::invalid_argument);
  CHECK(gfm::qp_projection_oracle({1.0, 1.0}, {{0.0, 0.0}, 1.0}) == Vec2{1.0, 1.0});
}

TEST_CASE("randomized oracle suites pass") {
  const auto f = gfm::run_filter_oracle_suite(7, 30);
  CHECK(f.bounds.pass);
  CHECK(f.agreement.pass);
  CHECK(f.agreement.measured < 1e-6);
  const auto [match, residual] = gfm::run_qp_equivalence_suite(7, 500);
  CHECK(match.pass);
  CHECK(residual.pass);
}

TEST_CASE("check reports serialize") {
  gfm::CheckReport r{"x", true, 1.0, 2.0, 0.5, "ok"};
  const auto j = gfm::to_json(r);
  CHECK(j["name"] == "x");
  CHECK(j["pass"] == true);
  CHECK(j["measured"] == 1.0);
}
