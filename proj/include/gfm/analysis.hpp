#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gfm/frames.hpp"
#include "gfm/integrator.hpp"
#include "gfm/scenario.hpp"
#include "gfm/simulation.hpp"

namespace gfm {

/// Verdict of one trajectory-level check. `measured` is compared against
/// `threshold` in the direction the check states (usually measured <=
/// threshold); `worst_time` is where the measured extreme occurred.
struct CheckReport {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  double worst_time = 0.0;
  std::string details;
};

nlohmann::json to_json(const CheckReport& r);

struct TimeWindow {
  double t0 = 0.0;
  double t1 = 0.0;
};

/// The final `settle` seconds of every constant-grid segment of [0, t_end].
std::vector<TimeWindow> segment_tail_windows(const GridProfile& grid, double t_end, double settle);
/// Every constant-grid segment with its first `skip` seconds removed.
std::vector<TimeWindow> segment_settled_windows(const GridProfile& grid, double t_end, double skip);

/// Half-width of the ultimate voltage residual set, sqrt(2 epsilon).
double residual_bound(double epsilon);

/// max(|v_c,d - v^r_c,d|, |v_c,q|) over the windows must stay within
/// sqrt(2 epsilon) * (1 + band_tol).
CheckReport check_residual_band(std::span<const TrajectoryRecord> traj, double epsilon,
                                std::span<const TimeWindow> windows, double band_tol = 0.05);
/// Same check on the final `settle_window` seconds of the trajectory.
/// Throws std::invalid_argument if the trajectory is shorter than that.
CheckReport check_residual_band(std::span<const TrajectoryRecord> traj, double epsilon,
                                double settle_window, double band_tol = 0.05);

struct DecayEnvelope {
  double k = 10.0;  // min(K_VC, K_CC)
  double R = 0.2;
  double L = 0.8;
  double mu_d = 1.0;
  double mu_q = 1.0;
  double v_g_bound_d = 1.0;  // sup |v_g,d| in the local frame
  double v_g_bound_q = 1.0;
};

/// 2 W_l(t) <= 2 exp(-2 k t) W_l(0) + mu_l (1 + R^2 + vg_l^2) / (k L^2) + env_tol
/// at every sample, for l in {d, q}. `measured` is the largest excess of
/// 2W over the envelope (negative when the check passes with room).
CheckReport check_decay_envelope(std::span<const TrajectoryRecord> traj, const DecayEnvelope& env,
                                 double env_tol = 1e-6);

/// max |i_t| <= I_max (1 + inv_tol) and h(t) >= exp(-c t) h(0) - h_tol.
CheckReport check_current_invariance(std::span<const TrajectoryRecord> traj, double I_max, double c,
                                     double inv_tol = 1e-4, double h_tol = 1e-6);

/// Passes iff max |i_t| over [window.t0, window.t1] is strictly above I_max.
CheckReport check_current_exceeds(std::span<const TrajectoryRecord> traj, double I_max,
                                  TimeWindow window);

/// z_d and z_q never decrease by more than `step_tol` between samples and end
/// finite. `measured` is the largest per-sample decrease.
CheckReport check_gain_monotone_bounded(std::span<const TrajectoryRecord> traj,
                                        double step_tol = 1e-12);

/// Between consecutive samples that both have W_l <= epsilon, z_l moves by at
/// most `tol`.
CheckReport check_deadzone_freeze(std::span<const TrajectoryRecord> traj, double epsilon,
                                  double tol = 1e-9);

/// Largest |i_t| over the trajectory and its time.
std::pair<double, double> max_terminal_current(std::span<const TrajectoryRecord> traj);

/// Last time inside [t0, t1] at which the voltage error exceeds `band`;
/// returns t0 if the error never leaves the band.
double settle_time(std::span<const TrajectoryRecord> traj, double band, double t0, double t1);

struct FilterInit {
  double eta1 = 0.0;
  double eta2 = 0.0;
};

/// Uniform bounds on |eta1|, |eta2| for the filter
///   eta1' = eta2,  eta2' = -2 xi b eta2 - b^2 eta1 + b^2 u,  |u| <= M.
/// Throws std::invalid_argument unless b > 0 and xi > 1.
std::pair<double, double> lemma1_bounds(double b, double xi, FilterInit init, double input_bound);

/// Exact solution of the same filter for constant u at time t (two real
/// modes, rates b (xi -/+ sqrt(xi^2 - 1))).
std::pair<double, double> filter_exponential_oracle(double b, double xi, FilterInit init,
                                                    double u_const, double t);

/// {v : normal . v <= offset}
struct HalfSpace {
  Vec2 normal;
  double offset = 0.0;
};

/// Euclidean projection onto a half-space. Throws std::invalid_argument when
/// the point is infeasible and the normal is zero.
Vec2 qp_projection_oracle(Vec2 v_nominal, const HalfSpace& constraint);

struct OracleSuiteResult {
  CheckReport bounds;     // worst excess over the uniform filter bounds
  CheckReport agreement;  // worst |simulated - closed form|
};

/// Randomized constant-input filter simulations against the closed form and
/// the uniform bounds. Draws b in [1, 1000], xi in (1, 3], M in [0, 2],
/// init in [-2, 2]^2.
OracleSuiteResult run_filter_oracle_suite(std::uint64_t seed, std::size_t draws, double tol = 1e-6);

/// Randomized states: apply_filter against qp_projection_oracle, plus the
/// post-filter constraint residual when active.
std::pair<CheckReport, CheckReport> run_qp_equivalence_suite(std::uint64_t seed, std::size_t draws,
                                                             double match_tol = 1e-8,
                                                             double residual_tol = 1e-9);

}  // namespace gfm
