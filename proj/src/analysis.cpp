#include "gfm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "gfm/safety.hpp"

namespace gfm {

using nlohmann::json;

json to_json(const CheckReport& r) {
  return {{"name", r.name},
          {"pass", r.pass},
          {"measured", r.measured},
          {"threshold", r.threshold},
          {"worst_time", r.worst_time},
          {"details", r.details}};
}

namespace {

std::vector<TimeWindow> constant_segments(const GridProfile& grid, double t_end) {
  std::vector<double> edges{0.0};
  for (double b : grid.breakpoints(t_end)) edges.push_back(b);
  edges.push_back(t_end);
  std::vector<TimeWindow> out;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) out.push_back({edges[k], edges[k + 1]});
  return out;
}

double voltage_error(const TrajectoryRecord& r) {
  const Vec2 v = r.state.plant.inv.v_c;
  return std::max(std::abs(v.a - r.v_ref.a), std::abs(v.b - r.v_ref.b));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::vector<TimeWindow> segment_tail_windows(const GridProfile& grid, double t_end, double settle) {
  std::vector<TimeWindow> out;
  for (const TimeWindow& w : constant_segments(grid, t_end)) {
    out.push_back({std::max(w.t0, w.t1 - settle), w.t1});
  }
  return out;
}

std::vector<TimeWindow> segment_settled_windows(const GridProfile& grid, double t_end, double skip) {
  std::vector<TimeWindow> out;
  for (const TimeWindow& w : constant_segments(grid, t_end)) {
    if (w.t0 + skip < w.t1) out.push_back({w.t0 + skip, w.t1});
  }
  return out;
}

double residual_bound(double epsilon) { return std::sqrt(2.0 * epsilon); }

CheckReport check_residual_band(std::span<const TrajectoryRecord> traj, double epsilon,
                                std::span<const TimeWindow> windows, double band_tol) {
  CheckReport rep;
  rep.name = "residual_band";
  rep.threshold = residual_bound(epsilon) * (1.0 + band_tol);
  rep.measured = 0.0;
  std::ostringstream details;
  for (const TimeWindow& w : windows) {
    double worst = -1.0;
    double worst_t = w.t0;
    for (const TrajectoryRecord& r : traj) {
      if (r.t < w.t0 || r.t > w.t1) continue;
      const double e = voltage_error(r);
      if (e > worst) {
        worst = e;
        worst_t = r.t;
      }
    }
    if (worst < 0.0) {
      throw std::invalid_argument("check_residual_band: no samples in [" + fmt(w.t0) + ", " +
                                  fmt(w.t1) + "]");
    }
    details << "[" << fmt(w.t0) << ", " << fmt(w.t1) << "]: " << fmt(worst) << "; ";
    if (worst >= rep.measured) {
      rep.measured = worst;
      rep.worst_time = worst_t;
    }
  }
  rep.pass = rep.measured <= rep.threshold;
  rep.details = details.str() + "band sqrt(2 eps) = " + fmt(residual_bound(epsilon));
  return rep;
}

CheckReport check_residual_band(std::span<const TrajectoryRecord> traj, double epsilon,
                                double settle_window, double band_tol) {
  if (traj.empty() || traj.back().t - traj.front().t < settle_window) {
    throw std::invalid_argument("check_residual_band: trajectory shorter than the settle window");
  }
  const TimeWindow w{traj.back().t - settle_window, traj.back().t};
  return check_residual_band(traj, epsilon, std::span<const TimeWindow>(&w, 1), band_tol);
}

CheckReport check_decay_envelope(std::span<const TrajectoryRecord> traj, const DecayEnvelope& env,
                                 double env_tol) {
  CheckReport rep;
  rep.name = "decay_envelope";
  rep.threshold = env_tol;
  rep.measured = -std::numeric_limits<double>::infinity();
  if (traj.empty()) {
    rep.pass = true;
    rep.measured = 0.0;
    rep.details = "empty trajectory";
    return rep;
  }
  const double t0 = traj.front().t;
  const double W0d = traj.front().W_d;
  const double W0q = traj.front().W_q;
  const double floor_d =
      env.mu_d * (1.0 + env.R * env.R + env.v_g_bound_d * env.v_g_bound_d) / (env.k * env.L * env.L);
  const double floor_q =
      env.mu_q * (1.0 + env.R * env.R + env.v_g_bound_q * env.v_g_bound_q) / (env.k * env.L * env.L);
  char axis = 'd';
  for (const TrajectoryRecord& r : traj) {
    const double decay = std::exp(-2.0 * env.k * (r.t - t0));
    const double ex_d = 2.0 * r.W_d - (2.0 * decay * W0d + floor_d);
    const double ex_q = 2.0 * r.W_q - (2.0 * decay * W0q + floor_q);
    if (ex_d > rep.measured) {
      rep.measured = ex_d;
      rep.worst_time = r.t;
      axis = 'd';
    }
    if (ex_q > rep.measured) {
      rep.measured = ex_q;
      rep.worst_time = r.t;
      axis = 'q';
    }
  }
  rep.pass = rep.measured <= env_tol;
  rep.details = std::string("tightest axis ") + axis + "; constant terms d " + fmt(floor_d) + ", q " +
                fmt(floor_q) + "; k = " + fmt(env.k);
  return rep;
}

CheckReport check_current_invariance(std::span<const TrajectoryRecord> traj, double I_max, double c,
                                     double inv_tol, double h_tol) {
  CheckReport rep;
  rep.name = "current_invariance";
  rep.threshold = I_max * (1.0 + inv_tol);
  const auto [i_max, t_max] = max_terminal_current(traj);
  rep.measured = i_max;
  rep.worst_time = t_max;

  double worst_h = -std::numeric_limits<double>::infinity();
  double worst_h_t = 0.0;
  if (!traj.empty()) {
    const double t0 = traj.front().t;
    const double h0 = barrier(traj.front().state.plant.inv.i_t, I_max);
    for (const TrajectoryRecord& r : traj) {
      const double h = barrier(r.state.plant.inv.i_t, I_max);
      const double deficit = std::exp(-c * (r.t - t0)) * h0 - h;
      if (deficit > worst_h) {
        worst_h = deficit;
        worst_h_t = r.t;
      }
    }
  } else {
    worst_h = 0.0;
  }
  const bool h_ok = worst_h <= h_tol;
  rep.pass = rep.measured <= rep.threshold && h_ok;
  rep.details = "max |i_t| " + fmt(i_max) + " at t = " + fmt(t_max) +
                "; worst barrier deficit exp(-ct)h(0) - h(t) = " + fmt(worst_h) + " at t = " +
                fmt(worst_h_t) + (h_ok ? "" : " (exceeds " + fmt(h_tol) + ")");
  return rep;
}

CheckReport check_current_exceeds(std::span<const TrajectoryRecord> traj, double I_max,
                                  TimeWindow window) {
  CheckReport rep;
  rep.name = "current_exceeds_limit";
  rep.threshold = I_max;
  for (const TrajectoryRecord& r : traj) {
    if (r.t < window.t0 || r.t > window.t1) continue;
    const double n = r.state.plant.inv.i_t.norm();
    if (n > rep.measured) {
      rep.measured = n;
      rep.worst_time = r.t;
    }
  }
  rep.pass = rep.measured > I_max;
  rep.details = "max |i_t| over [" + fmt(window.t0) + ", " + fmt(window.t1) + "] must exceed I_max";
  return rep;
}

CheckReport check_gain_monotone_bounded(std::span<const TrajectoryRecord> traj, double step_tol) {
  CheckReport rep;
  rep.name = "gain_monotone_bounded";
  rep.threshold = step_tol;
  rep.measured = 0.0;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const AdaptiveState& a = traj[k - 1].state.adaptive;
    const AdaptiveState& b = traj[k].state.adaptive;
    const double drop = std::max(a.z_d - b.z_d, a.z_q - b.z_q);
    if (drop > rep.measured) {
      rep.measured = drop;
      rep.worst_time = traj[k].t;
    }
  }
  bool finite = true;
  if (!traj.empty()) {
    const AdaptiveState& first = traj.front().state.adaptive;
    const AdaptiveState& last = traj.back().state.adaptive;
    finite = std::isfinite(last.z_d) && std::isfinite(last.z_q);
    rep.details = "final z_d " + fmt(last.z_d) + ", z_q " + fmt(last.z_q) + "; total increase d " +
                  fmt(last.z_d - first.z_d) + ", q " + fmt(last.z_q - first.z_q);
  }
  rep.pass = finite && rep.measured <= step_tol;
  return rep;
}

CheckReport check_deadzone_freeze(std::span<const TrajectoryRecord> traj, double epsilon, double tol) {
  CheckReport rep;
  rep.name = "deadzone_freeze";
  rep.threshold = tol;
  rep.measured = 0.0;
  std::size_t pairs = 0;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const TrajectoryRecord& a = traj[k - 1];
    const TrajectoryRecord& b = traj[k];
    if (a.W_d <= epsilon && b.W_d <= epsilon) {
      ++pairs;
      const double dz = std::abs(b.state.adaptive.z_d - a.state.adaptive.z_d);
      if (dz > rep.measured) {
        rep.measured = dz;
        rep.worst_time = b.t;
      }
    }
    if (a.W_q <= epsilon && b.W_q <= epsilon) {
      ++pairs;
      const double dz = std::abs(b.state.adaptive.z_q - a.state.adaptive.z_q);
      if (dz > rep.measured) {
        rep.measured = dz;
        rep.worst_time = b.t;
      }
    }
  }
  rep.pass = rep.measured <= tol;
  rep.details = std::to_string(pairs) + " sample pairs inside the deadzone";
  return rep;
}

std::pair<double, double> max_terminal_current(std::span<const TrajectoryRecord> traj) {
  double best = 0.0;
  double when = traj.empty() ? 0.0 : traj.front().t;
  for (const TrajectoryRecord& r : traj) {
    const double n = r.state.plant.inv.i_t.norm();
    if (n > best) {
      best = n;
      when = r.t;
    }
  }
  return {best, when};
}

double settle_time(std::span<const TrajectoryRecord> traj, double band, double t0, double t1) {
  double last = t0;
  for (const TrajectoryRecord& r : traj) {
    if (r.t < t0 || r.t > t1) continue;
    if (voltage_error(r) > band) last = r.t;
  }
  return last;
}

std::pair<double, double> lemma1_bounds(double b, double xi, FilterInit init, double M) {
  if (!(b > 0.0)) throw std::invalid_argument("lemma1_bounds: b must be > 0");
  if (!(xi > 1.0)) throw std::invalid_argument("lemma1_bounds: xi must be > 1");
  const double r = std::sqrt(xi * xi - 1.0);
  const double e1 = std::abs(init.eta1);
  const double e2 = std::abs(init.eta2);
  const double bound1 = (xi * e1 + e2 / b) / r + M;
  const double bound2 = (b * e1 + xi * e2) / r + b * M / r;
  return {bound1, bound2};
}

std::pair<double, double> filter_exponential_oracle(double b, double xi, FilterInit init,
                                                    double u_const, double t) {
  if (!(b > 0.0) || !(xi > 1.0)) {
    throw std::invalid_argument("filter_exponential_oracle: need b > 0 and xi > 1");
  }
  const double r = std::sqrt(xi * xi - 1.0);
  const double s1 = -b * (xi - r);  // slow mode
  const double s2 = -b * (xi + r);  // fast mode
  const double x0 = init.eta1 - u_const;
  const double A = (init.eta2 - s2 * x0) / (s1 - s2);
  const double B = (s1 * x0 - init.eta2) / (s1 - s2);
  const double e1 = std::exp(s1 * t);
  const double e2 = std::exp(s2 * t);
  return {u_const + A * e1 + B * e2, s1 * A * e1 + s2 * B * e2};
}

Vec2 qp_projection_oracle(Vec2 v, const HalfSpace& hs) {
  const double viol = hs.normal.dot(v) - hs.offset;
  if (viol <= 0.0) return v;
  const double n2 = hs.normal.norm2();
  if (!(n2 > 0.0)) throw std::invalid_argument("qp_projection_oracle: zero normal with violated constraint");
  return v - (viol / n2) * hs.normal;
}

OracleSuiteResult run_filter_oracle_suite(std::uint64_t seed, std::size_t draws, double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  OracleSuiteResult res;
  res.bounds.name = "lemma1_bounds";
  res.bounds.threshold = tol;
  res.bounds.measured = -std::numeric_limits<double>::infinity();
  res.agreement.name = "filter_closed_form_agreement";
  res.agreement.threshold = tol;

  IntegratorSettings s;
  s.method = IntegratorMethod::dormand_prince45;
  s.rel_tol = 1e-12;
  s.abs_tol = 1e-12;
  s.min_step = 1e-14;
  s.initial_step = 1e-7;

  std::size_t samples = 0;
  for (std::size_t k = 0; k < draws; ++k) {
    const double b = std::exp(std::log(1000.0) * unit(rng));  // log-uniform on [1, 1000]
    const double xi = 3.0 - 2.0 * unit(rng);                   // (1, 3]
    const double M = 2.0 * unit(rng);
    const double u = M * (2.0 * unit(rng) - 1.0);
    const FilterInit init{4.0 * unit(rng) - 2.0, 4.0 * unit(rng) - 2.0};

    const auto [bound1, bound2] = lemma1_bounds(b, xi, init, M);
    const double slow = b * (xi - std::sqrt(xi * xi - 1.0));
    const double t_end = std::clamp(5.0 / slow, 0.01, 30.0);

    s.max_step = t_end / 50.0;
    s.output_interval = t_end / 200.0;
    OdeIntegrator solver(s);
    const OdeRhs rhs = [b, xi, u](double, std::span<const double> y, std::span<double> d) {
      d[0] = y[1];
      d[1] = -2.0 * xi * b * y[1] - b * b * y[0] + b * b * u;
    };

    auto inspect = [&](double t, std::span<const double> y) {
      ++samples;
      const double ex = std::max(std::abs(y[0]) - bound1, std::abs(y[1]) - bound2);
      if (ex > res.bounds.measured) {
        res.bounds.measured = ex;
        res.bounds.worst_time = t;
      }
      const auto [o1, o2] = filter_exponential_oracle(b, xi, init, u, t);
      const double diff = std::max(std::abs(y[0] - o1), std::abs(y[1] - o2));
      if (diff > res.agreement.measured) {
        res.agreement.measured = diff;
        res.agreement.worst_time = t;
        res.agreement.details = "worst draw b = " + fmt(b) + ", xi = " + fmt(xi) + ", t = " + fmt(t);
      }
    };

    std::vector<double> y{init.eta1, init.eta2};
    double t = 0.0;
    inspect(t, y);
    std::vector<double> stops;
    for (int j = 1; j <= 200; ++j) stops.push_back(t_end * j / 200.0);
    solver.advance(rhs, t, y, t_end, stops, inspect);
  }
  res.bounds.pass = res.bounds.measured <= tol;
  res.bounds.details = std::to_string(draws) + " draws, " + std::to_string(samples) +
                       " samples; measured is the largest excess over the bounds";
  res.agreement.pass = res.agreement.measured <= tol;
  return res;
}

std::pair<CheckReport, CheckReport> run_qp_equivalence_suite(std::uint64_t seed, std::size_t draws,
                                                             double match_tol, double residual_tol) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  CheckReport match;
  match.name = "qp_projection_match";
  match.threshold = match_tol;
  CheckReport resid;
  resid.name = "active_constraint_residual";
  resid.threshold = residual_tol;

  const KnownPhysicalParams phys;
  std::size_t active = 0;
  for (std::size_t k = 0; k < draws; ++k) {
    SafetyParams sp;
    sp.enabled = true;
    sp.I_max = uniform(0.5, 2.0);
    sp.c = std::exp(uniform(0.0, std::log(1e9)));

    PlantState x;
    const double radius = sp.I_max * uniform(0.0, 1.0);
    const double angle = uniform(0.0, 2.0 * 3.141592653589793);
    x.inv.i_t = {radius * std::cos(angle), radius * std::sin(angle)};
    x.inv.v_c = {uniform(-1.5, 1.5), uniform(-1.5, 1.5)};
    x.inv.i_g = {uniform(-1.5, 1.5), uniform(-1.5, 1.5)};
    const double omega = uniform(0.9, 1.1);
    const Vec2 vn{uniform(-3.0, 3.0), uniform(-3.0, 3.0)};

    // Half-space written out directly from dh/dt + c h >= 0.
    const Vec2 i = x.inv.i_t;
    const double k2 = 2.0 * phys.omega_b / phys.L_f;
    const double h = sp.I_max * sp.I_max - i.norm2();
    const HalfSpace hs{k2 * i, k2 * phys.R_f * i.norm2() + k2 * i.dot(x.inv.v_c) + sp.c * h};

    const Vec2 expect = qp_projection_oracle(vn, hs);
    const SafetyDecision d = apply_filter(x, omega, vn, sp, phys);
    const Vec2 diff = d.v_t_applied - expect;
    const double scale = std::max({1.0, std::abs(expect.a), std::abs(expect.b)});
    const double err = std::max(std::abs(diff.a), std::abs(diff.b)) / scale;
    if (err > match.measured) match.measured = err;

    if (d.active) {
      ++active;
      const double e = eta(x, omega, d.v_t_applied, sp, phys);
      const double terms = std::abs(k2 * phys.R_f * i.norm2()) + std::abs(k2 * i.dot(x.inv.v_c)) +
                           std::abs(k2 * i.dot(d.v_t_applied)) + std::abs(sp.c * h);
      const double rel = std::abs(e) / std::max(terms, 1.0);
      if (rel > resid.measured) resid.measured = rel;
    }
  }
  match.pass = match.measured <= match_tol;
  match.details = std::to_string(draws) + " states; error relative to max(1, |v|)";
  resid.pass = resid.measured <= residual_tol;
  resid.details = std::to_string(active) + " active cases; |eta| relative to the sum of |terms|";
  return {match, resid};
}

}  // namespace gfm
