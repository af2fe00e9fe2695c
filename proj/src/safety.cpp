#include "gfm/safety.hpp"

#include <cmath>
#include <stdexcept>

#include "gfm/errors.hpp"

namespace gfm {

namespace {

// Below this |i_t|^2 the constraint normal is treated as zero.
constexpr double kMinCurrentNorm2 = 1e-30;

}  // namespace

void SafetyParams::validate() const {
  if (!(std::isfinite(I_max) && I_max > 0.0)) throw ConfigError("safety.I_max must be > 0");
  if (!(std::isfinite(c) && c > 0.0)) throw ConfigError("safety.c must be > 0");
}

double eta(const PlantState& x, double omega, Vec2 v_t_nominal, const SafetyParams& params,
           const KnownPhysicalParams& phys) {
  const Vec2 i = x.inv.i_t;
  const double wb = phys.omega_b;
  const double k = 2.0 * wb / phys.L_f;

  // A(x) i_t; its skew part contributes nothing to i_t^T A i_t.
  const double damp = -phys.R_f * wb / phys.L_f;
  const Vec2 Ai{damp * i.a + wb * omega * i.b, -wb * omega * i.a + damp * i.b};

  // Drift terms first: c*h is up to ~1e9 and would swamp them otherwise.
  const double drift = -2.0 * i.dot(Ai) + k * i.dot(x.inv.v_c) - k * i.dot(v_t_nominal);
  return drift + params.c * barrier(i, params.I_max);
}

SafetyDecision apply_filter(const PlantState& x, double omega, Vec2 v_t_nominal,
                            const SafetyParams& params, const KnownPhysicalParams& phys) {
  SafetyDecision d;
  d.h = barrier(x.inv.i_t, params.I_max);
  d.eta = eta(x, omega, v_t_nominal, params, phys);
  d.v_t_applied = v_t_nominal;

  const double n2 = x.inv.i_t.norm2();
  if (!params.enabled || d.eta >= 0.0 || n2 <= kMinCurrentNorm2) return d;

  const double scale = phys.L_f / (2.0 * phys.omega_b) * d.eta / n2;
  d.v_t_applied = v_t_nominal + scale * x.inv.i_t;
  d.active = true;
  return d;
}

void SafetyEventLog::check_time(double t) {
  if (last_t_ && t < *last_t_) {
    throw std::invalid_argument("SafetyEventLog: sample times must be non-decreasing");
  }
}

void SafetyEventLog::record_active(double t, bool active) {
  check_time(t);
  if (active && !on_) {
    episodes_.push_back({t, std::nullopt});
  } else if (!active && on_) {
    episodes_.back().t_off = t;
  }
  on_ = active;
  last_t_ = t;
  last_eta_ = active ? -1.0 : 1.0;
}

void SafetyEventLog::record(double t, double eta) {
  check_time(t);
  const bool active = eta < 0.0;
  if (active != on_) {
    double t_switch = t;
    if (last_t_ && t > *last_t_) {
      const double span = last_eta_ - eta;
      if (span != 0.0) {
        const double frac = last_eta_ / span;
        if (frac >= 0.0 && frac <= 1.0) t_switch = *last_t_ + frac * (t - *last_t_);
      }
    }
    if (active) {
      episodes_.push_back({t_switch, std::nullopt});
    } else {
      episodes_.back().t_off = t_switch;
    }
  }
  on_ = active;
  last_t_ = t;
  last_eta_ = eta;
}

double SafetyEventLog::t_eta() const {
  double total = 0.0;
  for (const Episode& e : episodes_) {
    if (e.t_off) {
      total += *e.t_off - e.t_on;
    } else if (last_t_) {
      total += *last_t_ - e.t_on;
    }
  }
  return total;
}

}  // namespace gfm
