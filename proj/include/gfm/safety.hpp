#pragma once

#include <optional>
#include <vector>

#include "gfm/frames.hpp"
#include "gfm/plant.hpp"

namespace gfm {

struct SafetyParams {
  double I_max = 1.2;  // p.u.
  double c = 1e9;      // 1/s, slope of the linear class-K function
  bool enabled = false;

  void validate() const;
};

struct SafetyDecision {
  Vec2 v_t_applied;
  double eta = 0.0;
  double h = 0.0;
  bool active = false;
};

/// I_max^2 - |i_t|^2; nonnegative exactly on the safe current set.
inline double barrier(Vec2 i_t, double I_max) { return I_max * I_max - i_t.norm2(); }

/// Margin of the CBF inequality dh/dt >= -c h when `v_t_nominal` is applied.
double eta(const PlantState& x, double omega, Vec2 v_t_nominal, const SafetyParams& params,
           const KnownPhysicalParams& phys);

/// Closed-form solution of the single-constraint QP: the nominal command if it
/// already satisfies the constraint (or the filter is disabled), otherwise its
/// projection onto the constraint half-space.
SafetyDecision apply_filter(const PlantState& x, double omega, Vec2 v_t_nominal,
                            const SafetyParams& params, const KnownPhysicalParams& phys);

/// ON episodes of the safety filter, built from time-ordered samples.
class SafetyEventLog {
 public:
  struct Episode {
    double t_on = 0.0;
    std::optional<double> t_off;  // empty while the episode is still open
  };

  /// Boolean sample: an episode opens/closes at the sample time itself.
  /// Throws std::invalid_argument if t decreases.
  void record_active(double t, bool active);

  /// Sample of eta(t). Transitions are placed at the linearly interpolated
  /// zero crossing between this sample and the previous one.
  void record(double t, double eta);

  const std::vector<Episode>& episodes() const { return episodes_; }
  /// Number of ON episodes, including a still-open one.
  std::size_t n_eta() const { return episodes_.size(); }
  /// Total ON time; an open episode contributes the time elapsed up to the
  /// latest sample.
  double t_eta() const;
  bool is_on() const { return on_; }

 private:
  void check_time(double t);

  std::vector<Episode> episodes_;
  std::optional<double> last_t_;
  double last_eta_ = 0.0;
  bool on_ = false;
};

}  // namespace gfm
