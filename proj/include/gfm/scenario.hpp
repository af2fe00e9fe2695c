#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gfm/controllers.hpp"
#include "gfm/frames.hpp"
#include "gfm/integrator.hpp"
#include "gfm/plant.hpp"
#include "gfm/power_droop.hpp"
#include "gfm/safety.hpp"

namespace gfm {

enum class ControllerKind { dads, pi };

std::string_view to_string(ControllerKind kind);

/// Grid voltage override on the closed interval [t_start, t_end], DQ frame.
struct GridSegment {
  double t_start = 0.0;
  double t_end = 0.0;
  Vec2 v_DQ;
};

/// Piecewise-constant grid voltage in the global DQ frame: `nominal`
/// everywhere except on the listed segments (later segments win on overlap).
/// The default is a bolted three-phase fault on [2, 4] s.
struct GridProfile {
  Vec2 nominal{1.0, 0.0};
  std::vector<GridSegment> segments{{2.0, 4.0, {0.0, 0.0}}};

  /// Sorted, de-duplicated segment endpoints strictly inside (0, t_end).
  std::vector<double> breakpoints(double t_end) const;
  /// Value on the open interval between two consecutive breakpoints.
  Vec2 value_between(double t_left, double t_right) const;
};

/// Grid voltage at time t (closed-interval segment semantics).
Vec2 grid_voltage(double t, const GridProfile& profile);

/// Initial conditions. Without explicit filter states, the power filters
/// start at the equilibrium of the initial instantaneous powers.
struct InitialConditions {
  Vec2 v_c{1.0, 0.0};
  Vec2 i_t;
  Vec2 i_g;
  double theta = 0.0;
  AdaptiveState z;
  PiState pi;
  std::optional<PowerFilterState> filter;
};

struct ScenarioConfig {
  PhysicalParams phys;
  DroopParams droop;
  ControllerKind controller = ControllerKind::dads;
  DadsParams dads;
  PiParams pi;
  SafetyParams safety;
  GridProfile grid;
  double t_end = 6.0;
  InitialConditions initial;
  IntegratorSettings integrator;

  /// Throws ConfigError on any violated constraint.
  void validate() const;
};

/// Strict parse: unknown keys, wrong types and failed validation all throw
/// ConfigError. Missing keys keep their defaults.
ScenarioConfig scenario_from_json(const nlohmann::json& doc);
/// Complete document with every key present; round-trips through
/// scenario_from_json.
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Sets a scalar config key given as a dotted path ("dads.epsilon",
/// "safety.I_max", ...). "dads.Gamma" and "dads.mu" set both axes.
/// Throws ConfigError for keys that do not name a numeric scalar.
void set_scalar(nlohmann::json& doc, std::string_view key, double value);
/// Keys accepted by set_scalar, in document order.
std::vector<std::string> scalar_keys();

}  // namespace gfm
