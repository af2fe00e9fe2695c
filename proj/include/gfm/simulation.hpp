#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "gfm/controllers.hpp"
#include "gfm/integrator.hpp"
#include "gfm/plant.hpp"
#include "gfm/safety.hpp"
#include "gfm/scenario.hpp"

namespace gfm {

// Layout of the packed state vector.
inline constexpr std::size_t kPlantDim = 10;
inline constexpr std::size_t kThetaIndex = 10;
inline constexpr std::size_t kControllerOffset = 11;
inline constexpr std::size_t kMaxStateDim = 15;

/// 13 for DADS (z_d, z_q), 15 for PI (four integrators).
std::size_t state_dimension(ControllerKind kind);

/// Plant + frame angle + the selected controller's internal states.
struct AugmentedState {
  PlantState plant;
  double theta = 0.0;
  AdaptiveState adaptive;  // used when the controller is DADS
  PiState pi;              // used when the controller is PI
};

void pack(const AugmentedState& s, ControllerKind kind, std::span<double> out);
AugmentedState unpack(std::span<const double> y, ControllerKind kind);

/// Every intermediate signal of one closed-loop evaluation.
struct ClosedLoopSignals {
  Vec2 v_g_local;
  InstantaneousPower power;
  double q_sat = 0.0;
  double omega = 0.0;
  Vec2 v_ref;
  ControlOutput control;
  SafetyDecision safety;
};

ClosedLoopSignals evaluate_signals(const AugmentedState& s, Vec2 v_g_DQ, const ScenarioConfig& cfg);

/// Closed-loop derivative with the grid voltage given in the DQ frame.
/// Throws IntegrationError (with a state dump) on a non-finite derivative and
/// GainBlowUp from the DADS law.
void closed_loop_rhs(std::span<const double> y, Vec2 v_g_DQ, const ScenarioConfig& cfg,
                     std::span<double> dydt);

/// Same, with the grid voltage taken from the profile at time t.
std::vector<double> closed_loop_rhs(std::span<const double> y, double t, const ScenarioConfig& cfg);

AugmentedState initial_state(const ScenarioConfig& cfg);

struct TrajectoryRecord {
  double t = 0.0;
  AugmentedState state;
  double p = 0.0;
  double q = 0.0;
  double omega = 0.0;
  Vec2 v_ref;
  double W_d = 0.0;
  double W_q = 0.0;
  double eta = 0.0;
  double h = 0.0;
  bool filter_active = false;
  Vec2 v_t;
  Vec2 v_t_nominal;
  Vec2 v_g_local;
  bool on_output_grid = false;
};

TrajectoryRecord make_record(double t, const AugmentedState& s, Vec2 v_g_DQ, const ScenarioConfig& cfg);

struct SimulationResult {
  ControllerKind controller = ControllerKind::dads;
  std::vector<TrajectoryRecord> records;
  SafetyEventLog events;
  IntegratorStats stats;
};

/// Integrates the scenario from t = 0 to t_end. Records every accepted step
/// (the uniform output grid and grid-profile breakpoints are always step
/// boundaries). Validates cfg first.
SimulationResult integrate(const ScenarioConfig& cfg);

}  // namespace gfm
