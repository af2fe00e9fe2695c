#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace gfm {

enum class IntegratorMethod {
  /// Linearly implicit, L-stable 4(3) Rosenbrock pair. Suited to the stiff
  /// closed loop (large adaptive damping, c ~ 1e9 barrier slope).
  rosenbrock4,
  /// Explicit Dormand-Prince 5(4) pair; for non-stiff problems.
  dormand_prince45,
};

std::string_view to_string(IntegratorMethod m);
/// Throws ConfigError for unknown names.
IntegratorMethod integrator_method_from_string(std::string_view name);

struct IntegratorSettings {
  IntegratorMethod method = IntegratorMethod::rosenbrock4;
  double rel_tol = 1e-7;
  double abs_tol = 1e-9;
  double max_step = 1e-4;  // s
  double min_step = 1e-12;  // s; error-controlled steps below this abort
  double initial_step = 1e-6;
  double output_interval = 1e-3;  // uniform record grid, s
  std::size_t max_steps = 100'000'000;

  void validate() const;
};

struct IntegratorStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evaluations = 0;
  std::size_t jacobian_evaluations = 0;
  double smallest_step = 0.0;
  double largest_step = 0.0;
};

/// dy/dt = f(t, y). Implementations must write every component of `dydt`.
using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;
/// Called after every accepted step with the new (t, y).
using StepObserver = std::function<void(double t, std::span<const double> y)>;

/// Adaptive single-step ODE integrator with a PI step-size controller, a hard
/// step cap and a mixed abs/rel error test:
///   max_i |err_i| / (abs_tol + rel_tol * max(|y_i|, |y_new_i|)) <= 1.
///
/// The step size carries over between successive `advance` calls, so a
/// piecewise-defined problem can be integrated piece by piece.
class OdeIntegrator {
 public:
  explicit OdeIntegrator(IntegratorSettings settings);
  ~OdeIntegrator();
  OdeIntegrator(OdeIntegrator&&) noexcept;
  OdeIntegrator& operator=(OdeIntegrator&&) noexcept;

  /// Integrates from `t` to `t_end`, updating both in place. No step crosses
  /// a time listed in `stops` (sorted ascending); each stop inside
  /// (t, t_end] is hit exactly and reported to the observer.
  /// Throws IntegrationError on step-size underflow, non-finite state, or
  /// when max_steps is exhausted.
  void advance(const OdeRhs& rhs, double& t, std::vector<double>& y, double t_end,
               std::span<const double> stops = {}, const StepObserver& observer = {});

  const IntegratorStats& stats() const;
  const IntegratorSettings& settings() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gfm
