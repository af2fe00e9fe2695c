#pragma once

#include <cstddef>
#include <exception>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "gfm/plant.hpp"
#include "gfm/safety.hpp"
#include "gfm/scenario.hpp"
#include "gfm/simulation.hpp"

namespace gfm {

/// Serial execution is the reference; the OpenMP path must give identical
/// results element by element.
enum class Execution { serial, parallel };

namespace detail {
void rethrow_first(const std::vector<std::exception_ptr>& errors);
}

/// out[i] = fn(in[i]). Items are independent; exceptions are collected per item
/// and the first one (by index) is rethrown after the loop.
template <class In, class Fn>
auto map_batch(std::span<const In> in, Fn&& fn, Execution exec)
    -> std::vector<std::invoke_result_t<Fn&, const In&>> {
  using Out = std::invoke_result_t<Fn&, const In&>;
  std::vector<Out> out(in.size());
  std::vector<std::exception_ptr> errors(in.size());
  const auto n = static_cast<std::ptrdiff_t>(in.size());
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        out[i] = fn(in[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        out[i] = fn(in[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  }
  detail::rethrow_first(errors);
  return out;
}

struct FilterQuery {
  PlantState x;
  double omega = 1.0;
  Vec2 v_t_nominal;
};

std::vector<SafetyDecision> filter_batch(std::span<const FilterQuery> queries,
                                         const SafetyParams& params,
                                         const KnownPhysicalParams& phys, Execution exec);

enum class RunStatus { ok, config_error, integration_error };

struct RunOutcome {
  RunStatus status = RunStatus::ok;
  std::string message;
  SimulationResult result;
};

/// One independent simulation per config. Failures are reported per run,
/// never thrown.
std::vector<RunOutcome> run_batch(std::span<const ScenarioConfig> configs, Execution exec);

/// Number of worker threads the parallel path will use.
int worker_threads();

}  // namespace gfm
