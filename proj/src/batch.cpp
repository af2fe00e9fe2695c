#include "gfm/batch.hpp"

#include <omp.h>

#include "gfm/errors.hpp"

namespace gfm {

namespace detail {

void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

std::vector<SafetyDecision> filter_batch(std::span<const FilterQuery> queries,
                                         const SafetyParams& params,
                                         const KnownPhysicalParams& phys, Execution exec) {
  std::vector<SafetyDecision> out(queries.size());
  const auto n = static_cast<std::ptrdiff_t>(queries.size());
  auto one = [&](std::ptrdiff_t i) {
    const FilterQuery& q = queries[i];
    out[i] = apply_filter(q.x, q.omega, q.v_t_nominal, params, phys);
  };
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) one(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) one(i);
  }
  return out;
}

std::vector<RunOutcome> run_batch(std::span<const ScenarioConfig> configs, Execution exec) {
  return map_batch(
      configs,
      [](const ScenarioConfig& cfg) {
        RunOutcome out;
        try {
          out.result = integrate(cfg);
        } catch (const ConfigError& e) {
          out.status = RunStatus::config_error;
          out.message = e.what();
        } catch (const IntegrationError& e) {
          out.status = RunStatus::integration_error;
          out.message = e.what();
        }
        return out;
      },
      exec);
}

int worker_threads() { return omp_get_max_threads(); }

}  // namespace gfm
