#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "gfm/batch.hpp"

namespace {

std::vector<gfm::FilterQuery> queries(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<gfm::FilterQuery> q(n);
  for (auto& x : q) {
    const double r = 1.2 * (1.0 - 1e-6 * (1.0 + u(rng)));
    const double a = 3.2 * u(rng);
    x.x.inv = {{u(rng), u(rng)}, {r * std::cos(a), r * std::sin(a)}, {u(rng), u(rng)}};
    x.omega = 1.0 + 0.01 * u(rng);
    x.v_t_nominal = {50 * u(rng), 50 * u(rng)};
  }
  return q;
}

void filter_batch(benchmark::State& state, gfm::Execution exec) {
  const auto q = queries(static_cast<std::size_t>(state.range(0)));
  gfm::SafetyParams sp;
  sp.enabled = true;
  for (auto _ : state) {
    auto out = gfm::filter_batch(q, sp, {}, exec);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = exec == gfm::Execution::parallel ? gfm::worker_threads() : 1;
}

// Independent short simulations, one per parameter value.
void run_batch(benchmark::State& state, gfm::Execution exec) {
  std::vector<gfm::ScenarioConfig> cfgs;
  for (int k = 0; k < state.range(0); ++k) {
    gfm::ScenarioConfig c;
    c.t_end = 0.05;
    c.grid.segments.clear();
    c.dads.Gamma_d = c.dads.Gamma_q = std::pow(10.0, 4 + k % 3);
    cfgs.push_back(c);
  }
  for (auto _ : state) {
    auto out = gfm::run_batch(cfgs, exec);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = exec == gfm::Execution::parallel ? gfm::worker_threads() : 1;
}

}  // namespace

BENCHMARK_CAPTURE(filter_batch, serial, gfm::Execution::serial)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK_CAPTURE(filter_batch, parallel, gfm::Execution::parallel)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK_CAPTURE(run_batch, serial, gfm::Execution::serial)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(run_batch, parallel, gfm::Execution::parallel)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
