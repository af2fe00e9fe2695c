#include "gfm/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "gfm/analysis.hpp"
#include "gfm/batch.hpp"
#include "gfm/errors.hpp"
#include "gfm/output.hpp"
#include "gfm/scenario.hpp"
#include "gfm/simulation.hpp"

namespace gfm::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kSettleWindow = 0.5;  // s, tail of each constant-grid segment
constexpr std::size_t kFilterDraws = 100;
constexpr std::size_t kQpDraws = 1000;

json load_document(const fs::path& config) {
  if (config.empty()) return scenario_to_json(ScenarioConfig{});
  std::ifstream in(config);
  if (!in) throw ConfigError("cannot open config file " + config.string());
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + config.string() + ": " + e.what());
  }
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("cannot create output directory " + dir.string());
  }
}

void write_run(const fs::path& dir, const ScenarioConfig& cfg, const SimulationResult& res) {
  prepare_dir(dir);
  write_trajectory_csv(dir / "trajectory.csv", res);
  write_json(dir / "summary.json", run_summary(res));
  write_json(dir / "scenario.json", scenario_to_json(cfg));
}

double sup_abs(std::span<const TrajectoryRecord> traj, bool d_axis) {
  double m = 0.0;
  for (const TrajectoryRecord& r : traj) m = std::max(m, std::abs(d_axis ? r.v_g_local.a : r.v_g_local.b));
  return m;
}

DecayEnvelope envelope_for(const ScenarioConfig& cfg, std::span<const TrajectoryRecord> traj) {
  DecayEnvelope env;
  env.k = cfg.dads.decay_rate();
  env.R = cfg.phys.R;
  env.L = cfg.phys.L;
  env.mu_d = cfg.dads.mu_d;
  env.mu_q = cfg.dads.mu_q;
  env.v_g_bound_d = sup_abs(traj, true);
  env.v_g_bound_q = sup_abs(traj, false);
  return env;
}

std::string verdict(bool pass) { return pass ? "PASS" : "FAIL"; }

}  // namespace

int cmd_run(const fs::path& config, const fs::path& out_dir, std::ostream& log) {
  ScenarioConfig cfg;
  try {
    cfg = scenario_from_json(load_document(config));
    prepare_dir(out_dir);
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << '\n';
    return kConfigError;
  }

  SimulationResult res;
  try {
    res = integrate(cfg);
  } catch (const IntegrationError& e) {
    log << "integration aborted: " << e.what() << '\n';
    return kIntegrationAbort;
  }

  write_run(out_dir, cfg, res);
  const auto [i_max, t_max] = max_terminal_current(res.records);
  log << to_string(cfg.controller) << (cfg.safety.enabled ? " (safety filter on)" : "") << ": "
      << res.records.size() << " records, max |i_t| = " << i_max << " at t = " << t_max
      << ", N_eta = " << res.events.n_eta() << ", T_eta = " << res.events.t_eta() << '\n';
  return kSuccess;
}

int cmd_verify(const fs::path& config, const fs::path& out_dir, std::uint64_t seed, std::ostream& log) {
  ScenarioConfig base;
  try {
    base = scenario_from_json(load_document(config));
    prepare_dir(out_dir);
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << '\n';
    return kConfigError;
  }

  struct Case {
    std::string name;
    ControllerKind controller;
    bool safe;
  };
  const std::vector<Case> cases{{"dads", ControllerKind::dads, false},
                                {"pi", ControllerKind::pi, false},
                                {"safe_dads", ControllerKind::dads, true},
                                {"safe_pi", ControllerKind::pi, true}};
  std::vector<ScenarioConfig> configs;
  for (const Case& c : cases) {
    ScenarioConfig cfg = base;
    cfg.controller = c.controller;
    cfg.safety.enabled = c.safe;
    // Without the filter the state may leave |i_t| <= I_max; validation of
    // the initial state only applies when the filter is on.
    try {
      cfg.validate();
    } catch (const ConfigError& e) {
      log << "configuration error (" << c.name << "): " << e.what() << '\n';
      return kConfigError;
    }
    configs.push_back(cfg);
  }

  const std::vector<RunOutcome> outcomes = run_batch(configs, Execution::parallel);

  json report;
  report["seed"] = seed;
  report["runs"] = json::array();
  bool all_pass = true;
  int status = kSuccess;

  for (std::size_t k = 0; k < cases.size(); ++k) {
    const Case& c = cases[k];
    const ScenarioConfig& cfg = configs[k];
    const RunOutcome& out = outcomes[k];
    json run{{"name", c.name}};
    if (out.status != RunStatus::ok) {
      run["status"] = out.status == RunStatus::config_error ? "config_error" : "integration_error";
      run["message"] = out.message;
      log << c.name << ": " << out.message << '\n';
      status = out.status == RunStatus::config_error ? kConfigError : kIntegrationAbort;
      report["runs"].push_back(run);
      continue;
    }
    run["status"] = "ok";
    run["summary"] = run_summary(out.result);

    const std::span<const TrajectoryRecord> traj = out.result.records;
    std::vector<CheckReport> gated;
    std::vector<CheckReport> diagnostics;

    if (c.controller == ControllerKind::dads && !c.safe) {
      const auto windows = segment_tail_windows(cfg.grid, cfg.t_end, kSettleWindow);
      gated.push_back(check_residual_band(traj, cfg.dads.epsilon, windows));
      gated.push_back(check_decay_envelope(traj, envelope_for(cfg, traj)));
      gated.push_back(check_gain_monotone_bounded(traj));
      gated.push_back(check_deadzone_freeze(traj, cfg.dads.epsilon));
    }
    if (c.safe) {
      gated.push_back(check_current_invariance(traj, cfg.safety.I_max, cfg.safety.c));
      if (c.controller == ControllerKind::dads) gated.push_back(check_gain_monotone_bounded(traj));
    } else {
      // Expected to fail: the unfiltered controllers are not current limited.
      CheckReport inv = check_current_invariance(traj, cfg.safety.I_max, cfg.safety.c);
      inv.details += inv.pass ? "; limit respected without the filter"
                              : "; violation expected without the filter";
      diagnostics.push_back(inv);
    }

    run["checks"] = json::array();
    for (const CheckReport& r : gated) {
      all_pass = all_pass && r.pass;
      run["checks"].push_back(to_json(r));
      log << verdict(r.pass) << "  " << c.name << '/' << r.name << ": measured " << r.measured
          << ", threshold " << r.threshold << '\n';
    }
    run["diagnostics"] = json::array();
    for (const CheckReport& r : diagnostics) {
      run["diagnostics"].push_back(to_json(r));
      log << "info  " << c.name << '/' << r.name << ": " << (r.pass ? "within" : "exceeds")
          << " limit, max |i_t| = " << r.measured << '\n';
    }
    report["runs"].push_back(run);
  }

  const OracleSuiteResult filt = run_filter_oracle_suite(seed, kFilterDraws);
  const auto [qp_match, qp_resid] = run_qp_equivalence_suite(seed, kQpDraws);
  report["suites"] = json::array();
  for (const CheckReport& r : {filt.bounds, filt.agreement, qp_match, qp_resid}) {
    all_pass = all_pass && r.pass;
    report["suites"].push_back(to_json(r));
    log << verdict(r.pass) << "  suite/" << r.name << ": measured " << r.measured << ", threshold "
        << r.threshold << '\n';
  }

  report["pass"] = all_pass && status == kSuccess;
  write_json(out_dir / "report.json", report);
  if (status != kSuccess) return status;
  return all_pass ? kSuccess : kCheckFailure;
}

int cmd_sweep(const fs::path& config, const std::string& param, const std::vector<double>& values,
              const fs::path& out_dir, std::ostream& log) {
  std::vector<ScenarioConfig> configs;
  try {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    const json doc = load_document(config);
    for (double v : values) {
      json d = doc;
      set_scalar(d, param, v);
      configs.push_back(scenario_from_json(d));
    }
    prepare_dir(out_dir);
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << '\n';
    return kConfigError;
  }

  const std::vector<RunOutcome> outcomes = run_batch(configs, Execution::parallel);

  json table = json::array();
  std::ofstream csv(out_dir / "sweep.csv");
  if (!csv) {
    log << "cannot write " << (out_dir / "sweep.csv").string() << '\n';
    return kConfigError;
  }
  csv << "value,status,settle_time,residual,max_i_t,final_z_d,final_z_q,N_eta,T_eta,directory\n";

  int status = kSuccess;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const ScenarioConfig& cfg = configs[k];
    const RunOutcome& out = outcomes[k];
    char name[32];
    std::snprintf(name, sizeof name, "run_%03zu", k);
    json row{{"value", values[k]}, {"directory", name}};

    if (out.status != RunStatus::ok) {
      row["status"] = out.status == RunStatus::config_error ? "config_error" : "integration_error";
      row["message"] = out.message;
      log << param << " = " << values[k] << ": " << out.message << '\n';
      status = kIntegrationAbort;
      csv << format_double(values[k]) << ',' << row["status"].get<std::string>() << ",,,,,,,," << name
          << '\n';
      table.push_back(row);
      continue;
    }

    const SimulationResult& res = out.result;
    write_run(out_dir / name, cfg, res);

    const auto windows = segment_tail_windows(cfg.grid, cfg.t_end, kSettleWindow);
    const auto segments = segment_settled_windows(cfg.grid, cfg.t_end, 0.0);
    const double band = residual_bound(cfg.dads.epsilon) * 1.05;
    const double settle = settle_time(res.records, band, segments.front().t0, segments.front().t1);
    const double residual = check_residual_band(res.records, cfg.dads.epsilon, windows).measured;
    const auto [i_max, t_max] = max_terminal_current(res.records);
    const AdaptiveState z = res.records.back().state.adaptive;
    const bool dads = cfg.controller == ControllerKind::dads;

    row["status"] = "ok";
    row["settle_time"] = settle;
    row["residual"] = residual;
    row["max_i_t"] = i_max;
    row["final_z_d"] = dads ? json(z.z_d) : json(nullptr);
    row["final_z_q"] = dads ? json(z.z_q) : json(nullptr);
    row["N_eta"] = res.events.n_eta();
    row["T_eta"] = res.events.t_eta();
    table.push_back(row);

    csv << format_double(values[k]) << ",ok," << format_double(settle) << ',' << format_double(residual)
        << ',' << format_double(i_max) << ',' << (dads ? format_double(z.z_d) : "") << ','
        << (dads ? format_double(z.z_q) : "") << ',' << res.events.n_eta() << ','
        << format_double(res.events.t_eta()) << ',' << name << '\n';
    log << param << " = " << values[k] << ": settle " << settle << " s, residual " << residual
        << ", max |i_t| " << i_max << '\n';
  }

  write_json(out_dir / "sweep.json", {{"parameter", param}, {"runs", table}});
  return status;
}

}  // namespace gfm::cli
