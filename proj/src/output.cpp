#include "gfm/output.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "gfm/analysis.hpp"

namespace gfm {

using nlohmann::json;

std::vector<std::string> trajectory_columns(ControllerKind kind) {
  std::vector<std::string> cols{"t",    "v_c_d", "v_c_q", "i_t_d", "i_t_q", "i_g_d",
                                "i_g_q", "q1",    "q2",    "p1",    "p2",    "theta"};
  if (kind == ControllerKind::dads) {
    cols.insert(cols.end(), {"z_d", "z_q"});
  } else {
    cols.insert(cols.end(), {"gamma_d", "gamma_q", "beta_d", "beta_q"});
  }
  cols.insert(cols.end(), {"p", "q", "omega", "v_ref_d", "W_d", "W_q", "eta", "h", "filter_active",
                           "v_t_d", "v_t_q", "v_t_nominal_d", "v_t_nominal_q"});
  return cols;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& os, const SimulationResult& result) {
  const std::vector<std::string> cols = trajectory_columns(result.controller);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';

  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << ',' << buf;
  };
  for (const TrajectoryRecord& r : result.records) {
    std::snprintf(buf, sizeof buf, "%.17g", r.t);
    os << buf;
    const PlantState& x = r.state.plant;
    for (double v : {x.inv.v_c.a, x.inv.v_c.b, x.inv.i_t.a, x.inv.i_t.b, x.inv.i_g.a, x.inv.i_g.b,
                     x.filter.q1, x.filter.q2, x.filter.p1, x.filter.p2, r.state.theta}) {
      put(v);
    }
    if (result.controller == ControllerKind::dads) {
      put(r.state.adaptive.z_d);
      put(r.state.adaptive.z_q);
    } else {
      put(r.state.pi.gamma_d);
      put(r.state.pi.gamma_q);
      put(r.state.pi.beta_d);
      put(r.state.pi.beta_q);
    }
    for (double v : {r.p, r.q, r.omega, r.v_ref.a, r.W_d, r.W_q, r.eta, r.h}) put(v);
    os << ',' << (r.filter_active ? 1 : 0);
    for (double v : {r.v_t.a, r.v_t.b, r.v_t_nominal.a, r.v_t_nominal.b}) put(v);
    os << '\n';
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const SimulationResult& result) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_trajectory_csv(os, result);
  if (!os) throw std::runtime_error("error while writing " + path.string());
}

json run_summary(const SimulationResult& result) {
  json j;
  j["controller"] = std::string(to_string(result.controller));
  j["records"] = result.records.size();
  if (!result.records.empty()) {
    const TrajectoryRecord& r = result.records.back();
    const PlantState& x = r.state.plant;
    json fs = {{"t", r.t},
               {"v_c", {x.inv.v_c.a, x.inv.v_c.b}},
               {"i_t", {x.inv.i_t.a, x.inv.i_t.b}},
               {"i_g", {x.inv.i_g.a, x.inv.i_g.b}},
               {"q1", x.filter.q1},
               {"q2", x.filter.q2},
               {"p1", x.filter.p1},
               {"p2", x.filter.p2},
               {"theta", r.state.theta}};
    if (result.controller == ControllerKind::dads) {
      fs["z_d"] = r.state.adaptive.z_d;
      fs["z_q"] = r.state.adaptive.z_q;
    } else {
      fs["gamma_d"] = r.state.pi.gamma_d;
      fs["gamma_q"] = r.state.pi.gamma_q;
      fs["beta_d"] = r.state.pi.beta_d;
      fs["beta_q"] = r.state.pi.beta_q;
    }
    j["final_state"] = fs;
  }
  const auto [i_max, t_max] = max_terminal_current(result.records);
  j["max_terminal_current"] = {{"value", i_max}, {"t", t_max}};
  j["N_eta"] = result.events.n_eta();
  j["T_eta"] = result.events.t_eta();
  json eps = json::array();
  for (const SafetyEventLog::Episode& e : result.events.episodes()) {
    eps.push_back({{"t_on", e.t_on}, {"t_off", e.t_off ? json(*e.t_off) : json(nullptr)}});
  }
  j["episodes"] = eps;
  const IntegratorStats& s = result.stats;
  j["integrator"] = {{"accepted_steps", s.accepted},
                     {"rejected_steps", s.rejected},
                     {"rhs_evaluations", s.rhs_evaluations},
                     {"jacobian_evaluations", s.jacobian_evaluations},
                     {"smallest_step", s.smallest_step},
                     {"largest_step", s.largest_step}};
  return j;
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << doc.dump(2) << '\n';
  if (!os) throw std::runtime_error("error while writing " + path.string());
}

}  // namespace gfm
