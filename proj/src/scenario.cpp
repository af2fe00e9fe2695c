#include "gfm/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include "gfm/errors.hpp"

namespace gfm {

using nlohmann::json;

std::string_view to_string(ControllerKind kind) {
  return kind == ControllerKind::dads ? "dads" : "pi";
}

std::vector<double> GridProfile::breakpoints(double t_end) const {
  std::vector<double> out;
  for (const GridSegment& s : segments) {
    for (double t : {s.t_start, s.t_end}) {
      if (t > 0.0 && t < t_end) out.push_back(t);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Vec2 GridProfile::value_between(double t_left, double t_right) const {
  const double mid = 0.5 * (t_left + t_right);
  Vec2 v = nominal;
  for (const GridSegment& s : segments) {
    if (s.t_start < mid && mid < s.t_end) v = s.v_DQ;
  }
  return v;
}

Vec2 grid_voltage(double t, const GridProfile& profile) {
  Vec2 v = profile.nominal;
  for (const GridSegment& s : profile.segments) {
    if (s.t_start <= t && t <= s.t_end) v = s.v_DQ;
  }
  return v;
}

void ScenarioConfig::validate() const {
  phys.validate();
  droop.validate();
  dads.validate();
  pi.validate();
  safety.validate();
  integrator.validate();

  if (!(std::isfinite(t_end) && t_end > 0.0)) throw ConfigError("t_end must be finite and > 0");
  if (!grid.nominal.finite()) throw ConfigError("grid.nominal must be finite");
  for (const GridSegment& s : grid.segments) {
    if (!(std::isfinite(s.t_start) && std::isfinite(s.t_end) && s.t_start <= s.t_end)) {
      throw ConfigError("grid segment needs finite t_start <= t_end");
    }
    if (s.t_start < 0.0 || s.t_end > t_end) {
      throw ConfigError("grid segment [" + std::to_string(s.t_start) + ", " +
                        std::to_string(s.t_end) + "] lies outside [0, t_end]");
    }
    if (!s.v_DQ.finite()) throw ConfigError("grid segment voltage must be finite");
  }

  // Without the current limiter the boundedness guarantees need a finite
  // reactive-power saturation.
  if (!safety.enabled && !std::isfinite(droop.Q_bar)) {
    throw ConfigError("droop.Q_bar must be finite when the safety filter is disabled");
  }

  const InitialConditions& ic = initial;
  if (!(ic.v_c.finite() && ic.i_t.finite() && ic.i_g.finite() && std::isfinite(ic.theta) &&
        std::isfinite(ic.z.z_d) && std::isfinite(ic.z.z_q) && std::isfinite(ic.pi.gamma_d) &&
        std::isfinite(ic.pi.gamma_q) && std::isfinite(ic.pi.beta_d) && std::isfinite(ic.pi.beta_q))) {
    throw ConfigError("initial conditions must be finite");
  }
  if (ic.filter) {
    const PowerFilterState& f = *ic.filter;
    if (!(std::isfinite(f.q1) && std::isfinite(f.q2) && std::isfinite(f.p1) && std::isfinite(f.p2))) {
      throw ConfigError("initial.filter must be finite");
    }
  }
  if (safety.enabled && ic.i_t.norm() > safety.I_max) {
    throw ConfigError("initial terminal current lies outside the safe set |i_t| <= I_max");
  }
}

namespace {

// Pulls known keys out of one JSON object and rejects whatever is left.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  void number(const char* key, double& out, bool allow_inf = false) {
    const json* v = take(key);
    if (!v) return;
    out = to_number(*v, where(key), allow_inf);
  }

  void count(const char* key, std::size_t& out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_number_integer() && !v->is_number_unsigned()) {
      throw ConfigError(where(key) + " must be a non-negative integer");
    }
    const auto n = v->get<long long>();
    if (n < 0) throw ConfigError(where(key) + " must be a non-negative integer");
    out = static_cast<std::size_t>(n);
  }

  void boolean(const char* key, bool& out) {
    const json* v = take(key);
    if (!v) return;
    if (!v->is_boolean()) throw ConfigError(where(key) + " must be true or false");
    out = v->get<bool>();
  }

  void vec2(const char* key, Vec2& out) {
    const json* v = take(key);
    if (!v) return;
    out = to_vec2(*v, where(key));
  }

  const json* take(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    return &*it;
  }

  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key \"" + where(it.key()) + "\"");
    }
  }

  static double to_number(const json& v, const std::string& where, bool allow_inf) {
    if (v.is_number()) return v.get<double>();
    if (allow_inf && v.is_string()) {
      const std::string s = v.get<std::string>();
      if (s == "inf" || s == "+inf" || s == "infinity") return kUnlimited;
    }
    throw ConfigError(where + (allow_inf ? " must be a number or \"inf\"" : " must be a number"));
  }

  static Vec2 to_vec2(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ConfigError(where + " must be a two-element numeric array");
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json inf_or_number(double v) { return std::isinf(v) ? json("inf") : json(v); }

json vec2_json(Vec2 v) { return json::array({v.a, v.b}); }

}  // namespace

ScenarioConfig scenario_from_json(const json& doc) {
  ScenarioConfig cfg;
  ObjectReader root(doc, "");
  root.number("t_end", cfg.t_end);

  if (const json* c = root.take("controller")) {
    if (!c->is_string()) throw ConfigError("controller must be \"dads\" or \"pi\"");
    const std::string name = c->get<std::string>();
    if (name == "dads") {
      cfg.controller = ControllerKind::dads;
    } else if (name == "pi") {
      cfg.controller = ControllerKind::pi;
    } else {
      throw ConfigError("controller must be \"dads\" or \"pi\", got \"" + name + "\"");
    }
  }

  if (const json* j = root.take("physical")) {
    ObjectReader r(*j, "physical");
    PhysicalParams& p = cfg.phys;
    r.number("omega_b", p.omega_b);
    r.number("C_f", p.C_f);
    r.number("L_f", p.L_f);
    r.number("R_f", p.R_f);
    r.number("L", p.L);
    r.number("R", p.R);
    r.finish();
  }

  if (const json* j = root.take("droop")) {
    ObjectReader r(*j, "droop");
    DroopParams& d = cfg.droop;
    r.number("V0", d.V0);
    r.number("omega0", d.omega0);
    r.number("P0", d.P0);
    r.number("Q0", d.Q0);
    r.number("K_P", d.K_P);
    r.number("K_Q", d.K_Q);
    r.number("xi_p", d.xi_p);
    r.number("xi_q", d.xi_q);
    r.number("omega_pc", d.omega_pc);
    r.number("omega_qc", d.omega_qc);
    r.number("P_bar", d.P_bar, true);
    r.number("Q_bar", d.Q_bar, true);
    r.finish();
  }

  if (const json* j = root.take("dads")) {
    ObjectReader r(*j, "dads");
    DadsParams& k = cfg.dads;
    r.number("K_VC", k.K_VC);
    r.number("K_CC", k.K_CC);
    r.number("mu_d", k.mu_d);
    r.number("mu_q", k.mu_q);
    r.number("Gamma_d", k.Gamma_d);
    r.number("Gamma_q", k.Gamma_q);
    r.number("epsilon", k.epsilon);
    r.finish();
  }

  if (const json* j = root.take("pi")) {
    ObjectReader r(*j, "pi");
    PiParams& g = cfg.pi;
    r.number("Kp_cc", g.Kp_cc);
    r.number("Ki_cc", g.Ki_cc);
    r.number("Kf_cc", g.Kf_cc);
    r.number("Kp_vc", g.Kp_vc);
    r.number("Ki_vc", g.Ki_vc);
    r.number("Kf_vc", g.Kf_vc);
    r.finish();
  }

  if (const json* j = root.take("safety")) {
    ObjectReader r(*j, "safety");
    r.boolean("enabled", cfg.safety.enabled);
    r.number("I_max", cfg.safety.I_max);
    r.number("c", cfg.safety.c);
    r.finish();
  }

  if (const json* j = root.take("grid")) {
    ObjectReader r(*j, "grid");
    r.vec2("nominal", cfg.grid.nominal);
    if (const json* segs = r.take("segments")) {
      if (!segs->is_array()) throw ConfigError("grid.segments must be an array");
      cfg.grid.segments.clear();
      for (std::size_t i = 0; i < segs->size(); ++i) {
        ObjectReader sr((*segs)[i], "grid.segments[" + std::to_string(i) + "]");
        GridSegment s;
        sr.number("t_start", s.t_start);
        sr.number("t_end", s.t_end);
        sr.vec2("v_DQ", s.v_DQ);
        sr.finish();
        cfg.grid.segments.push_back(s);
      }
    }
    r.finish();
  }

  if (const json* j = root.take("initial")) {
    ObjectReader r(*j, "initial");
    InitialConditions& ic = cfg.initial;
    r.vec2("v_c", ic.v_c);
    r.vec2("i_t", ic.i_t);
    r.vec2("i_g", ic.i_g);
    r.number("theta", ic.theta);
    r.number("z_d", ic.z.z_d);
    r.number("z_q", ic.z.z_q);
    r.number("gamma_d", ic.pi.gamma_d);
    r.number("gamma_q", ic.pi.gamma_q);
    r.number("beta_d", ic.pi.beta_d);
    r.number("beta_q", ic.pi.beta_q);
    if (const json* f = r.take("filter")) {
      if (f->is_null() || (f->is_string() && f->get<std::string>() == "equilibrium")) {
        ic.filter.reset();
      } else {
        ObjectReader fr(*f, "initial.filter");
        PowerFilterState fs;
        fr.number("q1", fs.q1);
        fr.number("q2", fs.q2);
        fr.number("p1", fs.p1);
        fr.number("p2", fs.p2);
        fr.finish();
        ic.filter = fs;
      }
    }
    r.finish();
  }

  if (const json* j = root.take("integrator")) {
    ObjectReader r(*j, "integrator");
    IntegratorSettings& s = cfg.integrator;
    if (const json* m = r.take("method")) {
      if (!m->is_string()) throw ConfigError("integrator.method must be a string");
      s.method = integrator_method_from_string(m->get<std::string>());
    }
    r.number("rel_tol", s.rel_tol);
    r.number("abs_tol", s.abs_tol);
    r.number("max_step", s.max_step);
    r.number("min_step", s.min_step);
    r.number("initial_step", s.initial_step);
    r.number("output_interval", s.output_interval);
    r.count("max_steps", s.max_steps);
    r.finish();
  }

  root.finish();
  cfg.validate();
  return cfg;
}

json scenario_to_json(const ScenarioConfig& cfg) {
  json j;
  j["t_end"] = cfg.t_end;
  j["controller"] = std::string(to_string(cfg.controller));

  const PhysicalParams& p = cfg.phys;
  j["physical"] = {{"omega_b", p.omega_b}, {"C_f", p.C_f}, {"L_f", p.L_f},
                   {"R_f", p.R_f},         {"L", p.L},     {"R", p.R}};

  const DroopParams& d = cfg.droop;
  j["droop"] = {{"V0", d.V0},
                {"omega0", d.omega0},
                {"P0", d.P0},
                {"Q0", d.Q0},
                {"K_P", d.K_P},
                {"K_Q", d.K_Q},
                {"xi_p", d.xi_p},
                {"xi_q", d.xi_q},
                {"omega_pc", d.omega_pc},
                {"omega_qc", d.omega_qc},
                {"P_bar", inf_or_number(d.P_bar)},
                {"Q_bar", inf_or_number(d.Q_bar)}};

  const DadsParams& k = cfg.dads;
  j["dads"] = {{"K_VC", k.K_VC},       {"K_CC", k.K_CC},       {"mu_d", k.mu_d},
               {"mu_q", k.mu_q},       {"Gamma_d", k.Gamma_d}, {"Gamma_q", k.Gamma_q},
               {"epsilon", k.epsilon}};

  const PiParams& g = cfg.pi;
  j["pi"] = {{"Kp_cc", g.Kp_cc}, {"Ki_cc", g.Ki_cc}, {"Kf_cc", g.Kf_cc},
             {"Kp_vc", g.Kp_vc}, {"Ki_vc", g.Ki_vc}, {"Kf_vc", g.Kf_vc}};

  j["safety"] = {{"enabled", cfg.safety.enabled}, {"I_max", cfg.safety.I_max}, {"c", cfg.safety.c}};

  json segs = json::array();
  for (const GridSegment& s : cfg.grid.segments) {
    segs.push_back({{"t_start", s.t_start}, {"t_end", s.t_end}, {"v_DQ", vec2_json(s.v_DQ)}});
  }
  j["grid"] = {{"nominal", vec2_json(cfg.grid.nominal)}, {"segments", segs}};

  const InitialConditions& ic = cfg.initial;
  json init = {{"v_c", vec2_json(ic.v_c)},  {"i_t", vec2_json(ic.i_t)},
               {"i_g", vec2_json(ic.i_g)},  {"theta", ic.theta},
               {"z_d", ic.z.z_d},           {"z_q", ic.z.z_q},
               {"gamma_d", ic.pi.gamma_d},  {"gamma_q", ic.pi.gamma_q},
               {"beta_d", ic.pi.beta_d},    {"beta_q", ic.pi.beta_q}};
  if (ic.filter) {
    init["filter"] = {{"q1", ic.filter->q1}, {"q2", ic.filter->q2}, {"p1", ic.filter->p1},
                      {"p2", ic.filter->p2}};
  } else {
    init["filter"] = "equilibrium";
  }
  j["initial"] = init;

  const IntegratorSettings& s = cfg.integrator;
  j["integrator"] = {{"method", std::string(to_string(s.method))},
                     {"rel_tol", s.rel_tol},
                     {"abs_tol", s.abs_tol},
                     {"max_step", s.max_step},
                     {"min_step", s.min_step},
                     {"initial_step", s.initial_step},
                     {"output_interval", s.output_interval},
                     {"max_steps", s.max_steps}};
  return j;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return scenario_from_json(doc);
}

namespace {

void collect_scalars(const json& j, const std::string& prefix, std::vector<std::string>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      collect_scalars(*it, key, out);
    } else if (it->is_number() || (it->is_string() && it->get<std::string>() == "inf")) {
      out.push_back(key);
    }
  }
}

void set_path(json& doc, const std::string& key, double value) {
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    json& child = (*node)[part];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) throw ConfigError("config key \"" + key + "\" crosses a non-object");
    node = &child;
    start = dot + 1;
  }
}

}  // namespace

std::vector<std::string> scalar_keys() {
  std::vector<std::string> keys;
  collect_scalars(scenario_to_json(ScenarioConfig{}), "", keys);
  keys.push_back("dads.Gamma");
  keys.push_back("dads.mu");
  return keys;
}

void set_scalar(json& doc, std::string_view key_view, double value) {
  const std::string key(key_view);
  if (key == "dads.Gamma") {
    set_path(doc, "dads.Gamma_d", value);
    set_path(doc, "dads.Gamma_q", value);
    return;
  }
  if (key == "dads.mu") {
    set_path(doc, "dads.mu_d", value);
    set_path(doc, "dads.mu_q", value);
    return;
  }
  const std::vector<std::string> keys = scalar_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
    throw ConfigError("\"" + key + "\" is not a scalar config key");
  }
  set_path(doc, key, value);
}

}  // namespace gfm
