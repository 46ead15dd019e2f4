#include "lawn/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "lawn/io.hpp"
#include "lawn/rng.hpp"

namespace lawn::harness {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!j.is_object())
    throw std::invalid_argument("config: expected an object at " + where);
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key))
      throw std::invalid_argument("config: unknown key '" + key + "' in " +
                                  where);
  }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ScenarioDoc ScenarioDoc::defaults() {
  ScenarioDoc s;
  formation::FormationConfig g1;
  g1.m = 19;
  g1.center = {20.0, 50.0};
  formation::FormationConfig g2;
  g2.m = 9;
  g2.center = {100.0, 50.0};
  s.groups = {g1, g2};
  return s;
}

ScenarioDoc ScenarioDoc::from_json(const json& j) {
  ScenarioDoc s = defaults();
  reject_unknown(j,
                 {"seed", "aero", "energy", "formation", "radio", "control",
                  "beamform"},
                 "root");
  get_if(j, "seed", s.seed);

  if (j.contains("aero")) {
    const json& a = j.at("aero");
    reject_unknown(a, {"beta", "alpha", "zeta", "r_c", "mu", "sigma0"},
                   "aero");
    get_if(a, "beta", s.aero_params.beta);
    get_if(a, "alpha", s.aero_params.alpha);
    get_if(a, "zeta", s.aero_params.zeta);
    get_if(a, "r_c", s.aero_params.r_c);
    get_if(a, "mu", s.aero_params.mu);
    get_if(a, "sigma0", s.aero_params.sigma0);
  }
  if (j.contains("energy")) {
    const json& e = j.at("energy");
    reject_unknown(e, {"lift", "v0", "c", "s0"}, "energy");
    get_if(e, "lift", s.energy.lift);
    get_if(e, "v0", s.energy.v0);
    get_if(e, "c", s.energy.c);
    get_if(e, "s0", s.energy.s0);
  }
  if (j.contains("formation")) {
    const json& f = j.at("formation");
    reject_unknown(f,
                   {"n_slots", "groups", "kappa", "theta_mix", "step",
                    "comb_weights", "v0", "dt", "sigma_x2", "sigma_y2",
                    "sigma_obs2"},
                   "formation");
    get_if(f, "n_slots", s.formation_slots);
    formation::FormationConfig shared;
    get_if(f, "kappa", shared.kappa);
    get_if(f, "theta_mix", shared.theta_mix);
    get_if(f, "step", shared.step);
    get_if(f, "comb_weights", shared.comb_weights);
    get_if(f, "v0", shared.v0);
    get_if(f, "dt", shared.dt);
    get_if(f, "sigma_x2", shared.sigma_x2);
    get_if(f, "sigma_y2", shared.sigma_y2);
    get_if(f, "sigma_obs2", shared.sigma_obs2);
    if (f.contains("groups")) {
      s.groups.clear();
      for (const auto& gj : f.at("groups")) {
        reject_unknown(gj, {"m", "center", "lambdas"}, "formation.groups[]");
        formation::FormationConfig g = shared;
        g.m = gj.at("m").get<int>();
        const auto c = gj.at("center").get<std::vector<double>>();
        if (c.size() != 2)
          throw std::invalid_argument("config: center must be [x, y]");
        g.center = {c[0], c[1]};
        if (gj.contains("lambdas"))
          g.lambdas = gj.at("lambdas").get<std::vector<int>>();
        s.groups.push_back(std::move(g));
      }
    } else {
      for (auto& g : s.groups) {
        const int m = g.m;
        const auto center = g.center;
        const auto lambdas = g.lambdas;
        g = shared;
        g.m = m;
        g.center = center;
        g.lambdas = lambdas;
      }
    }
  }
  if (j.contains("radio")) {
    const json& r = j.at("radio");
    reject_unknown(r,
                   {"n_antennas", "spacing_over_lambda", "gbs_pos", "rho0_db",
                    "noise_dbm", "bandwidth_hz", "altitude"},
                   "radio");
    get_if(r, "n_antennas", s.geo.n_s);
    get_if(r, "spacing_over_lambda", s.geo.spacing_over_lambda);
    if (r.contains("gbs_pos")) {
      const auto v = r.at("gbs_pos").get<std::vector<double>>();
      if (v.size() != 3)
        throw std::invalid_argument("config: gbs_pos must be [x, y, z]");
      s.geo.gbs_pos = {v[0], v[1], v[2]};
    }
    if (r.contains("rho0_db"))
      s.cc.rho0 = io::db_to_linear(r.at("rho0_db").get<double>());
    if (r.contains("noise_dbm"))
      s.cc.noise_power = io::dbm_to_watt(r.at("noise_dbm").get<double>());
    get_if(r, "bandwidth_hz", s.cc.bandwidth);
    get_if(r, "altitude", s.altitude);
  }
  if (j.contains("control")) {
    const json& c = j.at("control");
    reject_unknown(c, {"n1", "sigma_v", "sigma_w", "a_scale", "r_scale"},
                   "control");
    get_if(c, "n1", s.n1);
    get_if(c, "sigma_v", s.sigma_v);
    get_if(c, "sigma_w", s.sigma_w);
    get_if(c, "a_scale", s.a_scale);
    get_if(c, "r_scale", s.r_scale);
  }
  if (j.contains("beamform")) {
    const json& b = j.at("beamform");
    reject_unknown(b,
                   {"n_slots", "n_sample_points", "sample_area", "p_max_dbm",
                    "gamma_th_dbm", "eta_tol", "max_outer", "leaders"},
                   "beamform");
    get_if(b, "n_slots", s.bf_slots);
    get_if(b, "n_sample_points", s.n_sample_points);
    if (b.contains("sample_area")) {
      const json& a = b.at("sample_area");
      reject_unknown(a, {"x", "y"}, "beamform.sample_area");
      const auto x = a.at("x").get<std::vector<double>>();
      const auto y = a.at("y").get<std::vector<double>>();
      if (x.size() != 2 || y.size() != 2)
        throw std::invalid_argument("config: sample_area needs [lo, hi]");
      s.sample_x0 = x[0];
      s.sample_x1 = x[1];
      s.sample_y0 = y[0];
      s.sample_y1 = y[1];
    }
    if (b.contains("p_max_dbm"))
      s.p_max = io::dbm_to_watt(b.at("p_max_dbm").get<double>());
    if (b.contains("gamma_th_dbm"))
      s.gamma_th = io::dbm_to_watt(b.at("gamma_th_dbm").get<double>());
    get_if(b, "eta_tol", s.eta_tol);
    get_if(b, "max_outer", s.max_outer);
    get_if(b, "leaders", s.leaders_mode);
  }
  s.validate();
  return s;
}

ScenarioDoc ScenarioDoc::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  json j;
  in >> j;
  return from_json(j);
}

nlohmann::json ScenarioDoc::to_json() const {
  json groups_json = json::array();
  for (const auto& g : groups) {
    json gj;
    gj["m"] = g.m;
    gj["center"] = {g.center.x(), g.center.y()};
    if (!g.lambdas.empty()) gj["lambdas"] = g.lambdas;
    groups_json.push_back(gj);
  }
  const auto& g0 = groups.empty() ? formation::FormationConfig{} : groups[0];
  json j;
  j["seed"] = seed;
  j["aero"] = {{"beta", aero_params.beta},   {"alpha", aero_params.alpha},
               {"zeta", aero_params.zeta},   {"r_c", aero_params.r_c},
               {"mu", aero_params.mu},       {"sigma0", aero_params.sigma0}};
  j["energy"] = {{"lift", energy.lift}, {"v0", energy.v0}, {"c", energy.c},
                 {"s0", energy.s0}};
  j["formation"] = {{"n_slots", formation_slots},
                    {"groups", groups_json},
                    {"kappa", g0.kappa},
                    {"theta_mix", g0.theta_mix},
                    {"step", g0.step},
                    {"comb_weights", g0.comb_weights},
                    {"v0", g0.v0},
                    {"dt", g0.dt},
                    {"sigma_x2", g0.sigma_x2},
                    {"sigma_y2", g0.sigma_y2},
                    {"sigma_obs2", g0.sigma_obs2}};
  j["radio"] = {{"n_antennas", geo.n_s},
                {"spacing_over_lambda", geo.spacing_over_lambda},
                {"gbs_pos", {geo.gbs_pos.x(), geo.gbs_pos.y(), geo.gbs_pos.z()}},
                {"rho0_linear", cc.rho0},
                {"noise_watt", cc.noise_power},
                {"bandwidth_hz", cc.bandwidth},
                {"altitude", altitude}};
  j["control"] = {{"n1", n1},
                  {"sigma_v", sigma_v},
                  {"sigma_w", sigma_w},
                  {"a_scale", a_scale},
                  {"r_scale", r_scale}};
  j["beamform"] = {{"n_slots", bf_slots},
                   {"n_sample_points", n_sample_points},
                   {"sample_area",
                    {{"x", {sample_x0, sample_x1}}, {"y", {sample_y0, sample_y1}}}},
                   {"p_max_watt", p_max},
                   {"gamma_th_watt", gamma_th},
                   {"eta_tol", eta_tol},
                   {"max_outer", max_outer},
                   {"leaders", leaders_mode}};
  return j;
}

std::string ScenarioDoc::digest() const {
  return io::hex64(io::fnv1a64(to_json().dump()));
}

control::ControlModel ScenarioDoc::control_model() const {
  return control::ControlModel::identity_model(n1, sigma_v, sigma_w, a_scale,
                                               r_scale);
}

std::vector<radio::Vec3> ScenarioDoc::sample_points() const {
  const CounterRng rng(seed);
  std::vector<radio::Vec3> pts;
  pts.reserve(static_cast<std::size_t>(n_sample_points));
  for (int j = 0; j < n_sample_points; ++j) {
    const double x =
        rng.uniform(sample_x0, sample_x1, 40, static_cast<uint64_t>(j));
    const double y =
        rng.uniform(sample_y0, sample_y1, 41, static_cast<uint64_t>(j));
    pts.emplace_back(x, y, altitude);
  }
  return pts;
}

std::vector<std::vector<radio::Vec3>> ScenarioDoc::static_leader_tracks()
    const {
  std::vector<std::vector<radio::Vec3>> tracks;
  const double span = formation_slots *
                      (groups.empty() ? 0.05 : groups[0].dt);
  for (const auto& g : groups) {
    std::vector<radio::Vec3> t;
    for (int n = 0; n < bf_slots; ++n) {
      const double time = (n + 0.5) * span / bf_slots;
      t.emplace_back(g.center.x(), g.center.y() - g.v0 * time, altitude);
    }
    tracks.push_back(std::move(t));
  }
  return tracks;
}

beamform::BfScenario ScenarioDoc::bf_scenario(
    const std::vector<std::vector<radio::Vec3>>& leaders) const {
  beamform::BfScenario scn;
  scn.geo = geo;
  scn.cc = cc;
  scn.leaders = leaders;
  scn.n_slots = bf_slots;
  scn.sample_points = sample_points();
  scn.gamma_th = gamma_th;
  scn.p_max = p_max;
  const control::LqrDerived d = control::derive_lqr_terms(control_model());
  for (std::size_t k = 0; k < groups.size(); ++k)
    scn.control.push_back({d, n1});
  scn.validate();
  return scn;
}

beamform::BfScenario ScenarioDoc::bf_scenario() const {
  return bf_scenario(static_leader_tracks());
}

void ScenarioDoc::validate() const {
  aero_params.validate();
  energy.validate();
  geo.validate();
  cc.validate();
  if (groups.empty())
    throw std::invalid_argument("config: at least one formation group");
  for (const auto& g : groups) g.validate();
  if (formation_slots < 1 || bf_slots < 1)
    throw std::invalid_argument("config: slot counts must be >= 1");
  if (n_sample_points < 1)
    throw std::invalid_argument("config: n_sample_points must be >= 1");
  if (!(p_max > 0.0) || gamma_th < 0.0)
    throw std::invalid_argument("config: p_max > 0 and gamma_th >= 0");
  if (n1 < 1) throw std::invalid_argument("config: n1 must be >= 1");
  if (leaders_mode != "static" && leaders_mode != "trace")
    throw std::invalid_argument("config: leaders must be 'static' or 'trace'");
}

}  // namespace lawn::harness
