#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "lawn/aero.hpp"
#include "lawn/beamform.hpp"
#include "lawn/control.hpp"
#include "lawn/formation.hpp"
#include "lawn/radio.hpp"

namespace lawn::harness {

// One experiment scenario: aerodynamics, per-group formation settings,
// radio constants, the shared control model, and the beamforming study
// parameters. Loaded from a strict JSON document (unknown keys are
// rejected, dB fields are converted to linear on load) or from the
// built-in defaults.
struct ScenarioDoc {
  uint64_t seed = 1;

  aero::AeroParams aero_params;
  aero::EnergyParams energy;

  int formation_slots = 200;
  std::vector<formation::FormationConfig> groups;

  radio::ArrayGeometry geo;
  radio::ChannelConst cc;         // linear units
  double altitude = 30.0;         // fixed flight altitude H [m]

  int n1 = 50;
  double sigma_v = 0.01;
  double sigma_w = 0.001;
  double a_scale = 1.0;
  double r_scale = 0.0;

  int bf_slots = 8;
  int n_sample_points = 8;
  double sample_x0 = 15.0, sample_x1 = 85.0;
  double sample_y0 = -140.0, sample_y1 = -130.0;
  double p_max = 1.0;        // [W]
  double gamma_th = 1e-3;    // [W]
  double eta_tol = 1e-4;
  int max_outer = 30;
  std::string leaders_mode = "static";  // "static" or "trace"

  static ScenarioDoc defaults();
  static ScenarioDoc from_json(const nlohmann::json& j);
  static ScenarioDoc load(const std::string& path);

  nlohmann::json to_json() const;  // canonical form (linear units)
  std::string digest() const;     // changes iff the inputs change

  control::ControlModel control_model() const;

  // sensing sample points: deterministic draws in the configured box at
  // the flight altitude
  std::vector<radio::Vec3> sample_points() const;

  // synthetic leader tracks: each group's center advected at cruise
  // speed across the formation time span, subsampled to bf_slots
  std::vector<std::vector<radio::Vec3>> static_leader_tracks() const;

  beamform::BfScenario bf_scenario(
      const std::vector<std::vector<radio::Vec3>>& leaders) const;
  beamform::BfScenario bf_scenario() const;  // static tracks

  void validate() const;
};

}  // namespace lawn::harness
