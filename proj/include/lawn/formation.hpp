#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "lawn/aero.hpp"
#include "lawn/rng.hpp"

namespace lawn::formation {

using Vec2 = Eigen::Vector2d;
using aero::AeroParams;
using aero::RelOffset;

// One agent of a formation. `est` is the current offset estimate in the
// side-folded frame (lateral component always stored positive side);
// `u_max` is the largest total upwash experienced so far and never
// decreases across slots.
struct UavState {
  int id = 0;
  Vec2 pos = Vec2::Zero();
  int lambda = 1;  // side preference: +1 left of reference, -1 right
  Vec2 est = Vec2::Zero();
  double u_max = 0.0;
};

struct FormationConfig {
  int m = 9;                    // UAV count
  double kappa = 1.0 / 3.0;     // weighted-distance factor, (0,1)
  double theta_mix = 0.5;       // motion blend, (0,1)
  double step = 2e-3;           // LMS step size
  std::vector<double> comb_weights = {1.0 / 3.0, 1.0 / 3.0,
                                      1.0 / 3.0};  // self, 1st, 2nd neighbor
  double v0 = 5.0;              // cruise speed [m/s]
  double dt = 0.05;             // slot duration [s]
  double sigma_x2 = 2e-4;       // motion noise variance, x [m^2]
  double sigma_y2 = 2e-4;       // motion noise variance, y [m^2]
  double sigma_obs2 = 1e-4;     // observation noise variance [(m/s)^2]
  Vec2 center = Vec2::Zero();   // initialization center
  std::vector<int> lambdas;     // per-UAV override; empty = random ±1

  void validate() const;
};

struct SlotSnapshot {
  std::vector<UavState> states;  // state at the start of the slot, with
                                 // u_max already updated by the slot's
                                 // observation
  int leader = 0;
  std::vector<int> ref;          // reference index per UAV, -1 for leader
  std::vector<double> u_tot;     // true total upwash per UAV
};

struct FormationTrace {
  std::vector<SlotSnapshot> slots;
  std::vector<double> mean_follower_upwash;  // per slot [m/s]; multiply by
                                             // lift for the power saving

  int n_slots() const { return static_cast<int>(slots.size()); }
};

struct Observation {
  double d = 0.0;   // scalar observation
  Vec2 f = Vec2::Zero();  // regression vector
  double u_tot = 0.0;     // true total upwash (noise-free)
};

// Index of the leader: globally smallest y, ties by smallest id.
int select_leader(const std::vector<UavState>& states);

// Weighted-distance reference among UAVs strictly ahead; empty for the
// leader. Ties by smallest id.
std::optional<int> find_reference(int me, const std::vector<UavState>& states,
                                  double kappa);

// Self plus the two nearest others by Euclidean distance (ties by id);
// degenerates to the full set when fewer than three UAVs exist.
std::vector<int> neighbor_set(int me, const std::vector<UavState>& states);

// Upwash observation of a non-leader at time slot `slot`; updates the
// UAV's u_max from the true (noise-free) total upwash. Throws if called
// on the leader.
Observation observe_upwash(int me, std::vector<UavState>& states,
                           const AeroParams& p, const FormationConfig& cfg,
                           const CounterRng& rng, int slot);

// LMS adapt step; the leader keeps its estimate unchanged.
Vec2 adapt(const UavState& me, bool is_leader, const Observation& obs,
           const FormationConfig& cfg);

// Convex combination of neighbor estimates. Throws if the weights do
// not match the set or deviate from sum 1 by more than 1e-9.
Vec2 combine(const std::vector<Vec2>& psis, const std::vector<double>& weights);

// One motion update. Followers blend toward the commanded offset from
// their reference and advect; the leader only advects. Throws if a
// follower has no reference position.
Vec2 step_motion(const UavState& me, bool is_leader,
                 const std::optional<Vec2>& ref_pos, const Vec2& dz_star,
                 const FormationConfig& cfg, const CounterRng& rng, int slot);

// Random initial layout: x within ±m*beta/4 and y within [0, m*beta/2]
// of the configured center, resampling any pair closer than 0.2*beta.
// Estimates start one wingspan behind and beside; u_max starts at zero.
std::vector<UavState> init_formation(const FormationConfig& cfg,
                                     const AeroParams& p, uint64_t seed);

// Full per-slot loop: leader election, reference selection, observe,
// adapt, combine, move. Deterministic given (cfg, init, seed); the
// parallel flag only controls threading, not results. Throws on a
// non-finite position with the offending slot and UAV in the message.
FormationTrace run_formation(const FormationConfig& cfg, const AeroParams& p,
                             std::vector<UavState> init, int n_slots,
                             uint64_t seed, bool parallel = true);

// Convergence diagnostic: mean distance of follower offsets (relative
// to their references) from the nearest single-generator optimum
// (±x*, y*).
double v_shape_score(const std::vector<UavState>& states, const AeroParams& p,
                     double kappa);
double v_shape_score(const std::vector<UavState>& states,
                     const Vec2& optimum_offset, double kappa);

}  // namespace lawn::formation
