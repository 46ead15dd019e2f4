#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lawn/conic.hpp"
#include "lawn/control.hpp"
#include "lawn/radio.hpp"

namespace lawn::beamform {

using radio::CMat;
using radio::CVec;
using radio::Vec3;

// control summary of one formation, produced by control::derive_lqr_terms
struct FormationControl {
  control::LqrDerived lqr;
  int n1 = 50;
};

struct BfScenario {
  radio::ArrayGeometry geo;
  radio::ChannelConst cc;
  std::vector<std::vector<Vec3>> leaders;  // [formation][slot] positions
  int n_slots = 8;
  std::vector<Vec3> sample_points;
  double gamma_th = 1e-3;  // sensing threshold [W], linear
  double p_max = 1.0;      // per-slot power budget [W]
  std::vector<FormationControl> control;

  int n_formations() const { return static_cast<int>(leaders.size()); }
  void validate() const;
};

// covariance-form design at one slot
struct CovSet {
  std::vector<CMat> w;  // per-formation transmit covariance
  CMat c_d;
};

// channels indexed [formation][slot]
using ChannelGrid = std::vector<std::vector<CVec>>;
ChannelGrid build_channels(const BfScenario& scn);

// first-order data for the SCA bound of one (formation, slot) pair:
// the derivative matrix of the interference log-term and its anchor
// value (bits)
struct Linearization {
  CMat d_matrix;
  double r_hat_lo = 0.0;
};

Linearization sca_linearize(int k, int slot, const ChannelGrid& channels,
                            const std::vector<CovSet>& current,
                            double noise_power);

// exact rate of the covariance-form design at one slot (bits, log2)
double rate_of_covs(int k, int slot, const ChannelGrid& channels,
                    const CovSet& covs, double noise_power);

// accumulated tangent cuts for the concave log terms; each cut stores
// the anchor value of the (noise-normalized) signal-plus-interference
// total
struct CutSet {
  std::vector<std::vector<std::vector<double>>> anchors;  // [k][slot][cut]
  int cap = 50;

  void reset(int n_formations, int n_slots);
  void add(int k, int slot, double v0);  // oldest-first eviction at cap
  int total() const;
};

// index bookkeeping between the conic problem and the beamforming
// variables
struct Layout {
  std::vector<std::vector<int>> w_block;  // [k][slot]
  std::vector<int> cd_block;              // [slot]
  std::vector<std::vector<int>> t_free;   // [k][slot]
  int violation_block = -1;               // 1x1 slack minimized by probes
};

struct BuildResult {
  conic::ConicProblem problem;
  Layout layout;
};

// Convex feasibility subproblem at a given eta: per-slot power,
// accumulated sensing gains, and the rate constraints with every log
// term replaced by its tangent cuts; rank constraints dropped. The
// probe slack (minimized) measures rate-constraint violation.
BuildResult build_feasibility(const BfScenario& scn, double eta,
                              const ChannelGrid& channels,
                              const std::vector<CovSet>& lin_point,
                              const CutSet& cuts);

struct IterationLogRow {
  int outer_iter = 0;
  double eta = 0.0;
  int probe_count = 0;
  int cuts_total = 0;
  double max_violation = 0.0;
};

struct ProbeRecord {
  int outer_iter = 0;
  double eta = 0.0;
  bool feasible = false;
};

struct BeamSolution {
  std::vector<radio::BeamformerSet> slots;  // rank-one form
  std::vector<CovSet> covs;                 // covariance form
  double eta = std::numeric_limits<double>::infinity();
  std::vector<double> avg_rates;     // per formation [bits], (W/N)-scaled
  std::vector<double> sample_gains;  // per sample point, summed over slots
  std::vector<IterationLogRow> iterations;
  std::vector<ProbeRecord> probe_history;  // bisection trace
  bool feasible = true;
  std::string message;
};

struct Rank1Result {
  std::vector<CVec> w_star;
  CMat c_star;
};

// Rank-one reconstruction preserving every leader's quadratic forms of
// the total covariance, the per-slot power, and each tr(H_k W_k).
Rank1Result reconstruct_rank1(const std::vector<CMat>& w_tilde,
                              const CMat& c_tilde,
                              const std::vector<CVec>& channels_at_slot);

// SCA outer loop: linearize, minimize eta by bisection over conic
// probes with cut refinement, rank-one reconstruct, repeat until the
// eta decrement falls below tol.
BeamSolution optimize(const BfScenario& scn, double tol = 1e-4,
                      int max_outer = 30);
BeamSolution optimize(const BfScenario& scn,
                      const std::vector<CovSet>& init, double tol,
                      int max_outer);

BeamSolution baseline_identical_power(const BfScenario& scn);
BeamSolution baseline_random(const BfScenario& scn, uint64_t seed);
BeamSolution baseline_water_filling(const BfScenario& scn);

struct FeasibilityReport {
  std::vector<double> power_margin;    // per slot: p_max - tr(total)
  std::vector<double> sensing_margin;  // per sample point
  std::vector<double> rate_margin;     // per formation [bits]
  double min_margin = 0.0;

  bool ok(double tol) const { return min_margin >= -tol; }
};

FeasibilityReport check_feasibility(const BeamSolution& sol,
                                    const BfScenario& scn);

// required average rate (bits) for a target max-cost eta of formation k
double rate_floor(const BfScenario& scn, int k, double eta);

}  // namespace lawn::beamform
