#pragma once

#include <Eigen/Core>
#include <vector>

namespace lawn::aero {

using Vec2 = Eigen::Vector2d;

// Horseshoe-vortex wake of a fixed-wing UAV flying along the -y axis.
// A wing of span beta sheds two counter-rotating trailing vortices at
// lateral offsets ±alpha/2; their induced velocity follows the
// Burnham-Hallock core profile with a Gaussian decay along y.
// Coordinates are relative offsets (trailing minus generator); "behind"
// means larger y. Positive velocity is upward (upwash).
struct AeroParams {
  double beta = 1.0;    // wingspan [m]
  double alpha = 0.25 * 3.14159265358979323846;  // vortex separation [m]
  double zeta = 2.0;    // vortex circulation [m^2/s]
  double r_c = 0.1;     // vortex core radius [m]
  double mu = 0.7;      // Gaussian decay mean along flight axis [m]
  double sigma0 = 4.0;  // Gaussian decay spread [m^2]

  void validate() const;  // throws std::invalid_argument
};

// Relative horizontal offset, trailing minus reference [m].
struct RelOffset {
  double dx = 0.0;
  double dy = 0.0;
};

struct EnergyParams {
  double lift = 10.0;  // lift force F_l [N]
  double v0 = 5.0;     // airspeed [m/s]
  double c = 0.01;     // lumped parasite-drag constant
  double s0 = 0.5;     // reference area [m^2]

  void validate() const;
};

// Single-vortex induced velocity profile at a relative offset.
double induced_velocity(RelOffset off, const AeroParams& p);

// Superposition of the two trailing vortices at ±alpha/2. This is the
// integrand whose wingspan average gives avg_upwash; induced_velocity
// above is the single-vortex profile the pair is built from.
double vortex_pair_velocity(RelOffset off, const AeroParams& p);

// Wingspan-averaged induced velocity of one generator (closed form,
// four log terms).
double avg_upwash(RelOffset off, const AeroParams& p);

// Analytic gradient of avg_upwash with respect to (dx, dy).
Vec2 avg_upwash_gradient(RelOffset off, const AeroParams& p);

// Total upwash observed by UAV `me`: sum of avg_upwash contributions
// from every other UAV in `positions`.
double total_upwash(std::size_t me, const std::vector<Vec2>& positions,
                    const AeroParams& p);

// Total upwash as a function of own offset in a common frame, where
// `others` are the remaining UAVs' offsets in that same frame.
double total_upwash_at(RelOffset off, const std::vector<RelOffset>& others,
                       const AeroParams& p);

// Regression vector f = [lambda * d(u_tot)/d(dx), d(u_tot)/d(dy)]:
// analytic gradient of the summed field, with the side preference
// lambda ∈ {+1,-1} folded into the lateral component.
Vec2 upwash_gradient(RelOffset off, int lambda,
                     const std::vector<RelOffset>& others,
                     const AeroParams& p);

struct PowerSaving {
  double drag_reduction;   // [N]
  double power_reduction;  // [W]
};

// Drag reduction F_l*u/V0 and power reduction F_l*u for average upwash
// u at the wing; negative u (downwash) yields negative savings.
PowerSaving power_saving(double u_bar, const EnergyParams& e);

// Parasite drag 0.5*c*s0*V0^2.
double parasite_drag(const EnergyParams& e);

struct Optimum {
  Vec2 pos;
  double value;
};

// Location and value of the avg_upwash maximum inside [lo, hi],
// found by grid scan plus coordinate-wise golden-section refinement.
Optimum argmax_avg_upwash(const AeroParams& p, Vec2 lo = Vec2(0.0, 0.0),
                          Vec2 hi = Vec2(2.0, 3.0), double grid_step = 1e-3,
                          bool refine = true);

struct GridSpec {
  double x0, x1;
  int nx;
  double y0, y1;
  int ny;

  int cells() const { return nx * ny; }
  double x(int i) const { return nx > 1 ? x0 + (x1 - x0) * i / (nx - 1) : x0; }
  double y(int j) const { return ny > 1 ? y0 + (y1 - y0) * j / (ny - 1) : y0; }
};

// Field maps, row-major over (iy, ix). The plain versions run the grid
// in parallel; the _serial variants are the reference implementations
// (identical results, every cell is independent).
std::vector<double> avg_upwash_map(const AeroParams& p, const GridSpec& g);
std::vector<double> avg_upwash_map_serial(const AeroParams& p,
                                          const GridSpec& g);
std::vector<double> total_upwash_map(const std::vector<Vec2>& positions,
                                     const AeroParams& p, const GridSpec& g);
std::vector<double> total_upwash_map_serial(const std::vector<Vec2>& positions,
                                            const AeroParams& p,
                                            const GridSpec& g);

// Per-UAV total upwash for a whole layout (parallel / serial reference).
std::vector<double> total_upwash_all(const std::vector<Vec2>& positions,
                                     const AeroParams& p);
std::vector<double> total_upwash_all_serial(const std::vector<Vec2>& positions,
                                            const AeroParams& p);

}  // namespace lawn::aero
