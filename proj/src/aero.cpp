#include "lawn/aero.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace lawn::aero {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Gaussian-decayed span factor shared by all field expressions.
double span_factor(double y, const AeroParams& p) {
  const double half = 0.5 * p.beta;
  const double s = std::sqrt(half * half + y * y);
  const double d = y - p.mu;
  return (1.0 + y / s) * std::exp(-d * d / (2.0 * p.sigma0));
}

// d/dy of span_factor.
double span_factor_dy(double y, const AeroParams& p) {
  const double half = 0.5 * p.beta;
  const double s = std::sqrt(half * half + y * y);
  const double d = y - p.mu;
  const double e = std::exp(-d * d / (2.0 * p.sigma0));
  return (half * half / (s * s * s)) * e -
         (1.0 + y / s) * e * d / p.sigma0;
}

// Sum of the four log terms of the wingspan-averaged pair field.
double log_sum(double x, const AeroParams& p) {
  const double a = 0.5 * p.alpha;
  const double b = 0.5 * p.beta;
  const double rc2 = p.r_c * p.r_c;
  const auto sq = [](double v) { return v * v; };
  const double n1 = sq(x - a + b) + rc2;
  const double d1 = sq(x - a - b) + rc2;
  const double n2 = sq(x + a + b) + rc2;
  const double d2 = sq(x + a - b) + rc2;
  return std::log(n1 / d1) - std::log(n2 / d2);
}

double log_sum_dx(double x, const AeroParams& p) {
  const double a = 0.5 * p.alpha;
  const double b = 0.5 * p.beta;
  const double rc2 = p.r_c * p.r_c;
  const auto sq = [](double v) { return v * v; };
  return 2.0 * (x - a + b) / (sq(x - a + b) + rc2) -
         2.0 * (x - a - b) / (sq(x - a - b) + rc2) -
         2.0 * (x + a + b) / (sq(x + a + b) + rc2) +
         2.0 * (x + a - b) / (sq(x + a - b) + rc2);
}

double golden_max_1d(const std::function<double(double)>& f, double lo,
                     double hi) {
  const double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 80 && (b - a) > 1e-12; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

void AeroParams::validate() const {
  if (!(beta > 0.0)) throw std::invalid_argument("aero: beta must be > 0");
  if (!(r_c > 0.0)) throw std::invalid_argument("aero: r_c must be > 0");
  if (!(sigma0 > 0.0)) throw std::invalid_argument("aero: sigma0 must be > 0");
  if (!(alpha > 0.0 && alpha < beta))
    throw std::invalid_argument("aero: need 0 < alpha < beta");
  if (!std::isfinite(zeta) || !std::isfinite(mu))
    throw std::invalid_argument("aero: zeta and mu must be finite");
}

void EnergyParams::validate() const {
  if (!(lift >= 0.0)) throw std::invalid_argument("energy: lift must be >= 0");
  if (!(v0 > 0.0)) throw std::invalid_argument("energy: v0 must be > 0");
  if (!(c >= 0.0) || !(s0 >= 0.0))
    throw std::invalid_argument("energy: c and s0 must be >= 0");
}

double induced_velocity(RelOffset off, const AeroParams& p) {
  const double x = off.dx;
  return p.zeta / (2.0 * kPi) * x / (p.r_c * p.r_c + x * x) *
         span_factor(off.dy, p);
}

double vortex_pair_velocity(RelOffset off, const AeroParams& p) {
  const double a = 0.5 * p.alpha;
  const double rc2 = p.r_c * p.r_c;
  const double xl = off.dx - a;
  const double xr = off.dx + a;
  const double radial = xl / (rc2 + xl * xl) - xr / (rc2 + xr * xr);
  return p.zeta / (2.0 * kPi) * radial * span_factor(off.dy, p);
}

double avg_upwash(RelOffset off, const AeroParams& p) {
  return p.zeta / (4.0 * kPi * p.beta) * log_sum(off.dx, p) *
         span_factor(off.dy, p);
}

Vec2 avg_upwash_gradient(RelOffset off, const AeroParams& p) {
  const double c = p.zeta / (4.0 * kPi * p.beta);
  return Vec2(c * log_sum_dx(off.dx, p) * span_factor(off.dy, p),
              c * log_sum(off.dx, p) * span_factor_dy(off.dy, p));
}

double total_upwash(std::size_t me, const std::vector<Vec2>& positions,
                    const AeroParams& p) {
  double sum = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (i == me) continue;
    sum += avg_upwash({positions[me].x() - positions[i].x(),
                       positions[me].y() - positions[i].y()},
                      p);
  }
  return sum;
}

double total_upwash_at(RelOffset off, const std::vector<RelOffset>& others,
                       const AeroParams& p) {
  double sum = 0.0;
  for (const auto& o : others)
    sum += avg_upwash({off.dx - o.dx, off.dy - o.dy}, p);
  return sum;
}

Vec2 upwash_gradient(RelOffset off, int lambda,
                     const std::vector<RelOffset>& others,
                     const AeroParams& p) {
  Vec2 g = Vec2::Zero();
  for (const auto& o : others)
    g += avg_upwash_gradient({off.dx - o.dx, off.dy - o.dy}, p);
  g.x() *= static_cast<double>(lambda);
  return g;
}

PowerSaving power_saving(double u_bar, const EnergyParams& e) {
  return {e.lift * u_bar / e.v0, e.lift * u_bar};
}

double parasite_drag(const EnergyParams& e) {
  return 0.5 * e.c * e.s0 * e.v0 * e.v0;
}

Optimum argmax_avg_upwash(const AeroParams& p, Vec2 lo, Vec2 hi,
                          double grid_step, bool refine) {
  const int nx = std::max(2, static_cast<int>((hi.x() - lo.x()) / grid_step) + 1);
  const int ny = std::max(2, static_cast<int>((hi.y() - lo.y()) / grid_step) + 1);
  const GridSpec g{lo.x(), hi.x(), nx, lo.y(), hi.y(), ny};
  const std::vector<double> field = avg_upwash_map(p, g);

  int best = 0;
  for (int i = 1; i < g.cells(); ++i)
    if (field[i] > field[best]) best = i;
  double bx = g.x(best % nx);
  double by = g.y(best / nx);
  double bv = field[best];

  if (refine) {
    const double hx = (hi.x() - lo.x()) / (nx - 1);
    const double hy = (hi.y() - lo.y()) / (ny - 1);
    // Coordinate-wise golden sections inside the bracketing cells; two
    // rounds suffice since the surface is smooth near the maximum.
    for (int round = 0; round < 2; ++round) {
      bx = golden_max_1d(
          [&](double x) { return avg_upwash({x, by}, p); },
          std::max(lo.x(), bx - hx), std::min(hi.x(), bx + hx));
      by = golden_max_1d(
          [&](double y) { return avg_upwash({bx, y}, p); },
          std::max(lo.y(), by - hy), std::min(hi.y(), by + hy));
    }
    bv = avg_upwash({bx, by}, p);
  }
  return {Vec2(bx, by), bv};
}

std::vector<double> avg_upwash_map(const AeroParams& p, const GridSpec& g) {
  std::vector<double> out(static_cast<std::size_t>(g.cells()));
#pragma omp parallel for schedule(static)
  for (int j = 0; j < g.ny; ++j) {
    const double y = g.y(j);
    for (int i = 0; i < g.nx; ++i)
      out[static_cast<std::size_t>(j) * g.nx + i] = avg_upwash({g.x(i), y}, p);
  }
  return out;
}

std::vector<double> avg_upwash_map_serial(const AeroParams& p,
                                          const GridSpec& g) {
  std::vector<double> out(static_cast<std::size_t>(g.cells()));
  for (int j = 0; j < g.ny; ++j) {
    const double y = g.y(j);
    for (int i = 0; i < g.nx; ++i)
      out[static_cast<std::size_t>(j) * g.nx + i] = avg_upwash({g.x(i), y}, p);
  }
  return out;
}

namespace {

double field_from_all(double x, double y, const std::vector<Vec2>& positions,
                      const AeroParams& p) {
  double sum = 0.0;
  for (const auto& q : positions)
    sum += avg_upwash({x - q.x(), y - q.y()}, p);
  return sum;
}

}  // namespace

std::vector<double> total_upwash_map(const std::vector<Vec2>& positions,
                                     const AeroParams& p, const GridSpec& g) {
  std::vector<double> out(static_cast<std::size_t>(g.cells()));
#pragma omp parallel for schedule(static)
  for (int j = 0; j < g.ny; ++j) {
    const double y = g.y(j);
    for (int i = 0; i < g.nx; ++i)
      out[static_cast<std::size_t>(j) * g.nx + i] =
          field_from_all(g.x(i), y, positions, p);
  }
  return out;
}

std::vector<double> total_upwash_map_serial(const std::vector<Vec2>& positions,
                                            const AeroParams& p,
                                            const GridSpec& g) {
  std::vector<double> out(static_cast<std::size_t>(g.cells()));
  for (int j = 0; j < g.ny; ++j) {
    const double y = g.y(j);
    for (int i = 0; i < g.nx; ++i)
      out[static_cast<std::size_t>(j) * g.nx + i] =
          field_from_all(g.x(i), y, positions, p);
  }
  return out;
}

std::vector<double> total_upwash_all(const std::vector<Vec2>& positions,
                                     const AeroParams& p) {
  const int m = static_cast<int>(positions.size());
  std::vector<double> out(positions.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i)
    out[i] = total_upwash(static_cast<std::size_t>(i), positions, p);
  return out;
}

std::vector<double> total_upwash_all_serial(const std::vector<Vec2>& positions,
                                            const AeroParams& p) {
  std::vector<double> out(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i)
    out[i] = total_upwash(i, positions, p);
  return out;
}

}  // namespace lawn::aero
