#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>

namespace lawn::control {

using Mat = Eigen::MatrixXd;

// Linear plant x+ = A x + B u + v with observation y = G x + w and
// quadratic stage costs (Q, R), terminal cost Q1.
struct ControlModel {
  Mat a, b, g, q, q1, r, sigma_v, sigma_w;

  int n1() const { return static_cast<int>(a.rows()); }
  void validate() const;

  // the reference setting: A = G = B = Q = Q1 = I, R = 0,
  // Sigma_v = 0.01 I, Sigma_w = 0.001 I
  static ControlModel identity_model(int n, double sigma_v = 0.01,
                                     double sigma_w = 0.001,
                                     double a_scale = 1.0,
                                     double r_scale = 0.0);
};

struct DareDivergence : std::runtime_error {
  DareDivergence(const std::string& what, double res)
      : std::runtime_error(what), residual(res) {}
  double residual;
};

// Steady-state quantities derived from the model: control DARE solution
// S, filtering DARE solution P, Kalman gain K, filtered covariance
// Sigma, control sensitivity M, innovation-gap N, intrinsic entropy
// rate h (bits), and the rate-unconstrained cost floor l_min.
struct LqrDerived {
  Mat s, p, kgain, sigma, m, nmat;
  double h = 0.0;
  double l_min = 0.0;
  double det_nm_root = 0.0;  // det(N M)^(1/n1), evaluated in log space
};

struct FilterSolution {
  Mat p, kgain, sigma;
};

// Fixed-point iteration S <- Q + A^T (S - M(S)) A from S0 = Q.
Mat solve_dare_s(const ControlModel& model, double tol = 1e-10,
                 int max_iter = 100000);

// Filtering DARE from P0 = Sigma_v, with the steady Kalman gain and the
// filtered covariance.
FilterSolution solve_dare_p(const ControlModel& model, double tol = 1e-10,
                            int max_iter = 100000);

LqrDerived derive_lqr_terms(const ControlModel& model, double tol = 1e-10);

// Minimum average rate (bits per slot) sustaining average cost l_bar.
double min_rate_for_cost(double l_bar, const LqrDerived& d, int n1);

// Optimal cost at a given average rate (bits); inverse of the above.
double optimal_cost_for_rate(double avg_rate, const LqrDerived& d, int n1);

// Monte-Carlo LQG loop with a rate-limited estimate, modeled as
// additive Gaussian distortion calibrated so the predicted excess cost
// matches the rate-cost tradeoff. Validation utility, not a design
// procedure. rate_budget = infinity disables the distortion.
double simulate_closed_loop(const ControlModel& model, double rate_budget,
                            int n_slots, int n_trials, uint64_t seed,
                            bool parallel = true);

}  // namespace lawn::control
