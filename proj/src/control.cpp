#include "lawn/control.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "lawn/rng.hpp"

namespace lawn::control {

namespace {

void require_square(const Mat& m, int n, const char* name) {
  if (m.rows() != n || m.cols() != n)
    throw std::invalid_argument(std::string("control: bad dimensions for ") +
                                name);
}

double min_eig_sym(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void require_psd(const Mat& m, const char* name) {
  if (min_eig_sym(m) < -1e-10)
    throw std::invalid_argument(std::string("control: ") + name +
                                " must be positive semidefinite");
}

double log_abs_det(const Mat& m) {
  Eigen::PartialPivLU<Mat> lu(m);
  const auto& u = lu.matrixLU();
  double sum = 0.0;
  for (int i = 0; i < u.rows(); ++i) {
    const double d = std::abs(u(i, i));
    if (d == 0.0) return -std::numeric_limits<double>::infinity();
    sum += std::log(d);
  }
  return sum;
}

// M(S) = S B (R + B^T S B)^{-1} B^T S
Mat control_gap(const ControlModel& model, const Mat& s) {
  const Mat inner = model.r + model.b.transpose() * s * model.b;
  Eigen::LDLT<Mat> ldlt(inner);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("control: R + B^T S B is not factorizable");
  return s * model.b * ldlt.solve(model.b.transpose() * s);
}

}  // namespace

void ControlModel::validate() const {
  const int n = n1();
  if (n < 1) throw std::invalid_argument("control: empty state matrix");
  require_square(a, n, "A");
  if (b.rows() != n) throw std::invalid_argument("control: bad rows for B");
  if (g.cols() != n) throw std::invalid_argument("control: bad cols for G");
  require_square(q, n, "Q");
  require_square(q1, n, "Q1");
  require_square(sigma_v, n, "Sigma_v");
  const int n2 = static_cast<int>(b.cols());
  const int l = static_cast<int>(g.rows());
  require_square(r, n2, "R");
  require_square(sigma_w, l, "Sigma_w");
  require_psd(q, "Q");
  require_psd(q1, "Q1");
  require_psd(r, "R");
  require_psd(sigma_v, "Sigma_v");
  require_psd(sigma_w, "Sigma_w");
}

ControlModel ControlModel::identity_model(int n, double sigma_v,
                                          double sigma_w, double a_scale,
                                          double r_scale) {
  ControlModel m;
  m.a = a_scale * Mat::Identity(n, n);
  m.b = Mat::Identity(n, n);
  m.g = Mat::Identity(n, n);
  m.q = Mat::Identity(n, n);
  m.q1 = Mat::Identity(n, n);
  m.r = r_scale * Mat::Identity(n, n);
  m.sigma_v = sigma_v * Mat::Identity(n, n);
  m.sigma_w = sigma_w * Mat::Identity(n, n);
  return m;
}

Mat solve_dare_s(const ControlModel& model, double tol, int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve_dare_s: tol must be > 0");
  Mat s = model.q;
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    const Mat next =
        model.q + model.a.transpose() * (s - control_gap(model, s)) * model.a;
    residual = (next - s).norm();
    s = 0.5 * (next + next.transpose()).eval();
    if (residual <= tol) return s;
  }
  throw DareDivergence("solve_dare_s: no convergence within max_iter",
                       residual);
}

FilterSolution solve_dare_p(const ControlModel& model, double tol,
                            int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve_dare_p: tol must be > 0");
  Mat p = model.sigma_v;
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    const Mat innov = model.g * p * model.g.transpose() + model.sigma_w;
    Eigen::LDLT<Mat> ldlt(innov);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("solve_dare_p: singular innovation covariance");
    const Mat k = ldlt.solve(model.g * p.transpose()).transpose();  // P G^T inv
    const Mat next = model.a * p * model.a.transpose() -
                     model.a * k * innov * k.transpose() * model.a.transpose() +
                     model.sigma_v;
    residual = (next - p).norm();
    p = 0.5 * (next + next.transpose()).eval();
    if (residual <= tol) {
      const Mat innov_f = model.g * p * model.g.transpose() + model.sigma_w;
      Eigen::LDLT<Mat> lf(innov_f);
      if (lf.info() != Eigen::Success)
        throw std::runtime_error(
            "solve_dare_p: singular innovation covariance");
      FilterSolution sol;
      sol.p = p;
      sol.kgain = lf.solve(model.g * p.transpose()).transpose();
      sol.sigma = p - sol.kgain * innov_f * sol.kgain.transpose();
      sol.sigma = 0.5 * (sol.sigma + sol.sigma.transpose()).eval();
      return sol;
    }
  }
  throw DareDivergence("solve_dare_p: no convergence within max_iter",
                       residual);
}

LqrDerived derive_lqr_terms(const ControlModel& model, double tol) {
  model.validate();
  LqrDerived d;
  d.s = solve_dare_s(model, tol);
  const FilterSolution f = solve_dare_p(model, tol);
  d.p = f.p;
  d.kgain = f.kgain;
  d.sigma = f.sigma;
  d.m = control_gap(model, d.s);
  d.nmat = model.a * d.sigma * model.a.transpose() - d.sigma + model.sigma_v;

  const double lad = log_abs_det(model.a);
  if (!std::isfinite(lad))
    throw std::domain_error("derive_lqr_terms: A is singular, h undefined");
  d.h = lad / std::log(2.0);

  d.l_min = (model.sigma_v * d.s).trace() +
            (d.sigma * d.s * model.a.transpose() * d.m * model.a).trace();

  const int n1 = model.n1();
  const double log_det_n = log_abs_det(d.nmat);
  const double log_det_m = log_abs_det(d.m);
  d.det_nm_root = (std::isfinite(log_det_n) && std::isfinite(log_det_m))
                      ? std::exp((log_det_n + log_det_m) / n1)
                      : 0.0;
  return d;
}

double min_rate_for_cost(double l_bar, const LqrDerived& d, int n1) {
  if (!(l_bar > d.l_min))
    throw std::domain_error("min_rate_for_cost: cost at or below the floor");
  return d.h + 0.5 * n1 *
                   std::log2(1.0 + n1 * d.det_nm_root / (l_bar - d.l_min));
}

double optimal_cost_for_rate(double avg_rate, const LqrDerived& d, int n1) {
  if (!(avg_rate > d.h))
    throw std::domain_error(
        "optimal_cost_for_rate: rate below the intrinsic entropy rate");
  if (std::isinf(avg_rate)) return d.l_min;
  const double r_nats = std::log(2.0) * (avg_rate - d.h);
  const double denom = std::expm1(2.0 * r_nats / n1);
  return n1 * d.det_nm_root / denom + d.l_min;
}

double simulate_closed_loop(const ControlModel& model, double rate_budget,
                            int n_slots, int n_trials, uint64_t seed,
                            bool parallel) {
  model.validate();
  const LqrDerived d = derive_lqr_terms(model);
  const int n1 = model.n1();

  // distortion variance reproducing the target excess cost through the
  // control-mismatch penalty tr(D A^T M A)
  double quant_var = 0.0;
  if (!std::isinf(rate_budget)) {
    if (!(rate_budget > d.h))
      throw std::domain_error("simulate_closed_loop: rate below entropy rate");
    const double excess =
        optimal_cost_for_rate(rate_budget, d, n1) - d.l_min;
    const double penalty =
        (model.a.transpose() * d.m * model.a).trace();
    quant_var = penalty > 0.0 ? excess / penalty : 0.0;
  }

  // certainty-equivalent feedback u = -L xhat
  const Mat inner = model.r + model.b.transpose() * d.s * model.b;
  const Mat lgain =
      Eigen::LDLT<Mat>(inner).solve(model.b.transpose() * d.s * model.a);

  const CounterRng rng(seed);
  const auto psd_sqrt = [](const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
    return Mat(es.eigenvectors() *
               es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
               es.eigenvectors().transpose());
  };
  const Mat sqrt_v = psd_sqrt(model.sigma_v);
  const Mat sqrt_w = psd_sqrt(model.sigma_w);

  const int l = static_cast<int>(model.g.rows());
  std::vector<double> trial_cost(static_cast<std::size_t>(n_trials), 0.0);

#pragma omp parallel for schedule(static) if (parallel)
  for (int trial = 0; trial < n_trials; ++trial) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n1);
    Eigen::VectorXd xhat = Eigen::VectorXd::Zero(n1);
    double cost = 0.0;
    for (int slot = 0; slot < n_slots - 1; ++slot) {
      Eigen::VectorXd noisy_est = xhat;
      if (quant_var > 0.0) {
        for (int i = 0; i < n1; ++i)
          noisy_est(i) += rng.normal(0.0, std::sqrt(quant_var), 12,
                                     static_cast<uint64_t>(trial),
                                     static_cast<uint64_t>(slot),
                                     static_cast<uint64_t>(i));
      }
      const Eigen::VectorXd u = -lgain * noisy_est;
      cost += x.dot(model.q * x) + u.dot(model.r * u);

      Eigen::VectorXd v(n1);
      for (int i = 0; i < n1; ++i)
        v(i) = rng.std_normal(10, static_cast<uint64_t>(trial),
                          static_cast<uint64_t>(slot),
                          static_cast<uint64_t>(i));
      x = model.a * x + model.b * u + sqrt_v * v;

      Eigen::VectorXd w(l);
      for (int i = 0; i < l; ++i)
        w(i) = rng.std_normal(11, static_cast<uint64_t>(trial),
                          static_cast<uint64_t>(slot),
                          static_cast<uint64_t>(i));
      const Eigen::VectorXd y = model.g * x + sqrt_w * w;
      const Eigen::VectorXd xpred = model.a * xhat + model.b * u;
      xhat = xpred + d.kgain * (y - model.g * xpred);
    }
    cost += x.dot(model.q1 * x);
    trial_cost[static_cast<std::size_t>(trial)] =
        cost / static_cast<double>(n_slots);
  }

  double mean = 0.0;
  for (double c : trial_cost) mean += c;
  return mean / static_cast<double>(n_trials);
}

}  // namespace lawn::control
