// Acceptance suite: runs every shipping criterion at its stated
// tolerance and prints one pass/fail line per criterion. Exit code is
// the number of failed criteria.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "lawn/aero.hpp"
#include "lawn/beamform.hpp"
#include "lawn/control.hpp"
#include "lawn/formation.hpp"
#include "lawn/io.hpp"
#include "lawn/radio.hpp"
#include "lawn/rng.hpp"
#include "lawn/scenario.hpp"

using namespace lawn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using CriterionFn = std::function<Outcome()>;

Outcome criterion_upwash_optimum() {
  const aero::AeroParams p;
  const auto t0 = std::chrono::steady_clock::now();
  const auto opt = aero::argmax_avg_upwash(p);
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  const Eigen::Vector2d reference(0.9091, 1.0303);
  const double dist = (opt.pos - reference).norm();
  // mirrored optimum by even symmetry
  const auto mirrored = aero::avg_upwash({-opt.pos.x(), opt.pos.y()}, p);
  const bool symmetric = std::abs(mirrored - opt.value) <= 1e-9;
  Outcome o;
  o.pass = dist <= 0.01 && symmetric && dt < 1.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "argmax (%.6f, %.6f), distance %.6f m from (0.9091, 1.0303), "
                "%.2f s",
                opt.pos.x(), opt.pos.y(), dist, dt);
  o.detail = buf;
  return o;
}

Outcome criterion_gradient() {
  const aero::AeroParams p;
  const CounterRng rng(2024);
  int bad = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    // a fresh random layout of 4-12 wake generators per offset
    const int m = 4 + static_cast<int>(rng.uniform(0.0, 9.0, 0, trial));
    std::vector<aero::RelOffset> others;
    for (int i = 0; i < m; ++i)
      others.push_back({rng.uniform(-4.0, 4.0, 1, trial, i),
                        rng.uniform(-4.0, 4.0, 2, trial, i)});
    const aero::RelOffset off{rng.uniform(-3.0, 3.0, 3, trial),
                              rng.uniform(-3.0, 3.0, 4, trial)};
    const int lambda = rng.sign(5, trial);
    const auto g = aero::upwash_gradient(off, lambda, others, p);

    const double h = 1e-6;
    const auto f = [&](double x, double y) {
      return aero::total_upwash_at({x, y}, others, p);
    };
    Eigen::Vector2d fd((f(off.dx + h, off.dy) - f(off.dx - h, off.dy)) / (2 * h),
                       (f(off.dx, off.dy + h) - f(off.dx, off.dy - h)) /
                           (2 * h));
    fd.x() *= lambda;
    const double scale = std::max(0.01, fd.norm());
    const double rel = (g - fd).norm() / scale;
    worst = std::max(worst, rel);
    if (rel > 1e-5) ++bad;
  }
  Outcome o;
  o.pass = bad == 0;
  o.detail = "worst relative error " + std::to_string(worst) + " over 1000 offsets";
  return o;
}

Outcome criterion_formation_convergence() {
  const aero::AeroParams p;
  const auto optimum = aero::argmax_avg_upwash(p);
  const harness::ScenarioDoc s = harness::ScenarioDoc::defaults();

  int pass_seeds = 0;
  bool upwash_improves = true;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    bool converged = true;
    for (std::size_t gi = 0; gi < s.groups.size(); ++gi) {
      const auto& cfg = s.groups[gi];
      const int slots = cfg.m == 9 ? 100 : 200;
      const auto init = formation::init_formation(cfg, p, seed);
      const auto trace = formation::run_formation(cfg, p, init, slots, seed);
      const double score = formation::v_shape_score(
          trace.slots.back().states, optimum.pos, cfg.kappa);
      if (score > 0.15) converged = false;
      if (trace.mean_follower_upwash.back() <=
          trace.mean_follower_upwash.front())
        upwash_improves = false;
    }
    if (converged) ++pass_seeds;
  }
  Outcome o;
  o.pass = pass_seeds >= 8 && upwash_improves;
  o.detail = std::to_string(pass_seeds) +
             "/10 seeds converged; follower upwash improves over slot 1: " +
             (upwash_improves ? "yes" : "no");
  return o;
}

Outcome criterion_dare() {
  bool ok = true;
  std::string detail;
  // R = 0, B = I collapses to S = Q
  auto model = control::ControlModel::identity_model(50);
  const auto s = control::solve_dare_s(model);
  const double err_s = (s - control::Mat::Identity(50, 50)).norm();
  ok = ok && err_s == 0.0;

  // scalar filtering root
  control::ControlModel sc = control::ControlModel::identity_model(1);
  const auto f1 = control::solve_dare_p(sc, 1e-14);
  const double p_root = (0.01 + std::sqrt(0.01 * 0.01 + 4 * 0.01 * 0.001)) / 2;
  ok = ok && std::abs(f1.p(0, 0) - p_root) <= 1e-10;
  const double sigma_root = p_root * 0.001 / (p_root + 0.001);
  ok = ok && std::abs(f1.sigma(0, 0) - sigma_root) <= 1e-10;

  // the 50-dimensional diagonal model decouples entrywise
  const auto f50 = control::solve_dare_p(model, 1e-14);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i)
    worst = std::max(worst, std::abs(f50.p(i, i) - p_root));
  ok = ok && worst <= 1e-10;

  Outcome o;
  o.pass = ok;
  o.detail = "S=Q exact, scalar root error " +
             std::to_string(std::abs(f1.p(0, 0) - p_root)) +
             ", diagonal worst " + std::to_string(worst);
  return o;
}

Outcome criterion_rate_cost_roundtrip() {
  const auto model = control::ControlModel::identity_model(50);
  const auto d = control::derive_lqr_terms(model);
  bool ok = true;
  double worst = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double l = d.l_min * (1.0 + 0.1 * i);
    const double rate = control::min_rate_for_cost(l, d, 50);
    const double back = control::optimal_cost_for_rate(rate, d, 50);
    worst = std::max(worst, std::abs(back - l) / l);
  }
  ok = worst <= 1e-9;
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 100; ++i) {
    const double rate = d.h + 0.3 * i;
    const double l = control::optimal_cost_for_rate(rate, d, 50);
    if (!(l < prev)) ok = false;
    prev = l;
  }
  const double tail = control::optimal_cost_for_rate(5e3, d, 50);
  ok = ok && std::abs(tail - d.l_min) <= 1e-9 * d.l_min;
  Outcome o;
  o.pass = ok;
  o.detail = "worst round-trip error " + std::to_string(worst) +
             ", tail gap " + std::to_string(tail - d.l_min);
  return o;
}

Outcome criterion_reconstruction() {
  const CounterRng rng(99);
  const int na = 12;
  bool ok = true;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<radio::CMat> wt;
    std::vector<radio::CVec> hs;
    radio::CMat total = radio::CMat::Zero(na, na);
    for (int k = 0; k < 2; ++k) {
      radio::CMat a(na, na);
      for (int i = 0; i < na; ++i)
        for (int j = 0; j < na; ++j)
          a(i, j) = std::complex<double>(
              rng.std_normal(0, trial, k, i * na + j),
              rng.std_normal(1, trial, k, i * na + j));
      wt.push_back(a * a.adjoint() / na);
      total += wt.back();
      radio::CVec h(na);
      for (int i = 0; i < na; ++i)
        h(i) = std::complex<double>(rng.std_normal(2, trial, k, i),
                                    rng.std_normal(3, trial, k, i));
      hs.push_back(h);
    }
    radio::CMat a(na, na);
    for (int i = 0; i < na; ++i)
      for (int j = 0; j < na; ++j)
        a(i, j) = std::complex<double>(rng.std_normal(4, trial, i, j),
                                       rng.std_normal(5, trial, i, j));
    const radio::CMat cd = a * a.adjoint() / (2 * na);
    total += cd;

    const auto r1 = beamform::reconstruct_rank1(wt, cd, hs);

    // per-formation signal traces
    for (int k = 0; k < 2; ++k) {
      const double before =
          (hs[k].adjoint() * wt[k] * hs[k]).real()(0, 0);
      const double after = std::norm(hs[k].dot(r1.w_star[k]));
      worst = std::max(worst, std::abs(after - before) / before);
    }
    // total power
    double power_after = r1.c_star.real().trace();
    radio::CMat total_after = r1.c_star;
    for (int k = 0; k < 2; ++k) {
      power_after += r1.w_star[k].squaredNorm();
      total_after += r1.w_star[k] * r1.w_star[k].adjoint();
    }
    worst = std::max(worst, std::abs(power_after - total.real().trace()) /
                                total.real().trace());
    // beampattern gains via the preserved total covariance
    worst = std::max(worst,
                     (total_after - total).norm() / total.norm());
    // rank-one certificate and dedicated-covariance positivity
    for (int k = 0; k < 2; ++k) {
      Eigen::JacobiSVD<radio::CMat> svd(r1.w_star[k] * r1.w_star[k].adjoint());
      if (svd.singularValues()(1) > 1e-6 * svd.singularValues()(0)) ok = false;
    }
    if (conic::min_eigenvalue(conic::hermitian_embed(r1.c_star)) < -1e-8)
      ok = false;
  }
  ok = ok && worst <= 1e-9;
  Outcome o;
  o.pass = ok;
  o.detail = "worst relative drift " + std::to_string(worst) +
             " over 100 random inputs";
  return o;
}

Outcome criterion_conic() {
  bool ok = true;
  double worst_gap = 0.0, worst_err = 0.0;
  const CounterRng rng(7);

  for (int n = 2; n <= 24; ++n) {
    conic::Mat c(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) {
        c(i, j) = rng.std_normal(0, n, i, j);
        c(j, i) = c(i, j);
      }
    conic::ConicProblem p;
    const int blk = p.add_block(n);
    const int dc = p.add_matrix(blk, -c);
    const int di = p.add_matrix(blk, conic::Mat::Identity(n, n));
    p.objective.blocks.push_back({blk, dc, 1.0});
    conic::Constraint tr1;
    tr1.lhs.blocks.push_back({blk, di, 1.0});
    tr1.rel = conic::Relation::eq;
    tr1.rhs = 1.0;
    p.constraints.push_back(tr1);
    const auto sol = conic::solve(p);
    Eigen::SelfAdjointEigenSolver<conic::Mat> es(c);
    const double expect = es.eigenvalues().maxCoeff();
    if (sol.status != conic::SolveStatus::optimal) ok = false;
    worst_err = std::max(
        worst_err, std::abs(-sol.objective - expect) / std::max(1.0, expect));
    worst_gap = std::max(worst_gap, sol.residuals.gap);
  }
  ok = ok && worst_err <= 1e-6 && worst_gap <= 1e-7;

  // random feasibility instances built around interior points
  int feasible_ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    conic::ConicProblem p;
    std::vector<int> blocks;
    std::vector<conic::Mat> interior;
    for (int b = 0; b < 2; ++b) {
      const int dim = 2 + (trial + b) % 5;
      blocks.push_back(p.add_block(dim));
      conic::Mat a(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j <= i; ++j) {
          a(i, j) = rng.std_normal(10, trial, b, i * 8 + j);
          a(j, i) = a(i, j);
        }
      interior.push_back(a * a.transpose() / dim +
                         0.2 * conic::Mat::Identity(dim, dim));
    }
    for (int i = 0; i < 5; ++i) {
      conic::Constraint c;
      double anchor = 0.0;
      for (int b = 0; b < 2; ++b) {
        const int dim = static_cast<int>(interior[b].rows());
        conic::Mat a(dim, dim);
        for (int r = 0; r < dim; ++r)
          for (int q = 0; q <= r; ++q) {
            a(r, q) = rng.std_normal(20, trial, 10 * i + b, r * 8 + q);
            a(q, r) = a(r, q);
          }
        const int d = p.add_matrix(blocks[b], a);
        c.lhs.blocks.push_back({blocks[b], d, 1.0});
        anchor += a.cwiseProduct(interior[b]).sum();
      }
      const int kind = i % 3;
      if (kind == 0) {
        c.rel = conic::Relation::eq;
        c.rhs = anchor;
      } else if (kind == 1) {
        c.rel = conic::Relation::le;
        c.rhs = anchor + 1.0;
      } else {
        c.rel = conic::Relation::ge;
        c.rhs = anchor - 1.0;
      }
      p.constraints.push_back(c);
    }
    for (int b = 0; b < 2; ++b) {
      conic::Constraint cap;
      const int dim = static_cast<int>(interior[b].rows());
      const int d = p.add_matrix(blocks[b], conic::Mat::Identity(dim, dim));
      cap.lhs.blocks.push_back({blocks[b], d, 1.0});
      cap.rel = conic::Relation::le;
      cap.rhs = interior[b].trace() + 2.0;
      p.constraints.push_back(cap);
      p.objective.blocks.push_back({blocks[b], d, 0.1});
    }
    const auto sol = conic::solve(p);
    if (sol.status != conic::SolveStatus::optimal) continue;
    bool all_ok = true;
    for (const auto& c : p.constraints) {
      double lhs = 0.0;
      for (const auto& t : c.lhs.blocks)
        lhs += t.scale * p.dict[t.block][t.dict]
                             .cwiseProduct(sol.block_values[t.block])
                             .sum();
      const double tol = 1e-7 * std::max(1.0, std::abs(c.rhs));
      if (c.rel == conic::Relation::eq && std::abs(lhs - c.rhs) > tol)
        all_ok = false;
      if (c.rel == conic::Relation::le && lhs > c.rhs + tol) all_ok = false;
      if (c.rel == conic::Relation::ge && lhs < c.rhs - tol) all_ok = false;
    }
    for (const auto& x : sol.block_values)
      if (conic::min_eigenvalue(x) < -1e-7) all_ok = false;
    if (all_ok) ++feasible_ok;
  }
  ok = ok && feasible_ok == 100;

  Outcome o;
  o.pass = ok;
  o.detail = "eig error " + std::to_string(worst_err) + ", gap " +
             std::to_string(worst_gap) + ", feasibility " +
             std::to_string(feasible_ok) + "/100";
  return o;
}

Outcome criterion_sca() {
  harness::ScenarioDoc s = harness::ScenarioDoc::defaults();
  const auto scn = s.bf_scenario();
  const auto sol = beamform::optimize(scn, s.eta_tol, s.max_outer);
  Outcome o;
  if (!sol.feasible) {
    o.pass = false;
    o.detail = "optimizer reported infeasible: " + sol.message;
    return o;
  }
  bool monotone = true;
  for (std::size_t i = 1; i < sol.iterations.size(); ++i)
    if (sol.iterations[i].eta > sol.iterations[i - 1].eta + 1e-6)
      monotone = false;
  const bool converged =
      sol.iterations.size() >= 2 &&
      std::abs(sol.iterations.back().eta -
               sol.iterations[sol.iterations.size() - 2].eta) <= 1e-4 &&
      static_cast<int>(sol.iterations.size()) <= 30;
  const auto rep = beamform::check_feasibility(sol, scn);
  o.pass = monotone && converged && rep.ok(1e-6);
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "eta %.6f after %zu outer iterations, monotone %s, min margin "
                "%.2e",
                sol.eta, sol.iterations.size(), monotone ? "yes" : "no",
                rep.min_margin);
  o.detail = buf;
  return o;
}

Outcome criterion_benchmarks() {
  harness::ScenarioDoc s = harness::ScenarioDoc::defaults();
  Outcome o;
  std::string detail;

  // ordering at 30 dBm
  const auto scn = s.bf_scenario();
  const auto proposed = beamform::optimize(scn, s.eta_tol, s.max_outer);
  const auto wf = beamform::baseline_water_filling(scn);
  const auto ident = beamform::baseline_identical_power(scn);
  if (!proposed.feasible) {
    o.pass = false;
    o.detail = "proposed design infeasible at 30 dBm";
    return o;
  }
  const bool order_wf = proposed.eta <= wf.eta && wf.eta <= ident.eta;
  int random_wins = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    const auto rnd = beamform::baseline_random(scn, seed);
    if (proposed.eta <= rnd.eta) ++random_wins;
  }

  // power sweep; the sensing threshold is rescaled by the slot-count
  // ratio so the per-slot sensing load matches the full-horizon study
  // (at the unscaled threshold the low-power points are provably
  // infeasible: the accumulated gain is bounded by N * P * N_s)
  std::vector<double> etas;
  bool sweep_decreasing = true;
  for (double dbm : {15.0, 20.0, 25.0, 30.0, 35.0}) {
    harness::ScenarioDoc sp = s;
    sp.p_max = io::dbm_to_watt(dbm);
    sp.gamma_th = s.gamma_th * static_cast<double>(s.bf_slots) /
                  static_cast<double>(s.formation_slots);
    const auto sol = beamform::optimize(sp.bf_scenario(), sp.eta_tol,
                                        sp.max_outer);
    if (!sol.feasible) {
      sweep_decreasing = false;
      break;
    }
    if (!etas.empty() && sol.eta >= etas.back()) sweep_decreasing = false;
    etas.push_back(sol.eta);
  }

  // sensing-threshold sweep at 25 dBm: the flag must appear
  bool saw_infeasible = false;
  bool saw_feasible = false;
  for (double gdbm : {-20.0, -10.0, -4.0, 0.0, 4.0, 8.0, 12.0}) {
    harness::ScenarioDoc sg = s;
    sg.p_max = io::dbm_to_watt(25.0);
    sg.gamma_th = io::dbm_to_watt(gdbm);
    const auto sol = beamform::optimize(sg.bf_scenario(), 1e-3, 12);
    if (sol.feasible)
      saw_feasible = true;
    else
      saw_infeasible = true;
  }

  o.pass = order_wf && random_wins >= 8 && sweep_decreasing &&
           saw_infeasible && saw_feasible;
  char buf[240];
  std::snprintf(
      buf, sizeof(buf),
      "eta prop %.4f <= wf %.4f <= ident %.4f: %s; random wins %d/10; power "
      "sweep decreasing %s; threshold sweep feasible->infeasible %s",
      proposed.eta, wf.eta, ident.eta, order_wf ? "yes" : "NO", random_wins,
      sweep_decreasing ? "yes" : "NO",
      (saw_infeasible && saw_feasible) ? "yes" : "NO");
  o.detail = buf;
  return o;
}

Outcome criterion_closed_loop() {
  const auto model = control::ControlModel::identity_model(50);
  const auto d = control::derive_lqr_terms(model);
  const double cost = control::simulate_closed_loop(
      model, std::numeric_limits<double>::infinity(), 1500, 100, 2024);
  Outcome o;
  o.pass = std::abs(cost - d.l_min) <= 0.1 * d.l_min;
  o.detail = "empirical " + std::to_string(cost) + " vs floor " +
             std::to_string(d.l_min);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, CriterionFn>> criteria = {
      {"upwash optimum location", criterion_upwash_optimum},
      {"analytic gradient vs finite differences", criterion_gradient},
      {"V-formation convergence", criterion_formation_convergence},
      {"DARE identities", criterion_dare},
      {"rate-cost round trip", criterion_rate_cost_roundtrip},
      {"rank-one reconstruction invariance", criterion_reconstruction},
      {"conic solver correctness", criterion_conic},
      {"SCA convergence and feasibility", criterion_sca},
      {"benchmark ordering and sweeps", criterion_benchmarks},
      {"closed-loop empirical cost", criterion_closed_loop},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("criterion %2zu [%s] %s — %s (%.1f s)\n", i + 1,
                out.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                out.detail.c_str(), dt);
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  if (failures == 0)
    std::printf("acceptance: all %zu criteria passed\n", criteria.size());
  else
    std::printf("acceptance: %d of %zu criteria FAILED\n", failures,
                criteria.size());
  return failures;
}
