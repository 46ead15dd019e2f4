#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "lawn/aero.hpp"
#include "lawn/beamform.hpp"
#include "lawn/control.hpp"
#include "lawn/formation.hpp"
#include "lawn/io.hpp"
#include "lawn/rng.hpp"
#include "lawn/scenario.hpp"

namespace {

using json = nlohmann::json;
using lawn::harness::ScenarioDoc;
namespace fs = std::filesystem;

struct Common {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out_dir = "out";

  ScenarioDoc scenario() const {
    ScenarioDoc s = config_path.empty() ? ScenarioDoc::defaults()
                                        : ScenarioDoc::load(config_path);
    if (seed) s.seed = *seed;
    s.validate();
    return s;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "scenario config (JSON)");
  cmd->add_option("--seed", c.seed, "seed override");
  cmd->add_option("--out", c.out_dir, "output directory");
}

struct GridArg {
  double x0 = -2.0, x1 = 2.0;
  int nx = 133;
  double y0 = -2.0, y1 = 2.0;
  int ny = 133;
};

GridArg parse_grid(const std::string& spec) {
  GridArg g;
  if (spec.empty()) return g;
  double vals[4];
  int ns[2];
  if (std::sscanf(spec.c_str(), "%lf:%lf:%d,%lf:%lf:%d", &vals[0], &vals[1],
                  &ns[0], &vals[2], &vals[3], &ns[1]) != 6)
    throw CLI::ValidationError("--grid expects x0:x1:nx,y0:y1:ny");
  g.x0 = vals[0];
  g.x1 = vals[1];
  g.nx = ns[0];
  g.y0 = vals[2];
  g.y1 = vals[3];
  g.ny = ns[1];
  if (g.nx < 2 || g.ny < 2)
    throw CLI::ValidationError("--grid needs at least 2 points per axis");
  return g;
}

int cmd_formation(const Common& common) {
  const ScenarioDoc s = common.scenario();
  const auto optimum = lawn::aero::argmax_avg_upwash(s.aero_params);
  json summary;
  summary["digest"] = s.digest();
  summary["seed"] = s.seed;
  json groups = json::array();

  for (std::size_t gi = 0; gi < s.groups.size(); ++gi) {
    const auto& cfg = s.groups[gi];
    const uint64_t group_seed = s.seed + 1000 * gi;
    auto init = lawn::formation::init_formation(cfg, s.aero_params, group_seed);
    const auto trace = lawn::formation::run_formation(
        cfg, s.aero_params, init, s.formation_slots, group_seed);

    lawn::io::CsvWriter csv({"slot", "uav_id", "x", "y", "leader_flag",
                             "ref_id", "u_tot", "u_max", "dx_est", "dy_est"});
    for (int n = 0; n < trace.n_slots(); ++n) {
      const auto& snap = trace.slots[static_cast<std::size_t>(n)];
      for (std::size_t i = 0; i < snap.states.size(); ++i) {
        const auto& st = snap.states[i];
        csv.row(n, st.id, st.pos.x(), st.pos.y(),
                (static_cast<int>(i) == snap.leader ? 1 : 0), snap.ref[i],
                snap.u_tot[i], st.u_max, st.est.x(), st.est.y());
      }
    }
    lawn::io::atomic_write(fs::path(common.out_dir) /
                               ("formation_g" + std::to_string(gi) + "_trace.csv"),
                           csv.str());

    // upwash field around the final layout, for heatmaps
    const auto& last = trace.slots.back();
    std::vector<lawn::aero::Vec2> pos;
    for (const auto& st : last.states) pos.push_back(st.pos);
    double cx = 0.0, cy = 0.0;
    for (const auto& q : pos) {
      cx += q.x();
      cy += q.y();
    }
    cx /= pos.size();
    cy /= pos.size();
    const double half = cfg.m * s.aero_params.beta;
    const lawn::aero::GridSpec gs{cx - half, cx + half, 121,
                                  cy - half, cy + half, 121};
    const auto field = lawn::aero::total_upwash_map(pos, s.aero_params, gs);
    lawn::io::CsvWriter fcsv({"x", "y", "u_tot"});
    for (int jy = 0; jy < gs.ny; ++jy)
      for (int ix = 0; ix < gs.nx; ++ix)
        fcsv.row(gs.x(ix), gs.y(jy),
                 field[static_cast<std::size_t>(jy) * gs.nx + ix]);
    lawn::io::atomic_write(fs::path(common.out_dir) /
                               ("formation_g" + std::to_string(gi) + "_field.csv"),
                           fcsv.str());

    int convergence_slot = -1;
    double final_score = 0.0;
    for (int n = 0; n < trace.n_slots(); ++n) {
      const double score = lawn::formation::v_shape_score(
          trace.slots[static_cast<std::size_t>(n)].states, optimum.pos,
          cfg.kappa);
      if (n == trace.n_slots() - 1) final_score = score;
      if (convergence_slot < 0 && score <= 0.15) convergence_slot = n;
    }
    double mean_upwash = 0.0;
    const int tail = std::max(1, trace.n_slots() / 10);
    for (int n = trace.n_slots() - tail; n < trace.n_slots(); ++n)
      mean_upwash += trace.mean_follower_upwash[static_cast<std::size_t>(n)];
    mean_upwash /= tail;

    json gj;
    gj["m"] = cfg.m;
    gj["convergence_slot"] = convergence_slot;
    gj["final_v_shape_score"] = final_score;
    gj["mean_power_reduction_w"] = s.energy.lift * mean_upwash;
    groups.push_back(gj);
  }
  summary["groups"] = groups;
  lawn::io::atomic_write(fs::path(common.out_dir) / "formation_summary.json",
                         summary.dump(2) + "\n");
  std::cout << "formation: wrote traces for " << s.groups.size()
            << " groups to " << common.out_dir << "\n";
  return 0;
}

int cmd_upwash_map(const Common& common, const std::string& grid_spec,
                   const std::string& field) {
  const ScenarioDoc s = common.scenario();
  const GridArg g = parse_grid(grid_spec);
  const lawn::aero::GridSpec gs{g.x0, g.x1, g.nx, g.y0, g.y1, g.ny};

  std::vector<double> values;
  if (field == "avg") {
    values = lawn::aero::avg_upwash_map(s.aero_params, gs);
  } else if (field == "total") {
    const auto& cfg = s.groups.at(0);
    const auto init =
        lawn::formation::init_formation(cfg, s.aero_params, s.seed);
    std::vector<lawn::aero::Vec2> pos;
    for (const auto& st : init) pos.push_back(st.pos);
    values = lawn::aero::total_upwash_map(pos, s.aero_params, gs);
  } else {
    throw CLI::ValidationError("--field must be avg or total");
  }

  int best = 0;
  for (int i = 1; i < gs.cells(); ++i)
    if (values[static_cast<std::size_t>(i)] >
        values[static_cast<std::size_t>(best)])
      best = i;

  lawn::io::CsvWriter csv({"kind", "x", "y", "value"});
  for (int jy = 0; jy < gs.ny; ++jy)
    for (int ix = 0; ix < gs.nx; ++ix)
      csv.row("cell", gs.x(ix), gs.y(jy),
              values[static_cast<std::size_t>(jy) * gs.nx + ix]);
  csv.row("argmax", gs.x(best % gs.nx), gs.y(best / gs.nx),
          values[static_cast<std::size_t>(best)]);
  lawn::io::atomic_write(fs::path(common.out_dir) / "upwash_map.csv",
                         csv.str());
  std::cout << "upwash-map: argmax at (" << gs.x(best % gs.nx) << ", "
            << gs.y(best / gs.nx) << "), value "
            << values[static_cast<std::size_t>(best)] << "\n";
  return 0;
}

json complex_matrix_json(const Eigen::MatrixXcd& m) {
  // row-major interleaved [re, im, re, im, ...]
  json arr = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      arr.push_back(m(i, j).real());
      arr.push_back(m(i, j).imag());
    }
  return arr;
}

json complex_vector_json(const Eigen::VectorXcd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    arr.push_back(v(i).real());
    arr.push_back(v(i).imag());
  }
  return arr;
}

void append_comparison(lawn::io::CsvWriter& csv, const std::string& name,
                       const lawn::beamform::BeamSolution& sol,
                       const lawn::beamform::BfScenario& scn) {
  if (!sol.feasible) {
    csv.row(name, "inf", 0.0, 0.0, 0.0, 0);
    return;
  }
  const auto rep = lawn::beamform::check_feasibility(sol, scn);
  double min_rate = sol.avg_rates.empty() ? 0.0 : sol.avg_rates[0];
  for (double r : sol.avg_rates) min_rate = std::min(min_rate, r);
  double min_power = rep.power_margin[0];
  for (double m : rep.power_margin) min_power = std::min(min_power, m);
  double min_sense = rep.sensing_margin[0];
  for (double m : rep.sensing_margin) min_sense = std::min(min_sense, m);
  csv.row(name, sol.eta, min_rate, min_power, min_sense, 1);
}

int cmd_beamform(const Common& common) {
  const ScenarioDoc s = common.scenario();
  lawn::beamform::BfScenario scn;
  if (s.leaders_mode == "trace") {
    std::vector<std::vector<lawn::radio::Vec3>> tracks;
    for (std::size_t gi = 0; gi < s.groups.size(); ++gi) {
      const auto& cfg = s.groups[gi];
      const uint64_t group_seed = s.seed + 1000 * gi;
      auto init =
          lawn::formation::init_formation(cfg, s.aero_params, group_seed);
      const auto trace = lawn::formation::run_formation(
          cfg, s.aero_params, init, s.formation_slots, group_seed);
      std::vector<lawn::radio::Vec3> t;
      for (int n = 0; n < s.bf_slots; ++n) {
        const int slot = std::min(s.formation_slots - 1,
                                  n * s.formation_slots / s.bf_slots +
                                      s.formation_slots / (2 * s.bf_slots));
        const auto& snap = trace.slots[static_cast<std::size_t>(slot)];
        const auto& leader_pos =
            snap.states[static_cast<std::size_t>(snap.leader)].pos;
        t.emplace_back(leader_pos.x(), leader_pos.y(), s.altitude);
      }
      tracks.push_back(std::move(t));
    }
    scn = s.bf_scenario(tracks);
  } else {
    scn = s.bf_scenario();
  }

  const auto proposed = lawn::beamform::optimize(scn, s.eta_tol, s.max_outer);
  const auto ident = lawn::beamform::baseline_identical_power(scn);
  const auto wf = lawn::beamform::baseline_water_filling(scn);
  const auto rnd = lawn::beamform::baseline_random(scn, s.seed);

  lawn::io::CsvWriter cmp({"scheme", "eta", "min_avg_rate_bits",
                           "min_power_margin", "min_sensing_margin",
                           "feasible"});
  append_comparison(cmp, "proposed", proposed, scn);
  append_comparison(cmp, "water_filling", wf, scn);
  append_comparison(cmp, "identical", ident, scn);
  append_comparison(cmp, "random", rnd, scn);
  lawn::io::atomic_write(fs::path(common.out_dir) / "beamform_comparison.csv",
                         cmp.str());

  lawn::io::CsvWriter itcsv(
      {"outer_iter", "eta", "probe_count", "cuts_total", "max_violation"});
  for (const auto& row : proposed.iterations)
    itcsv.row(row.outer_iter, row.eta, row.probe_count, row.cuts_total,
              row.max_violation);
  lawn::io::atomic_write(fs::path(common.out_dir) / "beamform_iterations.csv",
                         itcsv.str());

  json out;
  out["digest"] = s.digest();
  out["feasible"] = proposed.feasible;
  out["message"] = proposed.message;
  if (proposed.feasible) {
    out["eta"] = proposed.eta;
    out["avg_rates_bits"] = proposed.avg_rates;
    out["sample_gains"] = proposed.sample_gains;
    json slots = json::array();
    for (const auto& slot : proposed.slots) {
      json sj;
      json ws = json::array();
      for (const auto& w : slot.w) ws.push_back(complex_vector_json(w));
      sj["w"] = ws;
      sj["c_d"] = complex_matrix_json(slot.c_d);
      slots.push_back(sj);
    }
    out["slots"] = slots;
  }
  lawn::io::atomic_write(fs::path(common.out_dir) / "beamform_solution.json",
                         out.dump(2) + "\n");

  std::cout << "beamform: proposed eta = "
            << (proposed.feasible ? std::to_string(proposed.eta)
                                  : std::string("infeasible"))
            << " (identical " << ident.eta << ", water-filling " << wf.eta
            << ", random " << rnd.eta << ")\n";
  return 0;
}

int cmd_lqr_sweep(const Common& common) {
  const ScenarioDoc s = common.scenario();
  const std::vector<double> scales = {0.01, 0.1, 1.0, 10.0};
  const std::vector<double> pmax_dbm = {15.0, 20.0, 25.0, 30.0, 35.0};

  lawn::io::CsvWriter csv({"sigma_v_scale", "sigma_w_scale", "p_max_dbm",
                           "l_min", "eta"});
  for (double sv : scales) {
    for (double sw : scales) {
      ScenarioDoc sweep = s;
      sweep.sigma_v = s.sigma_v * sv;
      sweep.sigma_w = s.sigma_w * sw;
      for (double pd : pmax_dbm) {
        sweep.p_max = lawn::io::dbm_to_watt(pd);
        const auto scn = sweep.bf_scenario();
        const auto base = lawn::beamform::baseline_identical_power(scn);
        csv.row(sv, sw, pd, scn.control[0].lqr.l_min, base.eta);
      }
    }
  }
  lawn::io::atomic_write(fs::path(common.out_dir) / "lqr_sweep.csv",
                         csv.str());
  std::cout << "lqr-sweep: wrote " << csv.rows() << " rows\n";
  return 0;
}

int cmd_selftest(const Common& common, double perturb_gradient) {
  const ScenarioDoc s = common.scenario();
  int failures = 0;
  const auto report = [&](const char* name, bool ok) {
    std::cout << (ok ? "[pass] " : "[FAIL] ") << name << "\n";
    if (!ok) ++failures;
  };

  // gradient vs central differences (with an optional fault injection
  // used as a negative control)
  {
    const lawn::CounterRng rng(s.seed);
    std::vector<lawn::aero::RelOffset> others = {{0.0, 0.0}, {0.9, 1.0}};
    bool ok = true;
    for (int i = 0; i < 200 && ok; ++i) {
      const lawn::aero::RelOffset off{rng.uniform(-3.0, 3.0, 0, i),
                                      rng.uniform(-3.0, 3.0, 1, i)};
      auto grad =
          lawn::aero::upwash_gradient(off, 1, others, s.aero_params);
      grad.x() += perturb_gradient;
      const double h = 1e-6;
      const auto f = [&](double x, double y) {
        return lawn::aero::total_upwash_at({x, y}, others, s.aero_params);
      };
      const Eigen::Vector2d fd((f(off.dx + h, off.dy) - f(off.dx - h, off.dy)) /
                                   (2 * h),
                               (f(off.dx, off.dy + h) - f(off.dx, off.dy - h)) /
                                   (2 * h));
      if ((grad - fd).norm() > 1e-5 * std::max(0.01, fd.norm())) ok = false;
    }
    report("upwash gradient matches central differences", ok);
  }

  // flat-cost identities of the steady-state control layer
  {
    const auto model = lawn::control::ControlModel::identity_model(8);
    bool ok = true;
    try {
      const auto sm = lawn::control::solve_dare_s(model);
      ok = (sm - Eigen::MatrixXd::Identity(8, 8)).norm() < 1e-9;
      const auto d = lawn::control::derive_lqr_terms(model);
      const double p_scalar =
          (0.01 + std::sqrt(0.01 * 0.01 + 4 * 0.01 * 0.001)) / 2.0;
      ok = ok && std::abs(d.l_min - 8 * p_scalar) < 1e-8;
      const double l2 = 2.0 * d.l_min;
      const double rate = lawn::control::min_rate_for_cost(l2, d, 8);
      ok = ok &&
           std::abs(lawn::control::optimal_cost_for_rate(rate, d, 8) - l2) <
               1e-9 * l2;
    } catch (const std::exception&) {
      ok = false;
    }
    report("steady-state control identities and rate round trip", ok);
  }

  // rank-one reconstruction invariance on a random PSD pair
  {
    const lawn::CounterRng rng(s.seed + 7);
    const int n = 6;
    bool ok = true;
    for (int trial = 0; trial < 20 && ok; ++trial) {
      std::vector<Eigen::MatrixXcd> wt;
      Eigen::MatrixXcd total = Eigen::MatrixXcd::Zero(n, n);
      std::vector<Eigen::VectorXcd> hs;
      for (int k = 0; k < 2; ++k) {
        Eigen::MatrixXcd a(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            a(i, j) = std::complex<double>(rng.std_normal(50, trial, k, i * n + j),
                                           rng.std_normal(51, trial, k, i * n + j));
        wt.push_back(a * a.adjoint() / n);
        total += wt.back();
        Eigen::VectorXcd h(n);
        for (int i = 0; i < n; ++i)
          h(i) = std::complex<double>(rng.std_normal(52, trial, k, i),
                                      rng.std_normal(53, trial, k, i));
        hs.push_back(h);
      }
      Eigen::MatrixXcd cd = Eigen::MatrixXcd::Identity(n, n) * 0.1;
      total += cd;
      const auto r1 = lawn::beamform::reconstruct_rank1(wt, cd, hs);
      Eigen::MatrixXcd total_after = r1.c_star;
      for (int k = 0; k < 2; ++k) {
        total_after += r1.w_star[static_cast<std::size_t>(k)] *
                       r1.w_star[static_cast<std::size_t>(k)].adjoint();
        const double before =
            (hs[static_cast<std::size_t>(k)].adjoint() *
             wt[static_cast<std::size_t>(k)] * hs[static_cast<std::size_t>(k)])
                .real()(0, 0);
        const double after =
            std::norm(hs[static_cast<std::size_t>(k)].dot(
                r1.w_star[static_cast<std::size_t>(k)]));
        if (std::abs(before - after) > 1e-10 * std::abs(before)) ok = false;
      }
      if ((total_after - total).norm() > 1e-10 * total.norm()) ok = false;
      if (lawn::conic::min_eigenvalue(lawn::conic::hermitian_embed(r1.c_star)) <
          -1e-8)
        ok = false;
    }
    report("rank-one reconstruction preserves powers and gains", ok);
  }

  // conic micro-instances
  {
    bool ok = true;
    try {
      // eigenvalue problem: maximize <C, X> with tr X = 1
      const int n = 6;
      const lawn::CounterRng rng(s.seed + 9);
      Eigen::MatrixXd c(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
          c(i, j) = rng.std_normal(60, i, j);
          c(j, i) = c(i, j);
        }
      lawn::conic::ConicProblem p;
      const int blk = p.add_block(n);
      const int dc = p.add_matrix(blk, -c);
      const int di = p.add_matrix(blk, Eigen::MatrixXd::Identity(n, n));
      p.objective.blocks.push_back({blk, dc, 1.0});
      lawn::conic::Constraint tr1;
      tr1.lhs.blocks.push_back({blk, di, 1.0});
      tr1.rel = lawn::conic::Relation::eq;
      tr1.rhs = 1.0;
      p.constraints.push_back(tr1);
      const auto sol = lawn::conic::solve(p);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
      ok = sol.status == lawn::conic::SolveStatus::optimal &&
           std::abs(-sol.objective - es.eigenvalues().maxCoeff()) < 1e-6;

      // embedding isometry
      Eigen::MatrixXcd h(2, 2);
      h << std::complex<double>(0, 0), std::complex<double>(0, 1),
          std::complex<double>(0, -1), std::complex<double>(0, 0);
      const auto e = lawn::conic::hermitian_embed(h);
      ok = ok && std::abs(lawn::conic::min_eigenvalue(e) + 1.0) < 1e-12;
    } catch (const std::exception&) {
      ok = false;
    }
    report("conic solver micro-instances", ok);
  }

  std::cout << (failures == 0 ? "selftest: all checks passed\n"
                              : "selftest: FAILURES PRESENT\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV formation and dual-functional beamforming toolkit"};
  app.require_subcommand(1);

  Common c_formation, c_upwash, c_beamform, c_sweep, c_selftest;
  std::string grid_spec;
  std::string field = "avg";
  double perturb_gradient = 0.0;

  auto* sf = app.add_subcommand("formation", "run the formation simulations");
  add_common(sf, c_formation);

  auto* su = app.add_subcommand("upwash-map", "tabulate an upwash field");
  add_common(su, c_upwash);
  su->add_option("--grid", grid_spec, "grid spec x0:x1:nx,y0:y1:ny");
  su->add_option("--field", field, "avg (single wing) or total (layout)");

  auto* sb = app.add_subcommand("beamform", "optimize and compare beamformers");
  add_common(sb, c_beamform);

  auto* sl = app.add_subcommand("lqr-sweep", "cost maps over noise and power");
  add_common(sl, c_sweep);

  auto* st = app.add_subcommand("selftest", "fast invariant checks");
  add_common(st, c_selftest);
  st->add_option("--perturb-gradient", perturb_gradient,
                 "fault-injection hook for the gradient check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sf->parsed()) return cmd_formation(c_formation);
    if (su->parsed()) return cmd_upwash_map(c_upwash, grid_spec, field);
    if (sb->parsed()) return cmd_beamform(c_beamform);
    if (sl->parsed()) return cmd_lqr_sweep(c_sweep);
    if (st->parsed()) return cmd_selftest(c_selftest, perturb_gradient);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
