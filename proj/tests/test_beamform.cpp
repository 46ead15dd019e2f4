#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "lawn/beamform.hpp"
#include "lawn/rng.hpp"

using namespace lawn;
using beamform::BfScenario;
using beamform::ChannelGrid;
using beamform::CovSet;
using radio::CMat;
using radio::CVec;
using radio::Vec3;

namespace {

CMat random_psd(int n, uint64_t seed, uint64_t stream = 0) {
  const CounterRng rng(seed);
  CMat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      a(i, j) = std::complex<double>(rng.std_normal(stream, i, j),
                                     rng.std_normal(stream + 1, i, j));
  return a * a.adjoint() / n;
}

CVec random_cvec(int n, uint64_t seed, uint64_t stream = 0) {
  const CounterRng rng(seed);
  CVec v(n);
  for (int i = 0; i < n; ++i)
    v(i) = std::complex<double>(rng.std_normal(stream, i), rng.std_normal(stream + 1, i));
  return v;
}

// small two-formation scenario (8 antennas, 2 slots, 2 sample points)
BfScenario small_scenario(int kf = 2, int ns = 2, double gamma_dbm = -90.0,
                          double pmax_dbm = 30.0) {
  BfScenario scn;
  scn.geo.n_s = 8;
  scn.n_slots = ns;
  scn.leaders.clear();
  for (int k = 0; k < kf; ++k) {
    std::vector<Vec3> track;
    for (int n = 0; n < ns; ++n)
      track.emplace_back(20.0 + 70.0 * k, 40.0 - 6.0 * n, 30.0);
    scn.leaders.push_back(track);
  }
  scn.sample_points = {Vec3(40, -135, 30), Vec3(60, -132, 30)};
  scn.gamma_th = std::pow(10.0, (gamma_dbm - 30.0) / 10.0);
  scn.p_max = std::pow(10.0, (pmax_dbm - 30.0) / 10.0);
  const auto model = control::ControlModel::identity_model(4);
  const auto d = control::derive_lqr_terms(model);
  for (int k = 0; k < kf; ++k) scn.control.push_back({d, 4});
  scn.validate();
  return scn;
}

double re_tr(const CMat& a, const CMat& b) {
  return a.cwiseProduct(b.conjugate()).sum().real();
}

}  // namespace

TEST_CASE("single-formation linearization collapses to the noise floor") {
  BfScenario scn = small_scenario(1, 1);
  const ChannelGrid ch = beamform::build_channels(scn);
  std::vector<CovSet> anchor(1);
  anchor[0].w = {CMat::Zero(8, 8)};
  anchor[0].c_d = CMat::Zero(8, 8);
  const auto lin = beamform::sca_linearize(0, 0, ch, anchor, scn.cc.noise_power);
  CHECK(lin.r_hat_lo == doctest::Approx(std::log2(scn.cc.noise_power)));
  const CMat expect =
      (std::log2(std::exp(1.0)) / scn.cc.noise_power) * (ch[0][0] * ch[0][0].adjoint());
  CHECK((lin.d_matrix - expect).norm() <= 1e-12 * expect.norm());
}

TEST_CASE("the SCA bound is tight at the anchor and valid elsewhere") {
  BfScenario scn = small_scenario(2, 1);
  const ChannelGrid ch = beamform::build_channels(scn);
  const int na = scn.geo.n_s;

  std::vector<CovSet> anchor(1);
  anchor[0].w = {random_psd(na, 1) * 0.2, random_psd(na, 2) * 0.2};
  anchor[0].c_d = random_psd(na, 3) * 0.05;

  const auto rate_true = [&](const CovSet& covs, int k) {
    return beamform::rate_of_covs(k, 0, ch, covs, scn.cc.noise_power);
  };
  // affine interference bound assembled from the linearization
  const auto rate_lb = [&](const CovSet& covs, int k) {
    const auto lin = beamform::sca_linearize(0 + k, 0, ch, anchor,
                                             scn.cc.noise_power);
    const CMat hk = ch[static_cast<std::size_t>(k)][0] *
                    ch[static_cast<std::size_t>(k)][0].adjoint();
    double full = scn.cc.noise_power;
    for (const auto& wm : covs.w) full += re_tr(hk, wm);
    full += re_tr(hk, covs.c_d);
    double ub = lin.r_hat_lo;
    for (int i = 0; i < 2; ++i) {
      if (i == k) continue;
      ub += re_tr(lin.d_matrix,
                  covs.w[static_cast<std::size_t>(i)] -
                      anchor[0].w[static_cast<std::size_t>(i)]);
    }
    ub += re_tr(lin.d_matrix, covs.c_d - anchor[0].c_d);
    return std::log2(full) - ub;
  };

  for (int k = 0; k < 2; ++k)
    CHECK(rate_lb(anchor[0], k) ==
          doctest::Approx(rate_true(anchor[0], k)).epsilon(1e-12));

  int valid = 0;
  for (int t = 0; t < 1000; ++t) {
    CovSet covs;
    covs.w = {random_psd(na, 100 + static_cast<uint64_t>(t), 0) * 0.3,
              random_psd(na, 100 + static_cast<uint64_t>(t), 4) * 0.3};
    covs.c_d = random_psd(na, 100 + static_cast<uint64_t>(t), 8) * 0.1;
    bool ok = true;
    for (int k = 0; k < 2; ++k)
      if (rate_lb(covs, k) > rate_true(covs, k) + 1e-9) ok = false;
    if (ok) ++valid;
  }
  CHECK(valid == 1000);
}

TEST_CASE("rank-one reconstruction") {
  const int na = 8;
  const CVec h0 = random_cvec(na, 11, 0);
  const CVec h1 = random_cvec(na, 12, 0);

  SUBCASE("idempotent on aligned rank-one inputs") {
    const CVec w = 0.7 * h0.normalized();
    const std::vector<CMat> wt = {w * w.adjoint()};
    const CMat cd = random_psd(na, 13) * 0.1;
    const auto r1 = beamform::reconstruct_rank1(wt, cd, {h0});
    CHECK((r1.w_star[0] * r1.w_star[0].adjoint() - wt[0]).norm() <=
          1e-10 * wt[0].norm());
    CHECK((r1.c_star - cd).norm() <= 1e-10 * std::max(1.0, cd.norm()));
  }

  SUBCASE("preserves traces, power, and the total covariance") {
    const std::vector<CMat> wt = {random_psd(na, 21) * 0.4,
                                  random_psd(na, 22) * 0.3};
    const CMat cd = random_psd(na, 23) * 0.2;
    const auto r1 = beamform::reconstruct_rank1(wt, cd, {h0, h1});

    CMat total_before = cd;
    for (const auto& wm : wt) total_before += wm;
    CMat total_after = r1.c_star;
    double power_after = r1.c_star.real().trace();
    for (int k = 0; k < 2; ++k) {
      total_after += r1.w_star[static_cast<std::size_t>(k)] *
                     r1.w_star[static_cast<std::size_t>(k)].adjoint();
      power_after += r1.w_star[static_cast<std::size_t>(k)].squaredNorm();
    }
    CHECK((total_after - total_before).norm() <= 1e-10 * total_before.norm());
    CHECK(power_after ==
          doctest::Approx(total_before.real().trace()).epsilon(1e-10));

    const CMat hk0 = h0 * h0.adjoint();
    const double before = re_tr(hk0, wt[0]);
    const double after = std::norm(h0.dot(r1.w_star[0]));
    CHECK(after == doctest::Approx(before).epsilon(1e-10));

    CHECK(conic::min_eigenvalue(conic::hermitian_embed(r1.c_star)) >= -1e-8);
  }

  SUBCASE("degenerate direction is rejected") {
    const std::vector<CMat> wt = {CMat::Zero(na, na)};
    CHECK_THROWS_AS(beamform::reconstruct_rank1(wt, CMat::Zero(na, na), {h0}),
                    std::domain_error);
  }
}

TEST_CASE("feasibility problem structure") {
  BfScenario scn = small_scenario(2, 2);
  const ChannelGrid ch = beamform::build_channels(scn);
  std::vector<CovSet> anchor(2);
  for (int n = 0; n < 2; ++n) {
    anchor[static_cast<std::size_t>(n)].w = {random_psd(8, 31) * 0.2,
                                             random_psd(8, 32) * 0.2};
    anchor[static_cast<std::size_t>(n)].c_d = random_psd(8, 33) * 0.05;
  }
  beamform::CutSet cuts;
  cuts.reset(2, 2);
  cuts.add(0, 0, 5.0);
  cuts.add(0, 1, 4.0);
  cuts.add(1, 0, 3.0);

  const double eta = scn.control[0].lqr.l_min + 0.5;
  const auto built = beamform::build_feasibility(scn, eta, ch, anchor, cuts);
  // N power + J sensing + K rate + cut rows
  CHECK(built.problem.constraints.size() ==
        static_cast<std::size_t>(2 + 2 + 2 + 3));
  // one violation block plus (K+1) covariance blocks per slot
  CHECK(built.problem.block_dims.size() == static_cast<std::size_t>(2 * 3 + 1));
  CHECK(built.problem.n_free == 4);

  CHECK_THROWS_AS(
      beamform::build_feasibility(scn, scn.control[0].lqr.l_min * 0.5, ch,
                                  anchor, cuts),
      std::domain_error);
}

TEST_CASE("cut cap evicts oldest anchors first") {
  beamform::CutSet cuts;
  cuts.cap = 3;
  cuts.reset(1, 1);
  for (int i = 0; i < 5; ++i) cuts.add(0, 0, 1.0 + i);
  REQUIRE(cuts.total() == 3);
  CHECK(cuts.anchors[0][0][0] == doctest::Approx(3.0));
  CHECK(cuts.anchors[0][0][2] == doctest::Approx(5.0));
}

TEST_CASE("single-user optimization matches the matched-filter closed form") {
  BfScenario scn = small_scenario(1, 1, -300.0 /* effectively no sensing */);
  scn.gamma_th = 0.0;
  const ChannelGrid ch = beamform::build_channels(scn);
  const auto sol = beamform::optimize(scn, 1e-5, 30);
  REQUIRE(sol.feasible);

  const double snr = scn.p_max * ch[0][0].squaredNorm() / scn.cc.noise_power;
  const double mf_rate = std::log2(1.0 + snr);
  const double eta_expect =
      control::optimal_cost_for_rate(mf_rate, scn.control[0].lqr, 4);
  CHECK(std::abs(sol.eta - eta_expect) <= 0.01 * eta_expect);
}

TEST_CASE("optimizer iteration log is monotone and feasible at the end") {
  BfScenario scn = small_scenario(2, 2, -30.0 /* light sensing demand */);
  const auto sol = beamform::optimize(scn, 1e-4, 30);
  REQUIRE(sol.feasible);
  for (std::size_t i = 1; i < sol.iterations.size(); ++i)
    CHECK(sol.iterations[i].eta <= sol.iterations[i - 1].eta + 1e-6);
  const auto rep = beamform::check_feasibility(sol, scn);
  CHECK(rep.ok(1e-6));

  // bisection monotonicity: within an outer iteration no probe above a
  // feasible level may come back infeasible
  for (const auto& a : sol.probe_history)
    for (const auto& b : sol.probe_history) {
      if (a.outer_iter != b.outer_iter) continue;
      if (a.feasible && b.eta > a.eta) CHECK(b.feasible);
    }
  // rank-one certificates
  for (const auto& covs : sol.covs) {
    for (const auto& wm : covs.w) {
      Eigen::JacobiSVD<CMat> svd(wm);
      const auto& sv = svd.singularValues();
      if (sv(0) > 1e-12) CHECK(sv(1) <= 1e-6 * sv(0));
    }
  }
}

TEST_CASE("baselines") {
  BfScenario scn = small_scenario(2, 2);

  SUBCASE("identical power uses the full budget each slot") {
    const auto sol = beamform::baseline_identical_power(scn);
    for (const auto& slot : sol.slots) {
      double used = slot.c_d.real().trace();
      for (const auto& w : slot.w) used += w.squaredNorm();
      CHECK(used == doctest::Approx(scn.p_max).epsilon(1e-12));
    }
    // single formation reduces to the full-power matched filter
    BfScenario one = small_scenario(1, 1);
    const auto mf = beamform::baseline_identical_power(one);
    const ChannelGrid ch = beamform::build_channels(one);
    const double snr = one.p_max * ch[0][0].squaredNorm() / one.cc.noise_power;
    CHECK(mf.avg_rates[0] == doctest::Approx(std::log2(1.0 + snr)));
  }

  SUBCASE("water filling reduces to the identical split at equal gains") {
    // mirrored leaders at the same distance
    BfScenario scn_eq = small_scenario(2, 1);
    scn_eq.leaders[0][0] = Vec3(30.0, 40.0, 30.0);
    scn_eq.leaders[1][0] = Vec3(-30.0, 40.0, 30.0);
    const auto wf = beamform::baseline_water_filling(scn_eq);
    const auto id = beamform::baseline_identical_power(scn_eq);
    for (int k = 0; k < 2; ++k)
      CHECK(wf.slots[0].w[static_cast<std::size_t>(k)].squaredNorm() ==
            doctest::Approx(
                id.slots[0].w[static_cast<std::size_t>(k)].squaredNorm())
                .epsilon(1e-9));
  }

  SUBCASE("water filling starves the weak user at low budgets") {
    BfScenario scn_lo = small_scenario(2, 1);
    scn_lo.leaders[0][0] = Vec3(5.0, 5.0, 30.0);     // very close
    scn_lo.leaders[1][0] = Vec3(200.0, -150.0, 30.0);  // far away
    scn_lo.p_max = 1e-4;
    const auto wf = beamform::baseline_water_filling(scn_lo);
    CHECK(wf.slots[0].w[0].squaredNorm() ==
          doctest::Approx(scn_lo.p_max).epsilon(1e-9));
    CHECK(wf.slots[0].w[1].squaredNorm() == doctest::Approx(0.0));
  }

  SUBCASE("water filling does not lose sum rate against the equal split") {
    const auto wf = beamform::baseline_water_filling(scn);
    const auto id = beamform::baseline_identical_power(scn);
    const double wf_sum = wf.avg_rates[0] + wf.avg_rates[1];
    const double id_sum = id.avg_rates[0] + id.avg_rates[1];
    CHECK(wf_sum >= id_sum - 1e-9);
  }

  SUBCASE("random baseline is seed-deterministic and full power") {
    const auto a = beamform::baseline_random(scn, 5);
    const auto b = beamform::baseline_random(scn, 5);
    CHECK(a.eta == b.eta);
    for (std::size_t n = 0; n < a.slots.size(); ++n) {
      double used = 0.0;
      for (std::size_t k = 0; k < a.slots[n].w.size(); ++k) {
        CHECK(a.slots[n].w[k] == b.slots[n].w[k]);
        used += a.slots[n].w[k].squaredNorm();
      }
      CHECK(used == doctest::Approx(scn.p_max).epsilon(1e-12));
    }
    const auto c = beamform::baseline_random(scn, 6);
    CHECK(c.eta != a.eta);
  }
}

TEST_CASE("feasibility audit flags missing sensing energy") {
  BfScenario scn = small_scenario(2, 2, 0.0 /* 1 mW threshold */);
  beamform::BeamSolution zero;
  zero.slots.resize(2);
  zero.covs.resize(2);
  for (auto& slot : zero.slots) {
    slot.w = {CVec::Zero(8), CVec::Zero(8)};
    slot.c_d = CMat::Zero(8, 8);
  }
  zero.avg_rates = {1.0, 1.0};
  zero.eta = scn.control[0].lqr.l_min * 2.0;
  const auto rep = beamform::check_feasibility(zero, scn);
  for (double m : rep.sensing_margin) CHECK(m < 0.0);
  // with no transmission the whole budget is spare
  for (double m : rep.power_margin)
    CHECK(m == doctest::Approx(scn.p_max));
  CHECK_FALSE(rep.ok(1e-6));
}
