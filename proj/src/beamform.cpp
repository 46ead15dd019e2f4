#include "lawn/beamform.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lawn/rng.hpp"

namespace lawn::beamform {

namespace {

constexpr double kLog2E = 1.4426950408889634;  // log2(e)

double re_inner(const CMat& a, const CMat& b) {
  // Re tr(a b) for Hermitian a, b
  return a.cwiseProduct(b.conjugate()).sum().real();
}

// complex Hermitian matrix recovered from an unstructured symmetric
// 2n x 2n iterate; PSD whenever the input is
CMat complexify(const conic::Mat& x) {
  const int n = static_cast<int>(x.rows()) / 2;
  const conic::Mat re =
      0.5 * (x.topLeftCorner(n, n) + x.bottomRightCorner(n, n));
  const conic::Mat im =
      0.5 * (x.bottomLeftCorner(n, n) - x.topRightCorner(n, n));
  CMat out(n, n);
  out.real() = 0.5 * (re + re.transpose());
  out.imag() = 0.5 * (im - im.transpose());
  return out;
}

struct LinData {
  double d_coef = 0.0;     // slope against the noise-normalized traces
  double lin_const = 0.0;  // bits; anchor constant of the affine bound
};

// noise-normalized interference-plus-noise total at the anchor
double v_int_scaled(int k, const CMat& htil_k, const CovSet& anchor) {
  double v = 1.0;
  for (int i = 0; i < static_cast<int>(anchor.w.size()); ++i) {
    if (i == k) continue;
    v += re_inner(htil_k, anchor.w[static_cast<std::size_t>(i)]);
  }
  v += re_inner(htil_k, anchor.c_d);
  return v;
}

// noise-normalized signal-plus-interference-plus-noise total
double v_full_scaled(const CMat& htil_k, const CovSet& covs) {
  double v = 1.0;
  for (const auto& wmat : covs.w) v += re_inner(htil_k, wmat);
  v += re_inner(htil_k, covs.c_d);
  return v;
}

LinData linearize_scaled(int k, const CMat& htil_k, const CovSet& anchor) {
  const double v0 = v_int_scaled(k, htil_k, anchor);
  LinData out;
  out.d_coef = kLog2E / v0;
  out.lin_const = std::log2(v0) - kLog2E * (v0 - 1.0) / v0;
  return out;
}

std::vector<std::vector<CMat>> scaled_channel_matrices(const BfScenario& scn,
                                                       const ChannelGrid& ch) {
  const int kf = scn.n_formations();
  std::vector<std::vector<CMat>> htil(static_cast<std::size_t>(kf));
  for (int k = 0; k < kf; ++k) {
    htil[static_cast<std::size_t>(k)].resize(
        static_cast<std::size_t>(scn.n_slots));
    for (int n = 0; n < scn.n_slots; ++n) {
      const CVec& h =
          ch[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)];
      htil[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)] =
          (h * h.adjoint()) / scn.cc.noise_power;
    }
  }
  return htil;
}

}  // namespace

void BfScenario::validate() const {
  geo.validate();
  cc.validate();
  if (n_slots < 1)
    throw std::invalid_argument("beamform: n_slots must be >= 1");
  if (leaders.empty())
    throw std::invalid_argument("beamform: need at least one formation");
  for (const auto& track : leaders)
    if (static_cast<int>(track.size()) != n_slots)
      throw std::invalid_argument("beamform: leader track length mismatch");
  if (sample_points.empty())
    throw std::invalid_argument("beamform: sample points must be nonempty");
  if (!(gamma_th >= 0.0) || !(p_max > 0.0))
    throw std::invalid_argument(
        "beamform: gamma_th >= 0 and p_max > 0 required");
  if (static_cast<int>(control.size()) != n_formations())
    throw std::invalid_argument("beamform: one control entry per formation");
}

ChannelGrid build_channels(const BfScenario& scn) {
  ChannelGrid ch(static_cast<std::size_t>(scn.n_formations()));
  for (int k = 0; k < scn.n_formations(); ++k) {
    ch[static_cast<std::size_t>(k)].resize(
        static_cast<std::size_t>(scn.n_slots));
    for (int n = 0; n < scn.n_slots; ++n)
      ch[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)] =
          radio::channel(
              scn.leaders[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)],
              scn.geo, scn.cc);
  }
  return ch;
}

Linearization sca_linearize(int k, int slot, const ChannelGrid& channels,
                            const std::vector<CovSet>& current,
                            double noise_power) {
  const CVec& h =
      channels[static_cast<std::size_t>(k)][static_cast<std::size_t>(slot)];
  const CMat hk = h * h.adjoint();
  const CovSet& cur = current[static_cast<std::size_t>(slot)];
  double denom = noise_power;
  for (int i = 0; i < static_cast<int>(cur.w.size()); ++i) {
    if (i == k) continue;
    denom += re_inner(hk, cur.w[static_cast<std::size_t>(i)]);
  }
  denom += re_inner(hk, cur.c_d);
  Linearization out;
  out.d_matrix = (kLog2E / denom) * hk;
  out.r_hat_lo = std::log2(denom);
  return out;
}

double rate_of_covs(int k, int slot, const ChannelGrid& channels,
                    const CovSet& covs, double noise_power) {
  const CVec& h =
      channels[static_cast<std::size_t>(k)][static_cast<std::size_t>(slot)];
  const CMat hk = h * h.adjoint();
  const double sig = re_inner(hk, covs.w[static_cast<std::size_t>(k)]);
  double interf = noise_power;
  for (int i = 0; i < static_cast<int>(covs.w.size()); ++i) {
    if (i == k) continue;
    interf += re_inner(hk, covs.w[static_cast<std::size_t>(i)]);
  }
  interf += re_inner(hk, covs.c_d);
  return std::log2(1.0 + sig / interf);
}

void CutSet::reset(int n_formations, int n_slots) {
  anchors.assign(
      static_cast<std::size_t>(n_formations),
      std::vector<std::vector<double>>(static_cast<std::size_t>(n_slots)));
}

void CutSet::add(int k, int slot, double v0) {
  auto& list =
      anchors[static_cast<std::size_t>(k)][static_cast<std::size_t>(slot)];
  if (static_cast<int>(list.size()) >= cap) list.erase(list.begin());
  list.push_back(v0);
}

int CutSet::total() const {
  int n = 0;
  for (const auto& per_k : anchors)
    for (const auto& per_slot : per_k) n += static_cast<int>(per_slot.size());
  return n;
}

double rate_floor(const BfScenario& scn, int k, double eta) {
  const auto& fc = scn.control[static_cast<std::size_t>(k)];
  if (std::isinf(eta)) return fc.lqr.h;
  if (!(eta > fc.lqr.l_min))
    throw std::domain_error("rate_floor: eta at or below the cost floor");
  return fc.lqr.h + 0.5 * fc.n1 *
                        std::log2(1.0 + fc.n1 * fc.lqr.det_nm_root /
                                            (eta - fc.lqr.l_min));
}

BuildResult build_feasibility(const BfScenario& scn, double eta,
                              const ChannelGrid& channels,
                              const std::vector<CovSet>& lin_point,
                              const CutSet& cuts) {
  for (const auto& fc : scn.control)
    if (!(eta > fc.lqr.l_min))
      throw std::domain_error(
          "build_feasibility: eta at or below a cost floor");

  const int kf = scn.n_formations();
  const int ns = scn.n_slots;
  const int na = scn.geo.n_s;
  const int jn = static_cast<int>(scn.sample_points.size());
  const auto htil = scaled_channel_matrices(scn, channels);

  BuildResult out;
  conic::ConicProblem& p = out.problem;
  Layout& lay = out.layout;

  lay.w_block.assign(static_cast<std::size_t>(kf),
                     std::vector<int>(static_cast<std::size_t>(ns)));
  lay.cd_block.resize(static_cast<std::size_t>(ns));
  lay.t_free.assign(static_cast<std::size_t>(kf),
                    std::vector<int>(static_cast<std::size_t>(ns)));

  for (int n = 0; n < ns; ++n) {
    for (int k = 0; k < kf; ++k)
      lay.w_block[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)] =
          p.add_block(2 * na);
    lay.cd_block[static_cast<std::size_t>(n)] = p.add_block(2 * na);
  }
  lay.violation_block = p.add_block(1);

  for (int k = 0; k < kf; ++k)
    for (int n = 0; n < ns; ++n)
      lay.t_free[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)] =
          p.add_free();

  // shared per-block dictionary: [0] identity/2, [1..jn] embedded sample
  // outer products /2, [jn+1..jn+kf] embedded channel outer products of
  // the block's slot /2
  const conic::Mat half_id = 0.5 * conic::Mat::Identity(2 * na, 2 * na);
  std::vector<conic::Mat> embed_a(static_cast<std::size_t>(jn));
  for (int j = 0; j < jn; ++j) {
    const CVec a = radio::steering_vector(
        scn.sample_points[static_cast<std::size_t>(j)], scn.geo);
    embed_a[static_cast<std::size_t>(j)] =
        0.5 * conic::hermitian_embed(a * a.adjoint());
  }
  std::vector<std::vector<conic::Mat>> embed_h(static_cast<std::size_t>(kf));
  for (int k = 0; k < kf; ++k) {
    embed_h[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(ns));
    for (int n = 0; n < ns; ++n)
      embed_h[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)] =
          0.5 *
          conic::hermitian_embed(
              htil[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)]);
  }
  const auto fill_dict = [&](int block, int n) {
    p.add_matrix(block, half_id);
    for (int j = 0; j < jn; ++j)
      p.add_matrix(block, embed_a[static_cast<std::size_t>(j)]);
    for (int k = 0; k < kf; ++k)
      p.add_matrix(
          block,
          embed_h[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)]);
  };
  for (int n = 0; n < ns; ++n) {
    for (int k = 0; k < kf; ++k)
      fill_dict(
          lay.w_block[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)],
          n);
    fill_dict(lay.cd_block[static_cast<std::size_t>(n)], n);
  }
  const int dict_id = 0;
  const auto dict_a = [&](int j) { return 1 + j; };
  const auto dict_h = [&](int k) { return 1 + jn + k; };

  const int v_dict = p.add_matrix(lay.violation_block, conic::Mat::Ones(1, 1));
  p.objective.blocks.push_back({lay.violation_block, v_dict, 1.0});

  // per-slot power
  for (int n = 0; n < ns; ++n) {
    conic::Constraint c;
    for (int k = 0; k < kf; ++k)
      c.lhs.blocks.push_back(
          {lay.w_block[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)],
           dict_id, 1.0});
    c.lhs.blocks.push_back(
        {lay.cd_block[static_cast<std::size_t>(n)], dict_id, 1.0});
    c.rel = conic::Relation::le;
    c.rhs = scn.p_max;
    p.constraints.push_back(std::move(c));
  }

  // accumulated sensing gains; right-hand sides carry a small tightening
  // so accepted designs meet the true thresholds to reporting precision
  for (int j = 0; j < jn; ++j) {
    conic::Constraint c;
    for (int n = 0; n < ns; ++n) {
      for (int k = 0; k < kf; ++k)
        c.lhs.blocks.push_back(
            {lay.w_block[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)],
             dict_a(j), 1.0});
      c.lhs.blocks.push_back(
          {lay.cd_block[static_cast<std::size_t>(n)], dict_a(j), 1.0});
    }
    c.rel = conic::Relation::ge;
    const double d2 =
        (scn.sample_points[static_cast<std::size_t>(j)] - scn.geo.gbs_pos)
            .squaredNorm();
    c.rhs = scn.gamma_th * d2 + 5e-6 * std::max(1.0, scn.gamma_th * d2);
    p.constraints.push_back(std::move(c));
  }

  // per-formation rate constraints with the interference log replaced by
  // its affine bound at the linearization point, plus the probe slack
  const double wn = scn.cc.bandwidth / static_cast<double>(ns);
  for (int k = 0; k < kf; ++k) {
    conic::Constraint c;
    double rhs = rate_floor(scn, k, eta);
    for (int n = 0; n < ns; ++n) {
      c.lhs.free_vars.push_back(
          {lay.t_free[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)],
           wn});
      const LinData lin = linearize_scaled(
          k, htil[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)],
          lin_point[static_cast<std::size_t>(n)]);
      rhs += wn * lin.lin_const;
      for (int i = 0; i < kf; ++i) {
        if (i == k) continue;
        c.lhs.blocks.push_back(
            {lay.w_block[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)],
             dict_h(k), -wn * lin.d_coef});
      }
      c.lhs.blocks.push_back({lay.cd_block[static_cast<std::size_t>(n)],
                              dict_h(k), -wn * lin.d_coef});
    }
    c.lhs.blocks.push_back({lay.violation_block, v_dict, 1.0});
    c.rel = conic::Relation::ge;
    c.rhs = rhs;
    p.constraints.push_back(std::move(c));
  }

  // tangent cuts: t_{k,n} bounded by tangents of the concave log total
  for (int k = 0; k < kf; ++k) {
    for (int n = 0; n < ns; ++n) {
      for (const double v0 : cuts.anchors[static_cast<std::size_t>(k)]
                                         [static_cast<std::size_t>(n)]) {
        conic::Constraint c;
        c.lhs.free_vars.push_back(
            {lay.t_free[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)],
             1.0});
        const double slope = 1.0 / (v0 * std::log(2.0));
        for (int i = 0; i < kf; ++i)
          c.lhs.blocks.push_back(
              {lay.w_block[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)],
               dict_h(k), -slope});
        c.lhs.blocks.push_back(
            {lay.cd_block[static_cast<std::size_t>(n)], dict_h(k), -slope});
        c.rel = conic::Relation::le;
        c.rhs = std::log2(v0) - (v0 - 1.0) * slope;
        p.constraints.push_back(std::move(c));
      }
    }
  }

  return out;
}

Rank1Result reconstruct_rank1(const std::vector<CMat>& w_tilde,
                              const CMat& c_tilde,
                              const std::vector<CVec>& channels_at_slot) {
  const int kf = static_cast<int>(w_tilde.size());
  Rank1Result out;
  out.w_star.resize(static_cast<std::size_t>(kf));
  CMat total = c_tilde;
  for (const auto& wm : w_tilde) total += wm;
  out.c_star = total;
  for (int k = 0; k < kf; ++k) {
    const CVec& h = channels_at_slot[static_cast<std::size_t>(k)];
    const CVec wh = w_tilde[static_cast<std::size_t>(k)] * h;
    const double power = (h.adjoint() * wh).real()(0, 0);  // tr(W H)
    if (!(power > 0.0))
      throw std::domain_error(
          "reconstruct_rank1: degenerate direction, tr(W H) = 0");
    out.w_star[static_cast<std::size_t>(k)] = wh / std::sqrt(power);
    out.c_star -= out.w_star[static_cast<std::size_t>(k)] *
                  out.w_star[static_cast<std::size_t>(k)].adjoint();
  }
  return out;
}

namespace {

struct ProbeOutcome {
  bool feasible = false;
  double v_star = 0.0;
  double max_violation = 0.0;
  int rounds = 0;
  std::vector<CovSet> covs;
};

std::vector<CovSet> extract_covs(const conic::ConicSolution& sol,
                                 const Layout& lay, int kf, int ns) {
  std::vector<CovSet> covs(static_cast<std::size_t>(ns));
  for (int n = 0; n < ns; ++n) {
    covs[static_cast<std::size_t>(n)].w.resize(static_cast<std::size_t>(kf));
    for (int k = 0; k < kf; ++k)
      covs[static_cast<std::size_t>(n)].w[static_cast<std::size_t>(k)] =
          complexify(sol.block_values[static_cast<std::size_t>(
              lay.w_block[static_cast<std::size_t>(k)]
                         [static_cast<std::size_t>(n)])]);
    covs[static_cast<std::size_t>(n)].c_d =
        complexify(sol.block_values[static_cast<std::size_t>(
            lay.cd_block[static_cast<std::size_t>(n)])]);
  }
  return covs;
}

ProbeOutcome run_probe(const BfScenario& scn, double eta,
                       const ChannelGrid& channels,
                       const std::vector<std::vector<CMat>>& htil,
                       const std::vector<CovSet>& lin_point, CutSet& cuts,
                       double conic_tol) {
  constexpr double kProbeTol = 1e-5;  // accepted rate slack, bits
  constexpr double kCutTol = 1e-6;    // accepted cut violation, bits
  constexpr int kMaxRounds = 30;

  const int kf = scn.n_formations();
  const int ns = scn.n_slots;
  ProbeOutcome out;

  for (int round = 0; round < kMaxRounds; ++round) {
    out.rounds = round + 1;
    BuildResult built = build_feasibility(scn, eta, channels, lin_point, cuts);
    const conic::ConicSolution sol = conic::solve(built.problem, conic_tol, 120);
    const bool usable =
        sol.status == conic::SolveStatus::optimal ||
        (sol.status == conic::SolveStatus::max_iter &&
         std::max({sol.residuals.primal, sol.residuals.dual,
                   sol.residuals.gap}) <= 1e-5);
    if (!usable) {
      out.feasible = false;
      return out;
    }
    out.v_star = sol.block_values[static_cast<std::size_t>(
        built.layout.violation_block)](0, 0);
    if (out.v_star > kProbeTol) {
      // the cuts over-estimate the attainable rates, so an infeasible
      // relaxation certifies infeasibility of the true subproblem
      out.feasible = false;
      return out;
    }
    std::vector<CovSet> covs = extract_covs(sol, built.layout, kf, ns);
    double worst = 0.0;
    for (int k = 0; k < kf; ++k) {
      for (int n = 0; n < ns; ++n) {
        const double v_true = v_full_scaled(
            htil[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)],
            covs[static_cast<std::size_t>(n)]);
        const double t_val = sol.free_values(
            built.layout
                .t_free[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)]);
        const double viol = t_val - std::log2(v_true);
        if (viol > worst) worst = viol;
        if (viol > 0.1 * kCutTol) cuts.add(k, n, v_true);
      }
    }
    out.max_violation = worst;
    if (worst <= kCutTol) {
      out.feasible = true;
      out.covs = std::move(covs);
      return out;
    }
  }
  out.feasible = false;
  return out;
}

void evaluate_solution(BeamSolution& sol, const BfScenario& scn,
                       const ChannelGrid& channels) {
  const int kf = scn.n_formations();
  const int ns = scn.n_slots;
  sol.avg_rates.assign(static_cast<std::size_t>(kf), 0.0);
  for (int n = 0; n < ns; ++n) {
    std::vector<CVec> ch_slot(static_cast<std::size_t>(kf));
    for (int k = 0; k < kf; ++k)
      ch_slot[static_cast<std::size_t>(k)] =
          channels[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)];
    for (int k = 0; k < kf; ++k) {
      const double s = radio::sinr(
          k, ch_slot, sol.slots[static_cast<std::size_t>(n)], scn.cc);
      sol.avg_rates[static_cast<std::size_t>(k)] +=
          radio::rate(s, scn.cc) / static_cast<double>(ns);
    }
  }
  sol.sample_gains.assign(scn.sample_points.size(), 0.0);
  for (std::size_t j = 0; j < scn.sample_points.size(); ++j)
    for (int n = 0; n < ns; ++n)
      sol.sample_gains[j] += radio::beampattern_gain(
          scn.sample_points[j], sol.slots[static_cast<std::size_t>(n)],
          scn.geo);

  sol.eta = 0.0;
  for (int k = 0; k < kf; ++k) {
    const auto& fc = scn.control[static_cast<std::size_t>(k)];
    double lk;
    if (sol.avg_rates[static_cast<std::size_t>(k)] > fc.lqr.h)
      lk = control::optimal_cost_for_rate(
          sol.avg_rates[static_cast<std::size_t>(k)], fc.lqr, fc.n1);
    else
      lk = std::numeric_limits<double>::infinity();
    sol.eta = std::max(sol.eta, lk);
  }
}

// tolerant rank-one pass used inside the optimizer; a formation whose
// covariance carries no energy toward its leader gets a zero beamformer
// and its power stays in the dedicated covariance
void covs_to_slots(BeamSolution& sol, const BfScenario& scn,
                   const ChannelGrid& channels) {
  const int ns = scn.n_slots;
  const int kf = scn.n_formations();
  sol.slots.resize(static_cast<std::size_t>(ns));
  for (int n = 0; n < ns; ++n) {
    auto& covs = sol.covs[static_cast<std::size_t>(n)];
    CMat total = covs.c_d;
    for (const auto& wm : covs.w) total += wm;
    auto& slot = sol.slots[static_cast<std::size_t>(n)];
    slot.w.assign(static_cast<std::size_t>(kf), CVec::Zero(scn.geo.n_s));
    CMat c_star = total;
    for (int k = 0; k < kf; ++k) {
      const CVec& h =
          channels[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)];
      const CVec wh = covs.w[static_cast<std::size_t>(k)] * h;
      const double power = (h.adjoint() * wh).real()(0, 0);
      if (power > 1e-14 * scn.p_max) {
        slot.w[static_cast<std::size_t>(k)] = wh / std::sqrt(power);
        c_star -= slot.w[static_cast<std::size_t>(k)] *
                  slot.w[static_cast<std::size_t>(k)].adjoint();
      }
    }
    slot.c_d = c_star;
    for (int k = 0; k < kf; ++k)
      covs.w[static_cast<std::size_t>(k)] =
          slot.w[static_cast<std::size_t>(k)] *
          slot.w[static_cast<std::size_t>(k)].adjoint();
    covs.c_d = c_star;
  }
}

BeamSolution matched_filter_solution(
    const BfScenario& scn, const ChannelGrid& channels,
    const std::vector<std::vector<double>>& per_slot_powers) {
  const int kf = scn.n_formations();
  const int ns = scn.n_slots;
  BeamSolution sol;
  sol.slots.resize(static_cast<std::size_t>(ns));
  sol.covs.resize(static_cast<std::size_t>(ns));
  for (int n = 0; n < ns; ++n) {
    auto& slot = sol.slots[static_cast<std::size_t>(n)];
    slot.w.resize(static_cast<std::size_t>(kf));
    slot.c_d = CMat::Zero(scn.geo.n_s, scn.geo.n_s);
    sol.covs[static_cast<std::size_t>(n)].w.resize(
        static_cast<std::size_t>(kf));
    sol.covs[static_cast<std::size_t>(n)].c_d = slot.c_d;
    for (int k = 0; k < kf; ++k) {
      const CVec& h =
          channels[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)];
      const double pk =
          per_slot_powers[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
      slot.w[static_cast<std::size_t>(k)] = std::sqrt(pk) * h.normalized();
      sol.covs[static_cast<std::size_t>(n)].w[static_cast<std::size_t>(k)] =
          slot.w[static_cast<std::size_t>(k)] *
          slot.w[static_cast<std::size_t>(k)].adjoint();
    }
  }
  evaluate_solution(sol, scn, channels);
  return sol;
}

}  // namespace

BeamSolution baseline_identical_power(const BfScenario& scn) {
  scn.validate();
  const ChannelGrid channels = build_channels(scn);
  const std::vector<std::vector<double>> powers(
      static_cast<std::size_t>(scn.n_slots),
      std::vector<double>(static_cast<std::size_t>(scn.n_formations()),
                          scn.p_max / scn.n_formations()));
  return matched_filter_solution(scn, channels, powers);
}

BeamSolution baseline_water_filling(const BfScenario& scn) {
  scn.validate();
  const ChannelGrid channels = build_channels(scn);
  const int kf = scn.n_formations();
  const int ns = scn.n_slots;
  std::vector<std::vector<double>> pks(
      static_cast<std::size_t>(ns),
      std::vector<double>(static_cast<std::size_t>(kf), 0.0));
  for (int n = 0; n < ns; ++n) {
    std::vector<double> inv_g(static_cast<std::size_t>(kf));
    for (int k = 0; k < kf; ++k) {
      const double g =
          channels[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)]
              .squaredNorm() /
          scn.cc.noise_power;
      inv_g[static_cast<std::size_t>(k)] = 1.0 / g;
    }
    std::vector<int> order(static_cast<std::size_t>(kf));
    for (int k = 0; k < kf; ++k) order[static_cast<std::size_t>(k)] = k;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return inv_g[static_cast<std::size_t>(a)] <
             inv_g[static_cast<std::size_t>(b)];
    });
    // raise the water level over the strongest users until it reaches
    // the next inverse gain or everyone is active
    for (int cnt = 1; cnt <= kf; ++cnt) {
      double sum_inv = 0.0;
      for (int t = 0; t < cnt; ++t)
        sum_inv +=
            inv_g[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])];
      const double level = (scn.p_max + sum_inv) / cnt;
      if (cnt == kf ||
          level <=
              inv_g[static_cast<std::size_t>(order[static_cast<std::size_t>(cnt)])]) {
        for (int t = 0; t < cnt; ++t) {
          const int k = order[static_cast<std::size_t>(t)];
          pks[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] =
              std::max(0.0, level - inv_g[static_cast<std::size_t>(k)]);
        }
        break;
      }
    }
  }
  return matched_filter_solution(scn, channels, pks);
}

BeamSolution baseline_random(const BfScenario& scn, uint64_t seed) {
  scn.validate();
  const ChannelGrid channels = build_channels(scn);
  const CounterRng rng(seed);
  const int kf = scn.n_formations();
  const int ns = scn.n_slots;
  BeamSolution sol;
  sol.slots.resize(static_cast<std::size_t>(ns));
  sol.covs.resize(static_cast<std::size_t>(ns));
  for (int n = 0; n < ns; ++n) {
    auto& slot = sol.slots[static_cast<std::size_t>(n)];
    slot.w.resize(static_cast<std::size_t>(kf));
    slot.c_d = CMat::Zero(scn.geo.n_s, scn.geo.n_s);
    sol.covs[static_cast<std::size_t>(n)].w.resize(static_cast<std::size_t>(kf));
    sol.covs[static_cast<std::size_t>(n)].c_d = slot.c_d;
    for (int k = 0; k < kf; ++k) {
      CVec dir(scn.geo.n_s);
      for (int i = 0; i < scn.geo.n_s; ++i)
        dir(i) = std::complex<double>(
            rng.std_normal(30, static_cast<uint64_t>(n), static_cast<uint64_t>(k),
                       static_cast<uint64_t>(2 * i)),
            rng.std_normal(30, static_cast<uint64_t>(n), static_cast<uint64_t>(k),
                       static_cast<uint64_t>(2 * i + 1)));
      slot.w[static_cast<std::size_t>(k)] =
          std::sqrt(scn.p_max / kf) * dir.normalized();
      sol.covs[static_cast<std::size_t>(n)].w[static_cast<std::size_t>(k)] =
          slot.w[static_cast<std::size_t>(k)] *
          slot.w[static_cast<std::size_t>(k)].adjoint();
    }
  }
  evaluate_solution(sol, scn, channels);
  return sol;
}

BeamSolution optimize(const BfScenario& scn, double tol, int max_outer) {
  scn.validate();
  const ChannelGrid channels = build_channels(scn);
  const int kf = scn.n_formations();
  const int ns = scn.n_slots;
  // identical-power matched-filter start; a small isotropic dedicated
  // covariance keeps the interference denominators strictly positive
  const double eps = 1e-4 * scn.p_max / scn.geo.n_s;
  const double comm_power = scn.p_max * (1.0 - 1e-4);
  std::vector<CovSet> init(static_cast<std::size_t>(ns));
  for (int n = 0; n < ns; ++n) {
    init[static_cast<std::size_t>(n)].w.resize(static_cast<std::size_t>(kf));
    for (int k = 0; k < kf; ++k) {
      const CVec& h =
          channels[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)];
      const CVec w = std::sqrt(comm_power / kf) * h.normalized();
      init[static_cast<std::size_t>(n)].w[static_cast<std::size_t>(k)] =
          w * w.adjoint();
    }
    init[static_cast<std::size_t>(n)].c_d =
        eps * CMat::Identity(scn.geo.n_s, scn.geo.n_s);
  }
  return optimize(scn, init, tol, max_outer);
}

BeamSolution optimize(const BfScenario& scn, const std::vector<CovSet>& init,
                      double tol, int max_outer) {
  scn.validate();
  const ChannelGrid channels = build_channels(scn);
  const auto htil = scaled_channel_matrices(scn, channels);
  const int kf = scn.n_formations();
  const int ns = scn.n_slots;

  BeamSolution sol;

  // sensing attainability first: maximize the worst accumulated-gain
  // margin under the power budget alone
  if (scn.gamma_th > 0.0) {
    conic::ConicProblem sp;
    const int na = scn.geo.n_s;
    std::vector<conic::Mat> embed_a;
    for (const auto& t : scn.sample_points) {
      const CVec a = radio::steering_vector(t, scn.geo);
      embed_a.push_back(0.5 * conic::hermitian_embed(a * a.adjoint()));
    }
    std::vector<int> cov_blocks;
    for (int n = 0; n < ns; ++n) cov_blocks.push_back(sp.add_block(2 * na));
    for (int block : cov_blocks) {
      sp.add_matrix(block, 0.5 * conic::Mat::Identity(2 * na, 2 * na));
      for (const auto& ea : embed_a) sp.add_matrix(block, ea);
    }
    const int s_free = sp.add_free();
    sp.objective.free_vars.push_back({s_free, -1.0});  // maximize the margin
    for (int n = 0; n < ns; ++n) {
      conic::Constraint c;
      c.lhs.blocks.push_back({cov_blocks[static_cast<std::size_t>(n)], 0, 1.0});
      c.rel = conic::Relation::le;
      c.rhs = scn.p_max;
      sp.constraints.push_back(std::move(c));
    }
    for (std::size_t j = 0; j < scn.sample_points.size(); ++j) {
      conic::Constraint c;
      for (int n = 0; n < ns; ++n)
        c.lhs.blocks.push_back({cov_blocks[static_cast<std::size_t>(n)],
                                1 + static_cast<int>(j), 1.0});
      c.lhs.free_vars.push_back({s_free, -1.0});
      c.rel = conic::Relation::ge;
      c.rhs = scn.gamma_th *
              (scn.sample_points[j] - scn.geo.gbs_pos).squaredNorm();
      sp.constraints.push_back(std::move(c));
    }
    const conic::ConicSolution ssol = conic::solve(sp, 1e-7, 120);
    if (ssol.status == conic::SolveStatus::optimal &&
        ssol.free_values(s_free) < 0.0) {
      sol.feasible = false;
      sol.message =
          "infeasible: sensing thresholds unreachable under the power budget "
          "(binding: sensing/power)";
      return sol;
    }
  }

  const BeamSolution ident = baseline_identical_power(scn);
  double eta_low = 0.0;
  for (const auto& fc : scn.control)
    eta_low = std::max(eta_low, fc.lqr.l_min * (1.0 + 1e-6));
  const double eta_high0 = std::isinf(ident.eta)
                               ? std::max(1.0, eta_low) * 1e3
                               : ident.eta;

  std::vector<CovSet> current = init;
  double eta_prev = std::numeric_limits<double>::infinity();
  CutSet cuts;
  std::vector<IterationLogRow> log_rows;
  std::vector<ProbeRecord> probe_log;

  for (int outer = 0; outer < max_outer; ++outer) {
    cuts.reset(kf, ns);
    for (int k = 0; k < kf; ++k)
      for (int n = 0; n < ns; ++n)
        cuts.add(k, n,
                 v_full_scaled(htil[static_cast<std::size_t>(k)]
                                   [static_cast<std::size_t>(n)],
                               current[static_cast<std::size_t>(n)]));

    int probes = 0;
    double hi = std::min(eta_prev, eta_high0);
    double lo = eta_low;
    std::vector<CovSet> best;
    double accept_violation = 0.0;

    ProbeOutcome top = run_probe(scn, hi, channels, htil, current, cuts, 1e-7);
    ++probes;
    probe_log.push_back({outer, hi, top.feasible});
    while (!top.feasible) {
      hi *= 2.0;
      if (hi > eta_high0 * 1e3) {
        sol.feasible = false;
        sol.message =
            "infeasible: no attainable max-cost level below the cap "
            "(binding: rate constraints against sensing/power)";
        sol.iterations = log_rows;
        sol.probe_history = probe_log;
        return sol;
      }
      top = run_probe(scn, hi, channels, htil, current, cuts, 1e-7);
      ++probes;
      probe_log.push_back({outer, hi, top.feasible});
    }
    best = std::move(top.covs);
    accept_violation = top.max_violation;

    while (hi - lo > tol) {
      const double mid = 0.5 * (hi + lo);
      ProbeOutcome pr = run_probe(scn, mid, channels, htil, current, cuts, 1e-7);
      ++probes;
      probe_log.push_back({outer, mid, pr.feasible});
      if (pr.feasible) {
        hi = mid;
        best = std::move(pr.covs);
        accept_violation = pr.max_violation;
      } else {
        lo = mid;
      }
    }

    BeamSolution cand;
    cand.covs = std::move(best);
    covs_to_slots(cand, scn, channels);
    evaluate_solution(cand, scn, channels);
    cand.feasible = true;

    IterationLogRow row;
    row.outer_iter = outer;
    row.eta = cand.eta;
    row.probe_count = probes;
    row.cuts_total = cuts.total();
    row.max_violation = accept_violation;
    log_rows.push_back(row);

    current = cand.covs;
    sol = std::move(cand);
    if (std::abs(eta_prev - sol.eta) <= tol) {
      eta_prev = sol.eta;
      break;
    }
    eta_prev = sol.eta;
  }

  sol.iterations = log_rows;
  sol.probe_history = probe_log;
  return sol;
}

FeasibilityReport check_feasibility(const BeamSolution& sol,
                                    const BfScenario& scn) {
  scn.validate();
  FeasibilityReport rep;
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (int n = 0; n < scn.n_slots; ++n) {
    double used = 0.0;
    for (const auto& w : sol.slots[static_cast<std::size_t>(n)].w)
      used += w.squaredNorm();
    used += sol.slots[static_cast<std::size_t>(n)].c_d.real().trace();
    rep.power_margin.push_back(scn.p_max - used);
    rep.min_margin = std::min(rep.min_margin, rep.power_margin.back());
  }
  for (std::size_t j = 0; j < scn.sample_points.size(); ++j) {
    double gain = 0.0;
    for (int n = 0; n < scn.n_slots; ++n)
      gain += radio::beampattern_gain(
          scn.sample_points[j], sol.slots[static_cast<std::size_t>(n)],
          scn.geo);
    const double d2 = (scn.sample_points[j] - scn.geo.gbs_pos).squaredNorm();
    rep.sensing_margin.push_back(gain - scn.gamma_th * d2);
    rep.min_margin = std::min(rep.min_margin, rep.sensing_margin.back());
  }
  for (int k = 0; k < scn.n_formations(); ++k) {
    const double margin = sol.avg_rates[static_cast<std::size_t>(k)] -
                          rate_floor(scn, k, sol.eta);
    rep.rate_margin.push_back(margin);
    rep.min_margin = std::min(rep.min_margin, margin);
  }
  return rep;
}

}  // namespace lawn::beamform
