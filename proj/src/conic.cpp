#include "lawn/conic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace lawn::conic {

int ConicProblem::add_block(int dim) {
  if (dim < 1) throw std::invalid_argument("conic: block dim must be >= 1");
  block_dims.push_back(dim);
  dict.emplace_back();
  return static_cast<int>(block_dims.size()) - 1;
}

int ConicProblem::add_free() { return n_free++; }

int ConicProblem::add_matrix(int block, const Mat& m) {
  if (block < 0 || block >= static_cast<int>(block_dims.size()))
    throw std::invalid_argument("conic: bad block index");
  const int n = block_dims[static_cast<std::size_t>(block)];
  if (m.rows() != n || m.cols() != n)
    throw std::invalid_argument("conic: coefficient dimension mismatch");
  dict[static_cast<std::size_t>(block)].push_back(
      0.5 * (m + m.transpose()));
  return static_cast<int>(dict[static_cast<std::size_t>(block)].size()) - 1;
}

namespace {

void check_functional(const ConicProblem& p, const LinearFunctional& f,
                      const char* where) {
  for (const auto& t : f.blocks) {
    if (t.block < 0 || t.block >= static_cast<int>(p.block_dims.size()) ||
        t.dict < 0 ||
        t.dict >= static_cast<int>(p.dict[static_cast<std::size_t>(t.block)].size()))
      throw std::invalid_argument(std::string("conic: bad term in ") + where);
    if (!std::isfinite(t.scale))
      throw std::invalid_argument(std::string("conic: non-finite scale in ") +
                                  where);
  }
  for (const auto& t : f.free_vars) {
    if (t.index < 0 || t.index >= p.n_free)
      throw std::invalid_argument(std::string("conic: bad free index in ") +
                                  where);
    if (!std::isfinite(t.coeff))
      throw std::invalid_argument(std::string("conic: non-finite coeff in ") +
                                  where);
  }
}

}  // namespace

void ConicProblem::validate() const {
  for (const auto& per_block : dict)
    for (const auto& m : per_block)
      if (!m.allFinite())
        throw std::invalid_argument("conic: non-finite coefficient matrix");
  check_functional(*this, objective, "objective");
  for (const auto& c : constraints) {
    check_functional(*this, c.lhs, "constraint");
    if (!std::isfinite(c.rhs))
      throw std::invalid_argument("conic: non-finite rhs");
  }
}

Mat hermitian_embed(const Eigen::MatrixXcd& h) {
  const int n = static_cast<int>(h.rows());
  if (h.cols() != n)
    throw std::invalid_argument("hermitian_embed: matrix must be square");
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("hermitian_embed: input is not Hermitian");
  Mat out(2 * n, 2 * n);
  const Mat re = h.real();
  const Mat im = h.imag();
  out.topLeftCorner(n, n) = re;
  out.topRightCorner(n, n) = -im;
  out.bottomLeftCorner(n, n) = im;
  out.bottomRightCorner(n, n) = re;
  return out;
}

double min_eigenvalue(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void dump(const ConicProblem& p, std::ostream& os) {
  os << "conic-problem v1\n";
  os << "blocks " << p.block_dims.size();
  for (int d : p.block_dims) os << ' ' << d;
  os << "\nfree " << p.n_free << "\n";
  const auto put_functional = [&](const LinearFunctional& f) {
    for (const auto& t : f.blocks) {
      const Mat& m = p.dict[static_cast<std::size_t>(t.block)]
                           [static_cast<std::size_t>(t.dict)];
      for (int i = 0; i < m.rows(); ++i)
        for (int j = i; j < m.cols(); ++j)
          if (m(i, j) != 0.0)
            os << " b" << t.block << ':' << i << ':' << j << ':'
               << t.scale * m(i, j);
    }
    for (const auto& t : f.free_vars)
      os << " f" << t.index << ':' << t.coeff;
  };
  os << "objective";
  put_functional(p.objective);
  os << "\n";
  for (const auto& c : p.constraints) {
    os << "con "
       << (c.rel == Relation::eq ? "=" : (c.rel == Relation::le ? "<=" : ">="))
       << ' ' << c.rhs;
    put_functional(c.lhs);
    os << "\n";
  }
  os << "end\n";
}

// ---------------------------------------------------------------------------
// interior-point solver
// ---------------------------------------------------------------------------

namespace {

struct Touch {
  int con;
  int dict;
  double scale;
};

struct Slack {
  int row;
  double coeff;  // ±1 on the scaled constraint row
};

struct Workspace {
  int m = 0;
  int n_free = 0;
  std::vector<int> dims;
  std::vector<std::vector<Mat>> dict;       // per block
  std::vector<std::vector<Touch>> touches;  // per block
  std::vector<Mat> cmat;                    // objective per block
  Vec b;
  Mat efree;   // m x n_free
  Vec d_free;
  std::vector<Slack> slacks;
  std::vector<std::vector<int>> slack_at_row;  // row -> slack indices
  double scale_c = 1.0;
  double scale_b = 1.0;
};

// step to the boundary of the PSD cone: largest a in (0, 1] with
// s + a*ds PSD (via eigenvalues of L^{-1} ds L^{-T})
double max_psd_step(const Mat& s, const Mat& ds) {
  Eigen::LLT<Mat> llt(s);
  if (llt.info() != Eigen::Success) return 0.0;
  const Mat l = llt.matrixL();
  Mat w = l.triangularView<Eigen::Lower>().solve(ds);
  w = l.triangularView<Eigen::Lower>()
          .solve(w.transpose())
          .transpose()
          .eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (w + w.transpose()),
                                        Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0.0) return 1.0;
  return std::min(1.0, -1.0 / lmin);
}

double frob_inner(const Mat& a, const Mat& bt) {
  // tr(a * bt) with a symmetric
  return a.cwiseProduct(bt.transpose()).sum();
}

}  // namespace

ConicSolution solve(const ConicProblem& prob, double tol, int max_iter) {
  prob.validate();

  Workspace w;
  const int nb = static_cast<int>(prob.block_dims.size());
  w.dims = prob.block_dims;
  w.dict = prob.dict;
  w.n_free = prob.n_free;
  w.m = static_cast<int>(prob.constraints.size());
  w.touches.resize(static_cast<std::size_t>(nb));
  w.b = Vec::Zero(w.m);
  w.efree = Mat::Zero(w.m, w.n_free);
  w.d_free = Vec::Zero(w.n_free);
  for (const auto& t : prob.objective.free_vars)
    w.d_free(t.index) += t.coeff;

  // objective matrices per block
  w.cmat.resize(static_cast<std::size_t>(nb));
  for (int bidx = 0; bidx < nb; ++bidx)
    w.cmat[static_cast<std::size_t>(bidx)] =
        Mat::Zero(w.dims[static_cast<std::size_t>(bidx)],
                  w.dims[static_cast<std::size_t>(bidx)]);
  for (const auto& t : prob.objective.blocks)
    w.cmat[static_cast<std::size_t>(t.block)] +=
        t.scale * prob.dict[static_cast<std::size_t>(t.block)]
                           [static_cast<std::size_t>(t.dict)];

  // row scaling, then slack conversion
  w.slack_at_row.resize(static_cast<std::size_t>(w.m));
  for (int i = 0; i < w.m; ++i) {
    const auto& c = prob.constraints[static_cast<std::size_t>(i)];
    double norm = std::abs(c.rhs);
    for (const auto& t : c.lhs.blocks)
      norm = std::max(norm,
                      std::abs(t.scale) *
                          prob.dict[static_cast<std::size_t>(t.block)]
                                   [static_cast<std::size_t>(t.dict)]
                              .cwiseAbs()
                              .maxCoeff());
    for (const auto& t : c.lhs.free_vars)
      norm = std::max(norm, std::abs(t.coeff));
    const double s = norm > 0.0 ? 1.0 / norm : 1.0;

    w.b(i) = c.rhs * s;
    for (const auto& t : c.lhs.blocks)
      w.touches[static_cast<std::size_t>(t.block)].push_back(
          {i, t.dict, t.scale * s});
    for (const auto& t : c.lhs.free_vars) w.efree(i, t.index) += t.coeff * s;
    if (c.rel == Relation::le) {
      w.slacks.push_back({i, 1.0});
      w.slack_at_row[static_cast<std::size_t>(i)].push_back(
          static_cast<int>(w.slacks.size()) - 1);
    } else if (c.rel == Relation::ge) {
      w.slacks.push_back({i, -1.0});
      w.slack_at_row[static_cast<std::size_t>(i)].push_back(
          static_cast<int>(w.slacks.size()) - 1);
    }
  }
  const int ns = static_cast<int>(w.slacks.size());

  for (int bidx = 0; bidx < nb; ++bidx)
    w.scale_c = std::max(
        w.scale_c, w.cmat[static_cast<std::size_t>(bidx)].cwiseAbs().maxCoeff());
  if (w.n_free > 0)
    w.scale_c = std::max(w.scale_c, w.d_free.cwiseAbs().maxCoeff());
  w.scale_b = std::max(1.0, w.b.cwiseAbs().maxCoeff());

  // iterates
  const double eta_p = 10.0 * w.scale_b;
  const double eta_d = 10.0 * w.scale_c;
  std::vector<Mat> x(static_cast<std::size_t>(nb)), z(static_cast<std::size_t>(nb));
  for (int bidx = 0; bidx < nb; ++bidx) {
    const int n = w.dims[static_cast<std::size_t>(bidx)];
    x[static_cast<std::size_t>(bidx)] = eta_p * Mat::Identity(n, n);
    z[static_cast<std::size_t>(bidx)] = eta_d * Mat::Identity(n, n);
  }
  Vec xs = Vec::Constant(ns, eta_p);
  Vec zs = Vec::Constant(ns, eta_d);
  Vec y = Vec::Zero(w.m);
  Vec u = Vec::Zero(w.n_free);

  double nu = 0.0;
  for (int d : w.dims) nu += d;
  nu += ns;
  if (nu == 0.0) nu = 1.0;

  ConicSolution sol;
  sol.block_values.resize(static_cast<std::size_t>(nb));
  sol.free_values = u;

  // per-iteration storage
  std::vector<Mat> zinv(static_cast<std::size_t>(nb));
  std::vector<std::vector<Mat>> tmats(static_cast<std::size_t>(nb));
  std::vector<Mat> gram(static_cast<std::size_t>(nb));
  std::vector<Mat> rd(static_cast<std::size_t>(nb));
  std::vector<Mat> dx(static_cast<std::size_t>(nb)), dz(static_cast<std::size_t>(nb));
  std::vector<Mat> dx_aff(static_cast<std::size_t>(nb)), dz_aff(static_cast<std::size_t>(nb));
  Vec dxs(ns), dzs(ns), dxs_aff(ns), dzs_aff(ns);

  const auto eval_primal = [&](Vec& ax) {
    ax.setZero();
    for (int bidx = 0; bidx < nb; ++bidx) {
      // per-dict inner products with X
      const auto& d = w.dict[static_cast<std::size_t>(bidx)];
      Vec inner(static_cast<int>(d.size()));
      for (int j = 0; j < static_cast<int>(d.size()); ++j)
        inner(j) = d[static_cast<std::size_t>(j)]
                       .cwiseProduct(x[static_cast<std::size_t>(bidx)])
                       .sum();
      for (const auto& t : w.touches[static_cast<std::size_t>(bidx)])
        ax(t.con) += t.scale * inner(t.dict);
    }
    if (w.n_free > 0) ax += w.efree * u;
    for (int sidx = 0; sidx < ns; ++sidx)
      ax(w.slacks[static_cast<std::size_t>(sidx)].row) +=
          w.slacks[static_cast<std::size_t>(sidx)].coeff * xs(sidx);
  };

  Vec ax(w.m), rp(w.m), rf(w.n_free), rzs(ns);
  double best_err = std::numeric_limits<double>::infinity();
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    // residuals
    eval_primal(ax);
    rp = w.b - ax;
    double mu = 0.0;
    for (int bidx = 0; bidx < nb; ++bidx)
      mu += x[static_cast<std::size_t>(bidx)]
                .cwiseProduct(z[static_cast<std::size_t>(bidx)])
                .sum();
    mu += xs.dot(zs);
    mu /= nu;

    double dual_err = 0.0;
    for (int bidx = 0; bidx < nb; ++bidx) {
      Mat r = w.cmat[static_cast<std::size_t>(bidx)] -
              z[static_cast<std::size_t>(bidx)];
      for (const auto& t : w.touches[static_cast<std::size_t>(bidx)])
        r -= y(t.con) * t.scale *
             w.dict[static_cast<std::size_t>(bidx)]
                   [static_cast<std::size_t>(t.dict)];
      rd[static_cast<std::size_t>(bidx)] = r;
      dual_err = std::max(dual_err, r.cwiseAbs().maxCoeff());
    }
    for (int sidx = 0; sidx < ns; ++sidx) {
      const auto& s = w.slacks[static_cast<std::size_t>(sidx)];
      rzs(sidx) = -s.coeff * y(s.row) - zs(sidx);
      dual_err = std::max(dual_err, std::abs(rzs(sidx)));
    }
    if (w.n_free > 0) {
      rf = w.d_free - w.efree.transpose() * y;
      dual_err = std::max(dual_err, rf.cwiseAbs().maxCoeff());
    }

    double pobj = w.d_free.dot(u);
    for (int bidx = 0; bidx < nb; ++bidx)
      pobj += w.cmat[static_cast<std::size_t>(bidx)]
                  .cwiseProduct(x[static_cast<std::size_t>(bidx)])
                  .sum();
    const double dobj = w.b.dot(y);

    const double rel_p = rp.cwiseAbs().maxCoeff() / (1.0 + w.scale_b);
    const double rel_d = dual_err / (1.0 + w.scale_c);
    const double rel_g =
        std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    sol.residuals = {rel_p, rel_d, rel_g};
    sol.objective = pobj;
    sol.iterations = iter;
    const double err = std::max({rel_p, rel_d, rel_g});
    if (err < best_err) best_err = err;

    if (rel_p <= tol && rel_d <= tol && rel_g <= tol) {
      sol.status = SolveStatus::optimal;
      break;
    }
    // divergence heuristics: one side feasible, objective exploding
    if (dobj > 1e9 * w.scale_b && rel_d <= 1e3 * tol && rel_p > 1e2 * tol) {
      sol.status = SolveStatus::infeasible;
      break;
    }
    if (pobj < -1e9 * (1.0 + w.scale_c) && rel_p <= 1e3 * tol) {
      sol.status = SolveStatus::unbounded;
      break;
    }

    // Schur complement via per-block dictionary Gram matrices
    Mat schur = Mat::Zero(w.m, w.m);
    bool factor_fail = false;
#pragma omp parallel for schedule(dynamic)
    for (int bidx = 0; bidx < nb; ++bidx) {
      const int n = w.dims[static_cast<std::size_t>(bidx)];
      Eigen::LLT<Mat> llt(z[static_cast<std::size_t>(bidx)]);
      if (llt.info() != Eigen::Success) {
        factor_fail = true;
        continue;
      }
      zinv[static_cast<std::size_t>(bidx)] = llt.solve(Mat::Identity(n, n));
      const auto& d = w.dict[static_cast<std::size_t>(bidx)];
      auto& t = tmats[static_cast<std::size_t>(bidx)];
      t.resize(d.size());
      for (std::size_t j = 0; j < d.size(); ++j)
        t[j] = x[static_cast<std::size_t>(bidx)] * d[j] *
               zinv[static_cast<std::size_t>(bidx)];
      Mat& g = gram[static_cast<std::size_t>(bidx)];
      g.resize(static_cast<int>(d.size()), static_cast<int>(d.size()));
      for (std::size_t p = 0; p < d.size(); ++p)
        for (std::size_t q = 0; q < d.size(); ++q)
          g(static_cast<int>(p), static_cast<int>(q)) = frob_inner(d[p], t[q]);
    }
    if (factor_fail) {
      sol.status = SolveStatus::max_iter;
      break;
    }
    for (int bidx = 0; bidx < nb; ++bidx) {
      const auto& tch = w.touches[static_cast<std::size_t>(bidx)];
      const Mat& g = gram[static_cast<std::size_t>(bidx)];
      for (const auto& ti : tch)
        for (const auto& tj : tch) {
          if (tj.con > ti.con) continue;
          schur(ti.con, tj.con) +=
              ti.scale * tj.scale * g(ti.dict, tj.dict);
        }
    }
    for (int sidx = 0; sidx < ns; ++sidx) {
      const auto& s = w.slacks[static_cast<std::size_t>(sidx)];
      schur(s.row, s.row) += xs(sidx) / zs(sidx);
    }
    {
      Mat full = schur.selfadjointView<Eigen::Lower>();
      schur.swap(full);
    }

    Eigen::LLT<Mat> schur_llt(schur);
    if (schur_llt.info() != Eigen::Success) {
      schur.diagonal().array() += 1e-12 * (1.0 + schur.diagonal().maxCoeff());
      schur_llt.compute(schur);
      if (schur_llt.info() != Eigen::Success) {
        sol.status = SolveStatus::max_iter;
        break;
      }
    }

    // free-variable reduction
    Mat efree_minv;
    Eigen::LDLT<Mat> free_ldlt;
    if (w.n_free > 0) {
      efree_minv = schur_llt.solve(w.efree);  // m x nf
      free_ldlt.compute(w.efree.transpose() * efree_minv);
      if (free_ldlt.info() != Eigen::Success) {
        sol.status = SolveStatus::max_iter;
        break;
      }
    }

    const auto solve_direction = [&](double sigma_mu,
                                     const std::vector<Mat>* corr,
                                     const Vec* corr_s, std::vector<Mat>& odx,
                                     std::vector<Mat>& odz, Vec& odxs,
                                     Vec& odzs, Vec& ody, Vec& odu) {
      Vec rhs = rp;
      for (int bidx = 0; bidx < nb; ++bidx) {
        // V = sigma_mu * Zinv - X - Corr * Zinv - X * Rd * Zinv
        Mat v = sigma_mu * zinv[static_cast<std::size_t>(bidx)] -
                x[static_cast<std::size_t>(bidx)] -
                x[static_cast<std::size_t>(bidx)] *
                    rd[static_cast<std::size_t>(bidx)] *
                    zinv[static_cast<std::size_t>(bidx)];
        if (corr)
          v -= (*corr)[static_cast<std::size_t>(bidx)] *
               zinv[static_cast<std::size_t>(bidx)];
        const auto& d = w.dict[static_cast<std::size_t>(bidx)];
        Vec inner(static_cast<int>(d.size()));
        for (int j = 0; j < static_cast<int>(d.size()); ++j)
          inner(j) = frob_inner(d[static_cast<std::size_t>(j)], v);
        for (const auto& t : w.touches[static_cast<std::size_t>(bidx)])
          rhs(t.con) -= t.scale * inner(t.dict);
      }
      for (int sidx = 0; sidx < ns; ++sidx) {
        const auto& s = w.slacks[static_cast<std::size_t>(sidx)];
        const double xi = corr_s ? (*corr_s)(sidx) : 0.0;
        rhs(s.row) -= s.coeff * ((sigma_mu - xi) / zs(sidx) - xs(sidx) -
                                 (xs(sidx) / zs(sidx)) * rzs(sidx));
      }

      if (w.n_free > 0) {
        const Vec minv_rhs = schur_llt.solve(rhs);
        odu = free_ldlt.solve(w.efree.transpose() * minv_rhs - rf);
        ody = schur_llt.solve(rhs - w.efree * odu);
      } else {
        odu.resize(0);
        ody = schur_llt.solve(rhs);
      }

      for (int bidx = 0; bidx < nb; ++bidx) {
        const auto& d = w.dict[static_cast<std::size_t>(bidx)];
        Vec coeff = Vec::Zero(static_cast<int>(d.size()));
        for (const auto& t : w.touches[static_cast<std::size_t>(bidx)])
          coeff(t.dict) += t.scale * ody(t.con);
        Mat dzb = rd[static_cast<std::size_t>(bidx)];
        for (int j = 0; j < static_cast<int>(d.size()); ++j)
          if (coeff(j) != 0.0) dzb -= coeff(j) * d[static_cast<std::size_t>(j)];
        odz[static_cast<std::size_t>(bidx)] = dzb;
        Mat dxb = sigma_mu * zinv[static_cast<std::size_t>(bidx)] -
                  x[static_cast<std::size_t>(bidx)] -
                  x[static_cast<std::size_t>(bidx)] * dzb *
                      zinv[static_cast<std::size_t>(bidx)];
        if (corr)
          dxb -= (*corr)[static_cast<std::size_t>(bidx)] *
                 zinv[static_cast<std::size_t>(bidx)];
        odx[static_cast<std::size_t>(bidx)] =
            0.5 * (dxb + dxb.transpose()).eval();
      }
      for (int sidx = 0; sidx < ns; ++sidx) {
        const auto& s = w.slacks[static_cast<std::size_t>(sidx)];
        const double xi = corr_s ? (*corr_s)(sidx) : 0.0;
        odzs(sidx) = rzs(sidx) - s.coeff * ody(s.row);
        odxs(sidx) = (sigma_mu - xi) / zs(sidx) - xs(sidx) -
                     (xs(sidx) / zs(sidx)) * odzs(sidx);
      }
    };

    const auto step_lengths = [&](const std::vector<Mat>& sdx,
                                  const std::vector<Mat>& sdz, const Vec& sdxs,
                                  const Vec& sdzs) {
      double ap = 1.0, ad = 1.0;
      for (int bidx = 0; bidx < nb; ++bidx) {
        ap = std::min(ap, max_psd_step(x[static_cast<std::size_t>(bidx)],
                                       sdx[static_cast<std::size_t>(bidx)]));
        ad = std::min(ad, max_psd_step(z[static_cast<std::size_t>(bidx)],
                                       sdz[static_cast<std::size_t>(bidx)]));
      }
      for (int sidx = 0; sidx < ns; ++sidx) {
        if (sdxs(sidx) < 0.0) ap = std::min(ap, -xs(sidx) / sdxs(sidx));
        if (sdzs(sidx) < 0.0) ad = std::min(ad, -zs(sidx) / sdzs(sidx));
      }
      return std::pair<double, double>(ap, ad);
    };

    // predictor
    Vec dy(w.m), du(w.n_free);
    solve_direction(0.0, nullptr, nullptr, dx_aff, dz_aff, dxs_aff, dzs_aff,
                    dy, du);
    const auto [ap_aff, ad_aff] =
        step_lengths(dx_aff, dz_aff, dxs_aff, dzs_aff);

    double mu_aff = 0.0;
    for (int bidx = 0; bidx < nb; ++bidx)
      mu_aff += (x[static_cast<std::size_t>(bidx)] +
                 ap_aff * dx_aff[static_cast<std::size_t>(bidx)])
                    .cwiseProduct(z[static_cast<std::size_t>(bidx)] +
                                  ad_aff * dz_aff[static_cast<std::size_t>(bidx)])
                    .sum();
    mu_aff += (xs + ap_aff * dxs_aff).dot(zs + ad_aff * dzs_aff);
    mu_aff /= nu;
    double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);
    sigma = std::min(std::max(sigma, 1e-8), 0.99);

    // corrector
    std::vector<Mat> corr(static_cast<std::size_t>(nb));
    for (int bidx = 0; bidx < nb; ++bidx)
      corr[static_cast<std::size_t>(bidx)] =
          dx_aff[static_cast<std::size_t>(bidx)] *
          dz_aff[static_cast<std::size_t>(bidx)];
    Vec corr_s = dxs_aff.cwiseProduct(dzs_aff);
    solve_direction(sigma * mu, &corr, &corr_s, dx, dz, dxs, dzs, dy, du);

    const auto [ap_max, ad_max] = step_lengths(dx, dz, dxs, dzs);
    const double tau = 0.98;
    const double ap = std::min(1.0, tau * ap_max);
    const double ad = std::min(1.0, tau * ad_max);

    if (ap < 1e-10 && ad < 1e-10) {
      sol.status = SolveStatus::max_iter;  // stalled
      break;
    }

    for (int bidx = 0; bidx < nb; ++bidx) {
      x[static_cast<std::size_t>(bidx)] += ap * dx[static_cast<std::size_t>(bidx)];
      z[static_cast<std::size_t>(bidx)] += ad * dz[static_cast<std::size_t>(bidx)];
    }
    xs += ap * dxs;
    zs += ad * dzs;
    y += ad * dy;
    if (w.n_free > 0) u += ap * du;
  }

  if (iter == max_iter) sol.status = SolveStatus::max_iter;
  for (int bidx = 0; bidx < nb; ++bidx)
    sol.block_values[static_cast<std::size_t>(bidx)] =
        x[static_cast<std::size_t>(bidx)];
  sol.free_values = u;
  return sol;
}

}  // namespace lawn::conic
