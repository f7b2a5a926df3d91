#include "dmcv/conic.hpp"

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace dmcv {

namespace {

double sym_inner(const RealMat& a, const RealMat& b) {
  return (a.array() * b.array()).sum();
}

bool has_block(const ConicProblem::Row& row, std::size_t b) {
  return b < row.blocks.size() && row.blocks[b].size() > 0;
}

bool has_linear(const ConicProblem::Row& row) { return row.linear.size() > 0; }

// In-place z = (z + z^T)/2 via an explicit temporary; assigning the lazy
// expression directly would read entries already overwritten.
void symmetrize(RealMat& z) {
  RealMat t = z.transpose();
  z = 0.5 * (z + t);
}

// Largest step alpha with Z + alpha*dZ still PSD, given a Cholesky factor of Z.
double max_psd_step(const Eigen::LLT<RealMat>& llt, const RealMat& dz) {
  if (dz.rows() == 0) return std::numeric_limits<double>::infinity();
  RealMat half = llt.matrixL().solve(dz);
  RealMat scaled = llt.matrixL().solve(half.transpose()).transpose();
  RealMat sym = 0.5 * (scaled + scaled.transpose());
  Eigen::SelfAdjointEigenSolver<RealMat> es(sym, Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

double max_nonneg_step(const RealVec& z, const RealVec& dz) {
  double alpha = std::numeric_limits<double>::infinity();
  for (int k = 0; k < z.size(); ++k) {
    if (dz[k] < 0.0) alpha = std::min(alpha, -z[k] / dz[k]);
  }
  return alpha;
}

void dump_if_requested(const ConicProblem& problem) {
  static std::atomic<int> counter{0};
  const char* dir = std::getenv("DMCV_SDP_DUMP");
  if (dir == nullptr || dir[0] == '\0') return;
  int id = counter.fetch_add(1);
  std::string base = problem.name.empty() ? "problem" : problem.name;
  for (char& c : base) {
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  }
  std::filesystem::path path =
      std::filesystem::path(dir) / ("conic_" + std::to_string(id) + "_" + base + ".sdp");
  std::ofstream os(path);
  if (os) write_problem_text(problem, os);
}

} // namespace

void ConicProblem::validate() const {
  if (nonneg_dim < 0) throw std::invalid_argument("conic: negative nonneg dimension");
  for (int d : block_dims) {
    if (d <= 0) throw std::invalid_argument("conic: nonpositive block dimension");
  }
  auto check_blockset = [&](const std::vector<RealMat>& blocks, const char* what) {
    if (blocks.size() > block_dims.size()) {
      throw std::invalid_argument(std::string("conic: too many blocks in ") + what);
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (blocks[b].size() == 0) continue;
      if (blocks[b].rows() != block_dims[b] || blocks[b].cols() != block_dims[b]) {
        throw std::invalid_argument(std::string("conic: block shape mismatch in ") + what);
      }
    }
  };
  check_blockset(objective_blocks, "objective");
  if (objective_linear.size() != 0 && objective_linear.size() != nonneg_dim) {
    throw std::invalid_argument("conic: objective linear size mismatch");
  }
  for (const Row& row : rows) {
    check_blockset(row.blocks, "row");
    if (row.linear.size() != 0 && row.linear.size() != nonneg_dim) {
      throw std::invalid_argument("conic: row linear size mismatch");
    }
  }
}

RealMat embed_hermitian(const Mat& h) {
  const int n = static_cast<int>(h.rows());
  RealMat e(2 * n, 2 * n);
  e.topLeftCorner(n, n) = h.real();
  e.bottomRightCorner(n, n) = h.real();
  e.topRightCorner(n, n) = -h.imag();
  e.bottomLeftCorner(n, n) = h.imag();
  return e;
}

Mat extract_hermitian(const RealMat& e) {
  const int n = static_cast<int>(e.rows()) / 2;
  RealMat re = 0.5 * (e.topLeftCorner(n, n) + e.bottomRightCorner(n, n));
  RealMat im = 0.5 * (e.bottomLeftCorner(n, n) - e.topRightCorner(n, n));
  Mat h = re.cast<cplx>() + cplx(0.0, 1.0) * im.cast<cplx>();
  return hermitize(h);
}

void write_problem_text(const ConicProblem& problem, std::ostream& os) {
  os << "conic-standard-form 1\n";
  os << "name " << (problem.name.empty() ? "unnamed" : problem.name) << "\n";
  os << "blocks " << problem.block_dims.size();
  for (int d : problem.block_dims) os << " " << d;
  os << "\nnonneg " << problem.nonneg_dim << "\n";
  os << "rows " << problem.rows.size() << "\n";
  os.precision(17);
  auto write_entries = [&os](const RealMat& m) {
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = i; j < m.cols(); ++j) {
        if (m(i, j) != 0.0) os << "  " << i << " " << j << " " << m(i, j) << "\n";
      }
    }
  };
  for (std::size_t b = 0; b < problem.objective_blocks.size(); ++b) {
    if (problem.objective_blocks[b].size() == 0) continue;
    os << "objective block " << b << "\n";
    write_entries(problem.objective_blocks[b]);
  }
  for (int k = 0; k < problem.objective_linear.size(); ++k) {
    if (problem.objective_linear[k] != 0.0) {
      os << "objective linear " << k << " " << problem.objective_linear[k] << "\n";
    }
  }
  for (std::size_t i = 0; i < problem.rows.size(); ++i) {
    const auto& row = problem.rows[i];
    os << "row " << i << " rhs " << row.rhs << "\n";
    for (std::size_t b = 0; b < row.blocks.size(); ++b) {
      if (row.blocks[b].size() == 0) continue;
      os << " block " << b << "\n";
      write_entries(row.blocks[b]);
    }
    for (int k = 0; k < row.linear.size(); ++k) {
      if (row.linear[k] != 0.0) os << " linear " << k << " " << row.linear[k] << "\n";
    }
  }
  os << "end\n";
}

ConicSolution solve_conic(const ConicProblem& input) {
  const char* backend = std::getenv("DMCV_BACKEND");
  if (backend != nullptr && backend[0] != '\0') {
    std::string choice(backend);
    if (choice == "external") {
      throw std::runtime_error(
          "conic backend 'external' is not available in this build; use DMCV_BACKEND=internal");
    }
    if (choice != "internal") {
      throw std::invalid_argument("unknown conic backend '" + choice + "'");
    }
  }
  input.validate();
  dump_if_requested(input);

  const std::size_t nb = input.block_dims.size();
  const int nl = input.nonneg_dim;
  const std::size_t m = input.rows.size();

  // Row equilibration and objective normalization.
  std::vector<double> row_scale(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    double nrm = 0.0;
    const auto& row = input.rows[i];
    for (std::size_t b = 0; b < nb; ++b) {
      if (has_block(row, b)) nrm += row.blocks[b].squaredNorm();
    }
    if (has_linear(row)) nrm += row.linear.squaredNorm();
    row_scale[i] = std::max(std::sqrt(nrm), 1e-12);
  }
  double obj_scale = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    if (b < input.objective_blocks.size() && input.objective_blocks[b].size() > 0) {
      obj_scale = std::max(obj_scale, input.objective_blocks[b].cwiseAbs().maxCoeff());
    }
  }
  if (input.objective_linear.size() > 0) {
    obj_scale = std::max(obj_scale, input.objective_linear.cwiseAbs().maxCoeff());
  }
  obj_scale = std::max(obj_scale, 1e-12);

  std::vector<std::vector<RealMat>> A(m);
  std::vector<RealVec> alin(m);
  RealVec rhs = RealVec::Zero(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& row = input.rows[i];
    A[i].resize(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      if (has_block(row, b)) {
        A[i][b] = (0.5 * (row.blocks[b] + row.blocks[b].transpose())) / row_scale[i];
      }
    }
    if (has_linear(row)) alin[i] = row.linear / row_scale[i];
    rhs[i] = row.rhs / row_scale[i];
  }
  std::vector<RealMat> C(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    if (b < input.objective_blocks.size() && input.objective_blocks[b].size() > 0) {
      C[b] = (0.5 * (input.objective_blocks[b] + input.objective_blocks[b].transpose())) /
             obj_scale;
    } else {
      C[b] = RealMat::Zero(input.block_dims[b], input.block_dims[b]);
    }
  }
  RealVec clin = RealVec::Zero(nl);
  if (input.objective_linear.size() > 0) clin = input.objective_linear / obj_scale;

  double nu = nl;
  for (int d : input.block_dims) nu += d;
  nu = std::max(nu, 1.0);

  double init_p = 1.0 + (m > 0 ? rhs.cwiseAbs().maxCoeff() : 0.0);
  double init_d = 1.0;
  for (std::size_t b = 0; b < nb; ++b) init_d = std::max(init_d, C[b].cwiseAbs().maxCoeff());
  if (nl > 0) init_d = std::max(init_d, clin.cwiseAbs().maxCoeff());

  std::vector<RealMat> X(nb), S(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    X[b] = init_p * RealMat::Identity(input.block_dims[b], input.block_dims[b]);
    S[b] = init_d * RealMat::Identity(input.block_dims[b], input.block_dims[b]);
  }
  RealVec x = RealVec::Constant(nl, init_p);
  RealVec s = RealVec::Constant(nl, init_d);
  RealVec y = RealVec::Zero(m);

  auto apply_A = [&](const std::vector<RealMat>& V, const RealVec& v) {
    RealVec out = RealVec::Zero(m);
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t b = 0; b < nb; ++b) {
        if (A[i][b].size() > 0 && V[b].size() > 0) acc += sym_inner(A[i][b], V[b]);
      }
      if (alin[i].size() > 0 && v.size() > 0) acc += alin[i].dot(v);
      out[i] = acc;
    }
    return out;
  };

  auto snapshot = [&](ConicStatus status, double pobj, double dobj, double gap, double pres,
                      double dres, int iter) {
    ConicSolution sol;
    sol.status = status;
    sol.X = X;
    sol.x = x;
    sol.S.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) sol.S[b] = S[b] * obj_scale;
    sol.s = s * obj_scale;
    sol.y = RealVec(m);
    for (std::size_t i = 0; i < m; ++i) sol.y[i] = y[i] * obj_scale / row_scale[i];
    sol.primal_objective = pobj * obj_scale;
    sol.dual_objective = dobj * obj_scale;
    sol.rel_gap = gap;
    sol.primal_residual = pres;
    sol.dual_residual = dres;
    sol.iterations = iter;
    return sol;
  };

  const double rhs_norm = 1.0 + (m > 0 ? rhs.cwiseAbs().maxCoeff() : 0.0);
  double c_norm = 1.0;
  for (std::size_t b = 0; b < nb; ++b) c_norm = std::max(c_norm, C[b].cwiseAbs().maxCoeff());
  if (nl > 0) c_norm = std::max(c_norm, clin.cwiseAbs().maxCoeff());

  ConicSolution best;
  double best_quality = std::numeric_limits<double>::infinity();

  std::vector<RealMat> Rd(nb), Sinv(nb), dX(nb), dS(nb), dXa(nb), dSa(nb);
  RealVec rdl, dx, ds, dxa, dsa;

  int iter = 0;
  for (;; ++iter) {
    // Residuals and objective values at the current iterate.
    RealVec rp = rhs - apply_A(X, x);
    double dres = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      Rd[b] = C[b] - S[b];
      for (std::size_t i = 0; i < m; ++i) {
        if (A[i][b].size() > 0) Rd[b].noalias() -= y[i] * A[i][b];
      }
      if (Rd[b].size() > 0) dres = std::max(dres, Rd[b].cwiseAbs().maxCoeff());
    }
    rdl = clin - s;
    for (std::size_t i = 0; i < m; ++i) {
      if (alin[i].size() > 0) rdl.noalias() -= y[i] * alin[i];
    }
    if (nl > 0) dres = std::max(dres, rdl.cwiseAbs().maxCoeff());
    dres /= c_norm;
    double pres = (m > 0 ? rp.cwiseAbs().maxCoeff() : 0.0) / rhs_norm;

    double compl_sum = x.dot(s);
    for (std::size_t b = 0; b < nb; ++b) compl_sum += sym_inner(X[b], S[b]);
    double mu = compl_sum / nu;

    double pobj = clin.dot(x);
    for (std::size_t b = 0; b < nb; ++b) pobj += sym_inner(C[b], X[b]);
    double dobj = rhs.dot(y);
    double gap = std::fabs(pobj - dobj) / (1.0 + std::fabs(pobj) + std::fabs(dobj));

    double quality = std::max({gap, pres, dres});
    if (quality < best_quality) {
      best_quality = quality;
      best = snapshot(ConicStatus::max_iter, pobj, dobj, gap, pres, dres, iter);
    }
    const bool trace = std::getenv("DMCV_IPM_TRACE") != nullptr;
    if (trace) {
      std::fprintf(stderr, "[ipm] it=%d mu=%.3e pobj=%.6g dobj=%.6g gap=%.2e pres=%.2e dres=%.2e\n",
                   iter, mu, pobj, dobj, gap, pres, dres);
    }

    if (gap <= input.tol_gap && pres <= input.tol_feas && dres <= input.tol_feas) {
      return snapshot(ConicStatus::optimal, pobj, dobj, gap, pres, dres, iter);
    }

    // A diverging near-feasible dual with growing objective certifies primal
    // infeasibility.
    double ynorm = (m > 0) ? y.cwiseAbs().maxCoeff() : 0.0;
    if (ynorm > 1e7 && dres * c_norm / ynorm < 1e-7 && dobj / ynorm > 1e-8) {
      return snapshot(ConicStatus::infeasible, pobj, dobj, gap, pres, dres, iter);
    }

    if (iter >= input.max_iterations) break;

    // Factor the current cone points, nudging an iterate back inside the cone
    // when roundoff has pushed it out.
    auto factor_psd = [](Eigen::LLT<RealMat>& llt, RealMat& z) {
      double jitter = 1e-14 * std::max(1.0, z.cwiseAbs().maxCoeff());
      for (int attempt = 0; attempt < 6; ++attempt) {
        llt.compute(z);
        if (llt.info() == Eigen::Success) return true;
        z.diagonal().array() += jitter;
        jitter *= 100.0;
      }
      return false;
    };
    std::vector<Eigen::LLT<RealMat>> llt_S(nb), llt_X(nb);
    bool factor_ok = true;
    for (std::size_t b = 0; b < nb && factor_ok; ++b) {
      factor_ok = factor_psd(llt_S[b], S[b]) && factor_psd(llt_X[b], X[b]);
      if (factor_ok) {
        Sinv[b] = llt_S[b].solve(RealMat::Identity(input.block_dims[b], input.block_dims[b]));
        symmetrize(Sinv[b]);
      }
    }
    if (!factor_ok) {
      if (trace) std::fprintf(stderr, "[ipm]       break: cone factorization failed\n");
      break;
    }

    // Schur complement M_ij = <A_i, X A_j Sinv> + sum_k a_ik a_jk x_k / s_k.
    std::vector<std::vector<RealMat>> U(m);
    for (std::size_t j = 0; j < m; ++j) {
      U[j].resize(nb);
      for (std::size_t b = 0; b < nb; ++b) {
        if (A[j][b].size() > 0) U[j][b].noalias() = X[b] * A[j][b] * Sinv[b];
      }
    }
    RealVec d_ratio(nl);
    for (int k = 0; k < nl; ++k) d_ratio[k] = x[k] / s[k];
    RealMat M = RealMat::Zero(m, m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t b = 0; b < nb; ++b) {
          if (A[i][b].size() > 0 && U[j][b].size() > 0) acc += sym_inner(A[i][b], U[j][b]);
        }
        if (alin[i].size() > 0 && alin[j].size() > 0) {
          acc += (alin[i].array() * alin[j].array() * d_ratio.array()).sum();
        }
        M(i, j) = acc;
        M(j, i) = acc;
      }
    }
    Eigen::LDLT<RealMat> ldlt;
    if (m > 0) {
      double jitter = 1e-14 * std::max(1.0, M.cwiseAbs().maxCoeff());
      bool ldlt_ok = false;
      for (int attempt = 0; attempt < 5; ++attempt) {
        ldlt.compute(M);
        if (ldlt.info() == Eigen::Success) {
          ldlt_ok = true;
          break;
        }
        M.diagonal().array() += jitter;
        jitter *= 1000.0;
      }
      if (!ldlt_ok) {
        if (trace) std::fprintf(stderr, "[ipm]       break: normal equations factorization\n");
        break;
      }
    }

    // Reduced right-hand side shared by both passes.
    RealVec base = rhs;
    {
      std::vector<RealMat> XRdSinv(nb);
      for (std::size_t b = 0; b < nb; ++b) XRdSinv[b].noalias() = X[b] * Rd[b] * Sinv[b];
      RealVec lin_term(nl);
      for (int k = 0; k < nl; ++k) lin_term[k] = d_ratio[k] * rdl[k];
      base += apply_A(XRdSinv, lin_term);
    }

    auto solve_direction = [&](const RealVec& rhs_vec, const std::vector<RealMat>& Tsinv,
                               const RealVec& t_over_s, std::vector<RealMat>& oX,
                               std::vector<RealMat>& oS, RealVec& ox, RealVec& os_) {
      RealVec dy = RealVec::Zero(m);
      if (m > 0) {
        dy = ldlt.solve(rhs_vec);
        for (int refine = 0; refine < 2; ++refine) {
          RealVec resid = rhs_vec - M * dy;
          dy += ldlt.solve(resid);
        }
      }
      for (std::size_t b = 0; b < nb; ++b) {
        oS[b] = Rd[b];
        for (std::size_t i = 0; i < m; ++i) {
          if (A[i][b].size() > 0) oS[b].noalias() -= dy[i] * A[i][b];
        }
        RealMat cross;
        cross.noalias() = X[b] * oS[b] * Sinv[b];
        oX[b] = -X[b] - cross;
        if (Tsinv[b].size() > 0) oX[b] += Tsinv[b];
        symmetrize(oX[b]);
      }
      os_ = rdl;
      for (std::size_t i = 0; i < m; ++i) {
        if (alin[i].size() > 0) os_.noalias() -= dy[i] * alin[i];
      }
      ox.resize(nl);
      for (int k = 0; k < nl; ++k) {
        double t_k = (t_over_s.size() > 0) ? t_over_s[k] : 0.0;
        ox[k] = -x[k] - d_ratio[k] * os_[k] + t_k;
      }
      return dy;
    };

    // Predictor.
    std::vector<RealMat> zeroT(nb);
    RealVec dya = solve_direction(base, zeroT, RealVec(), dXa, dSa, dxa, dsa);

    double ap = std::numeric_limits<double>::infinity();
    double ad = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < nb; ++b) {
      ap = std::min(ap, max_psd_step(llt_X[b], dXa[b]));
      ad = std::min(ad, max_psd_step(llt_S[b], dSa[b]));
    }
    ap = std::min({ap, max_nonneg_step(x, dxa), 1.0});
    ad = std::min({ad, max_nonneg_step(s, dsa), 1.0});

    double mu_aff = (x + ap * dxa).dot(s + ad * dsa);
    for (std::size_t b = 0; b < nb; ++b) {
      mu_aff += sym_inner(X[b] + ap * dXa[b], S[b] + ad * dSa[b]);
    }
    mu_aff = std::max(mu_aff / nu, 0.0);
    double sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3.0);
    sigma = std::min(std::max(sigma, 1e-10), 0.999);

    // Corrector.
    std::vector<RealMat> Tsinv(nb);
    RealVec t_over_s(nl);
    RealVec corr = base;
    {
      std::vector<RealMat> corrV(nb);
      for (std::size_t b = 0; b < nb; ++b) {
        Tsinv[b].noalias() = -dXa[b] * dSa[b] * Sinv[b];
        Tsinv[b] += sigma * mu * Sinv[b];
        corrV[b] = -Tsinv[b];
      }
      RealVec corr_lin(nl);
      for (int k = 0; k < nl; ++k) {
        t_over_s[k] = (sigma * mu - dxa[k] * dsa[k]) / s[k];
        corr_lin[k] = -t_over_s[k];
      }
      corr += apply_A(corrV, corr_lin);
    }
    RealVec dy = solve_direction(corr, Tsinv, t_over_s, dX, dS, dx, ds);

    ap = std::numeric_limits<double>::infinity();
    ad = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < nb; ++b) {
      ap = std::min(ap, max_psd_step(llt_X[b], dX[b]));
      ad = std::min(ad, max_psd_step(llt_S[b], dS[b]));
    }
    ap = std::min(ap, max_nonneg_step(x, dx));
    ad = std::min(ad, max_nonneg_step(s, ds));
    ap = std::min(0.99 * ap, 1.0);
    ad = std::min(0.99 * ad, 1.0);
    if (trace) {
      std::fprintf(stderr, "[ipm]       sigma=%.3e ap=%.3e ad=%.3e\n", sigma, ap, ad);
    }

    if (ap < 1e-10 && ad < 1e-10) break;

    for (std::size_t b = 0; b < nb; ++b) {
      X[b] += ap * dX[b];
      S[b] += ad * dS[b];
      symmetrize(X[b]);
      symmetrize(S[b]);
    }
    x += ap * dx;
    s += ad * ds;
    y += ad * dy;
  }

  if (best_quality <= 1e-7) {
    best.status = ConicStatus::optimal;
  } else if (!std::isfinite(best_quality)) {
    best.status = ConicStatus::numerical_failure;
  } else if (iter >= input.max_iterations) {
    best.status = ConicStatus::max_iter;
  } else {
    best.status =
        (best_quality <= 1e-5) ? ConicStatus::max_iter : ConicStatus::numerical_failure;
  }
  best.iterations = iter;
  return best;
}

} // namespace dmcv
