#include "dmcv/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace dmcv {

namespace {

constexpr double kLogFloor = 1e-14;

double herm_inner(const Mat& a, const Mat& b) { return (a.adjoint() * b).trace().real(); }

Mat psd_sqrt(const Mat& h, const char* what) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(h));
  const RealVec& lam = es.eigenvalues();
  double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
  if (lam.minCoeff() < -1e-8 * scale) {
    throw std::invalid_argument(std::string(what) + " is not positive semidefinite");
  }
  RealVec root = lam.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

struct LogDecomp {
  double tr_xlogx = 0.0;
  Mat log_m;
};

LogDecomp eig_log2(const Mat& h, bool want_matrix) {
  Eigen::SelfAdjointEigenSolver<Mat> es(
      h, want_matrix ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  const RealVec& lam = es.eigenvalues();
  LogDecomp out;
  RealVec logs(lam.size());
  for (int k = 0; k < lam.size(); ++k) {
    logs[k] = std::log2(std::max(lam[k], kLogFloor));
    out.tr_xlogx += lam[k] * logs[k];
  }
  if (want_matrix) {
    out.log_m = es.eigenvectors() * logs.asDiagonal() * es.eigenvectors().adjoint();
  }
  return out;
}

// Spectral mixing toward the maximally mixed state on the map output. The
// descent loop and the certificate evaluate the mixed objective so matrix
// logarithms stay away from the spectral floor and gradients remain exact;
// the entropy continuity penalty of the mixing is deducted from the
// certificate, so the reported lower bound still holds for the exact
// objective.
constexpr double kMixEps = 1e-8;

Mat depolarize(const Mat& g, double mix_eps) {
  if (mix_eps <= 0.0) return g;
  const int n = static_cast<int>(g.rows());
  return (1.0 - mix_eps) * g + (mix_eps * g.trace().real() / n) * Mat::Identity(n, n);
}

// Worst-case objective change of the mixing, in bits, for output dimension n:
// twice the Audenaert bound at trace distance mix_eps.
double mixing_penalty(double mix_eps, int n) {
  if (mix_eps <= 0.0) return 0.0;
  double h2 =
      -mix_eps * std::log2(mix_eps) - (1.0 - mix_eps) * std::log2(1.0 - mix_eps);
  return 2.0 * (mix_eps * std::log2(static_cast<double>(n)) + h2);
}

// f of an already-mapped output state: Tr[g log g] - Tr[Z(g) log Z(g)].
double entropy_difference(const Mat& g_in, int key_dim, int d, double mix_eps = 0.0) {
  Mat g = depolarize(g_in, mix_eps);
  double term1 = eig_log2(g, false).tr_xlogx;
  double term2 = 0.0;
  for (int z = 0; z < key_dim; ++z) {
    term2 += eig_log2(g.block(z * d, z * d, d, d), false).tr_xlogx;
  }
  return std::max(term1 - term2, 0.0);
}

std::vector<Mat> hermitian_basis(int n) {
  std::vector<Mat> out;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    Mat m = Mat::Zero(n, n);
    m(i, i) = 1.0;
    out.push_back(m);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Mat re = Mat::Zero(n, n);
      re(i, j) = inv_sqrt2;
      re(j, i) = inv_sqrt2;
      out.push_back(re);
      Mat im = Mat::Zero(n, n);
      im(i, j) = cplx(0.0, inv_sqrt2);
      im(j, i) = cplx(0.0, -inv_sqrt2);
      out.push_back(im);
    }
  }
  return out;
}

// (lower, upper) admissible window per observable.
std::vector<std::pair<double, double>> constraint_bounds(const ConstraintSet& cs) {
  std::vector<std::pair<double, double>> out;
  out.reserve(cs.observables.size());
  for (const auto& obs : cs.observables) {
    double lo, hi;
    if (cs.literal_bounds) {
      hi = obs.value - obs.mu;
      lo = obs.value + obs.mu - cs.weight * obs.cap;
    } else {
      hi = obs.value + obs.mu + obs.t;
      lo = obs.value - obs.mu - obs.t - cs.weight * obs.cap;
    }
    out.emplace_back(lo, hi);
  }
  return out;
}

double trace_norm(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(h), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

// Worst constraint violation of a candidate state; <= 1e-9 counts as feasible.
double max_violation(const Mat& rho, const ConstraintSet& cs) {
  const double w = cs.weight;
  double viol = 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(rho), Eigen::EigenvaluesOnly);
  viol = std::max(viol, -es.eigenvalues().minCoeff());
  double tr = rho.trace().real();
  viol = std::max(viol, tr - 1.0);
  viol = std::max(viol, (1.0 - w) - tr);
  auto bounds = constraint_bounds(cs);
  for (std::size_t j = 0; j < cs.observables.size(); ++j) {
    double val = herm_inner(cs.observables[j].op.entries, rho);
    viol = std::max(viol, val - bounds[j].second);
    viol = std::max(viol, bounds[j].first - val);
  }
  Mat diff = partial_trace_B(rho, cs.dim_a, cs.dim_b) - cs.rho_a;
  viol = std::max(viol, trace_norm(diff) - 2.0 * std::sqrt(w));
  return viol;
}

} // namespace

Mat PostprocessingMaps::apply(const Mat& rho) const {
  return hermitize(kraus * rho * kraus.adjoint());
}

Mat PostprocessingMaps::apply_adjoint(const Mat& m) const {
  return hermitize(kraus.adjoint() * m * kraus);
}

Mat PostprocessingMaps::pinch(const Mat& m) const {
  Mat out = Mat::Zero(m.rows(), m.cols());
  for (int z = 0; z < key_dim; ++z) {
    out.block(z * dim_in, z * dim_in, dim_in, dim_in) =
        m.block(z * dim_in, z * dim_in, dim_in, dim_in);
  }
  return out;
}

PostprocessingMaps make_postprocessing_maps(const std::vector<Mat>& region_ops, int dim_a) {
  if (region_ops.empty()) throw std::invalid_argument("postprocessing: no region operators");
  if (dim_a < 1) throw std::invalid_argument("postprocessing: invalid sender dimension");
  PostprocessingMaps maps;
  maps.key_dim = static_cast<int>(region_ops.size());
  maps.dim_a = dim_a;
  maps.dim_b = static_cast<int>(region_ops[0].rows());
  maps.dim_in = dim_a * maps.dim_b;
  maps.kraus = Mat::Zero(maps.key_dim * maps.dim_in, maps.dim_in);
  Mat eye_a = Mat::Identity(dim_a, dim_a);
  for (int z = 0; z < maps.key_dim; ++z) {
    if (region_ops[z].rows() != maps.dim_b || region_ops[z].cols() != maps.dim_b) {
      throw std::invalid_argument("postprocessing: region operator shape mismatch");
    }
    Mat root = psd_sqrt(region_ops[z], "region operator");
    maps.kraus.block(z * maps.dim_in, 0, maps.dim_in, maps.dim_in) = tensor(eye_a, root);
  }
  return maps;
}

PostprocessingMaps build_postprocessing_maps(const ProtocolParams& params,
                                             const TruncationSpec& spec) {
  params.validate();
  std::vector<Mat> regions;
  regions.reserve(params.n_states);
  for (int z = 0; z < params.n_states; ++z) {
    regions.push_back(region_operator(z, params, spec).entries);
  }
  return make_postprocessing_maps(regions, params.n_states);
}

double objective_and_gradient(const Mat& rho_bar, const PostprocessingMaps& maps, Mat* grad,
                              double mix_eps) {
  const int d = maps.dim_in;
  if (rho_bar.rows() != d || rho_bar.cols() != d) {
    throw std::invalid_argument("objective: state dimension mismatch");
  }
  {
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(rho_bar), Eigen::EigenvaluesOnly);
    const RealVec& lam = es.eigenvalues();
    double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
    if (lam.minCoeff() < -1e-8 * scale) {
      throw std::invalid_argument("objective: input state is not positive semidefinite");
    }
  }
  Mat grho = depolarize(maps.apply(rho_bar), mix_eps);
  LogDecomp full = eig_log2(grho, grad != nullptr);
  double term2 = 0.0;
  Mat log_pinched;
  if (grad != nullptr) log_pinched = Mat::Zero(grho.rows(), grho.cols());
  for (int z = 0; z < maps.key_dim; ++z) {
    LogDecomp blk = eig_log2(grho.block(z * d, z * d, d, d), grad != nullptr);
    term2 += blk.tr_xlogx;
    if (grad != nullptr) log_pinched.block(z * d, z * d, d, d) = blk.log_m;
  }
  if (grad != nullptr) {
    Mat y = full.log_m - log_pinched;
    *grad = maps.apply_adjoint(y);
    if (mix_eps > 0.0) {
      const int n = static_cast<int>(grho.rows());
      *grad = (1.0 - mix_eps) * (*grad) +
              (mix_eps * y.trace().real() / n) *
                  maps.apply_adjoint(Mat::Identity(n, n));
    }
  }
  return std::max(full.tr_xlogx - term2, 0.0);
}

double objective(const Mat& rho_bar, const PostprocessingMaps& maps, double mix_eps) {
  return objective_and_gradient(rho_bar, maps, nullptr, mix_eps);
}

Mat gradient(const Mat& rho_bar, const PostprocessingMaps& maps, double mix_eps) {
  Mat g;
  objective_and_gradient(rho_bar, maps, &g, mix_eps);
  return g;
}

void ConstraintSet::validate() const {
  if (dim_a < 1 || dim_b < 1) throw std::invalid_argument("constraints: invalid dimensions");
  if (!(weight >= 0.0 && weight < 1.0)) {
    throw std::invalid_argument("constraints: weight outside [0,1)");
  }
  if (rho_a.rows() != dim_a || rho_a.cols() != dim_a) {
    throw std::invalid_argument("constraints: reduced-state dimension mismatch");
  }
  if ((rho_a - rho_a.adjoint()).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument("constraints: reduced state not Hermitian");
  }
  if (std::fabs(rho_a.trace().real() - 1.0) > 1e-6) {
    throw std::invalid_argument("constraints: reduced state not normalized");
  }
  const int d = dim_a * dim_b;
  for (const auto& obs : observables) {
    if (obs.op.entries.rows() != d || obs.op.entries.cols() != d) {
      throw std::invalid_argument("constraints: observable dimension mismatch");
    }
    if (!(obs.mu >= 0.0) || !(obs.t >= 0.0) || !(obs.cap >= 0.0)) {
      throw std::invalid_argument("constraints: negative radius component");
    }
  }
}

SubproblemEncoding build_linear_subproblem(const Mat& direction, const ConstraintSet& cs) {
  cs.validate();
  const int d = cs.dim_a * cs.dim_b;
  if (direction.rows() != d || direction.cols() != d) {
    throw std::invalid_argument("subproblem: direction dimension mismatch");
  }
  SubproblemEncoding enc;
  enc.asymptotic = (cs.weight == 0.0);
  enc.basis_a = hermitian_basis(cs.dim_a);
  auto bounds = constraint_bounds(cs);
  const std::size_t nobs = cs.observables.size();
  enc.upper_rows.assign(nobs, -1);
  enc.lower_rows.assign(nobs, -1);
  enc.equality_rows.assign(nobs, -1);
  enc.upper_bounds.resize(nobs);
  enc.lower_bounds.resize(nobs);

  ConicProblem& p = enc.problem;
  const int n_blocks = enc.asymptotic ? 1 : 5;
  p.block_dims = {2 * d};
  if (!enc.asymptotic) {
    for (int k = 0; k < 4; ++k) p.block_dims.push_back(2 * cs.dim_a);
  }
  int n_slack = 0;
  for (std::size_t j = 0; j < nobs; ++j) {
    if (bounds[j].first != bounds[j].second) n_slack += 2;
  }
  if (!enc.asymptotic) n_slack += 3;
  p.nonneg_dim = n_slack;
  p.objective_blocks = {0.5 * embed_hermitian(hermitize(direction))};
  p.name = "linear subproblem";
  p.max_iterations = 200;

  const Mat eye_b = Mat::Identity(cs.dim_b, cs.dim_b);
  int slack = 0;
  auto slack_vec = [&](double sign) {
    RealVec v = RealVec::Zero(n_slack);
    v[slack++] = sign;
    return v;
  };
  auto new_row = [&]() {
    ConicProblem::Row r;
    r.blocks.resize(n_blocks);
    return r;
  };

  for (std::size_t j = 0; j < nobs; ++j) {
    enc.upper_bounds[j] = bounds[j].second;
    enc.lower_bounds[j] = bounds[j].first;
    RealMat g_emb = 0.5 * embed_hermitian(cs.observables[j].op.entries);
    if (bounds[j].first == bounds[j].second) {
      ConicProblem::Row r = new_row();
      r.blocks[0] = g_emb;
      r.rhs = bounds[j].second;
      enc.equality_rows[j] = static_cast<int>(p.rows.size());
      p.rows.push_back(std::move(r));
    } else {
      ConicProblem::Row up = new_row();
      up.blocks[0] = g_emb;
      up.linear = slack_vec(1.0);
      up.rhs = bounds[j].second;
      enc.upper_rows[j] = static_cast<int>(p.rows.size());
      p.rows.push_back(std::move(up));
      ConicProblem::Row lo = new_row();
      lo.blocks[0] = g_emb;
      lo.linear = slack_vec(-1.0);
      lo.rhs = bounds[j].first;
      enc.lower_rows[j] = static_cast<int>(p.rows.size());
      p.rows.push_back(std::move(lo));
    }
  }

  // The reduced-state equality rows span every Hermitian direction on A, so
  // they already pin the total trace; a separate trace row would be redundant
  // and would make the normal equations singular.
  RealMat eye_emb = 0.5 * embed_hermitian(Mat::Identity(d, d));
  if (!enc.asymptotic) {
    ConicProblem::Row up = new_row();
    up.blocks[0] = eye_emb;
    up.linear = slack_vec(1.0);
    up.rhs = 1.0;
    enc.trace_upper_row = static_cast<int>(p.rows.size());
    p.rows.push_back(std::move(up));
    ConicProblem::Row lo = new_row();
    lo.blocks[0] = eye_emb;
    lo.linear = slack_vec(-1.0);
    lo.rhs = 1.0 - cs.weight;
    enc.trace_lower_row = static_cast<int>(p.rows.size());
    p.rows.push_back(std::move(lo));

    RealMat eye_a_emb = 0.5 * embed_hermitian(Mat::Identity(cs.dim_a, cs.dim_a));
    ConicProblem::Row wt = new_row();
    wt.blocks[1] = eye_a_emb;
    wt.blocks[2] = eye_a_emb;
    wt.linear = slack_vec(1.0);
    wt.rhs = 2.0 * std::sqrt(cs.weight);
    enc.weight_row = static_cast<int>(p.rows.size());
    p.rows.push_back(std::move(wt));
  }

  for (const Mat& b : enc.basis_a) {
    RealMat b_emb = 0.5 * embed_hermitian(b);
    RealMat bi_emb = 0.5 * embed_hermitian(tensor(b, eye_b));
    double rhs = herm_inner(b, cs.rho_a);
    if (enc.asymptotic) {
      ConicProblem::Row r = new_row();
      r.blocks[0] = bi_emb;
      r.rhs = rhs;
      enc.reduced_rows_eq.push_back(static_cast<int>(p.rows.size()));
      p.rows.push_back(std::move(r));
    } else {
      ConicProblem::Row rp = new_row();
      rp.blocks[0] = bi_emb;
      rp.blocks[1] = -b_emb;
      rp.blocks[3] = b_emb;
      rp.rhs = rhs;
      enc.reduced_rows_p.push_back(static_cast<int>(p.rows.size()));
      p.rows.push_back(std::move(rp));
      ConicProblem::Row rn = new_row();
      rn.blocks[0] = -bi_emb;
      rn.blocks[2] = -b_emb;
      rn.blocks[4] = b_emb;
      rn.rhs = -rhs;
      enc.reduced_rows_n.push_back(static_cast<int>(p.rows.size()));
      p.rows.push_back(std::move(rn));
    }
  }
  return enc;
}

FrankWolfeResult frank_wolfe(const ConstraintSet& cs, const PostprocessingMaps& maps,
                             double tol, int max_iter, const Mat* initial) {
  cs.validate();
  const int d = cs.dim_a * cs.dim_b;
  if (maps.dim_in != d) throw std::invalid_argument("frank_wolfe: map dimension mismatch");

  FrankWolfeResult result;
  bool have_start = false;
  if (initial != nullptr && initial->rows() == d && initial->cols() == d &&
      max_violation(*initial, cs) <= 1e-9) {
    result.rho = hermitize(*initial);
    have_start = true;
  }
  if (!have_start) {
    SubproblemEncoding enc = build_linear_subproblem(Mat::Zero(d, d), cs);
    ConicSolution sol = solve_conic(enc.problem);
    if (sol.status == ConicStatus::infeasible || sol.X.empty()) {
      result.subproblem_infeasible = true;
      result.rho = Mat::Zero(d, d);
      return result;
    }
    result.rho = extract_hermitian(sol.X[0]);
  }

  const double golden = 0.6180339887498949;
  double f_cur = 0.0;
  for (int k = 0; k < max_iter; ++k) {
    Mat grad;
    f_cur = objective_and_gradient(result.rho, maps, &grad, kMixEps);
    result.objective_history.push_back(f_cur);
    SubproblemEncoding enc = build_linear_subproblem(grad, cs);
    ConicSolution sol = solve_conic(enc.problem);
    if (sol.status == ConicStatus::infeasible) {
      result.subproblem_infeasible = true;
      break;
    }
    if (sol.X.empty() || sol.status == ConicStatus::numerical_failure) {
      result.gap = std::numeric_limits<double>::infinity();
      break;
    }
    Mat sigma = extract_hermitian(sol.X[0]);
    result.gap = herm_inner(grad, result.rho - sigma);
    if (result.gap <= tol) {
      result.iterations = k;
      result.objective_value = f_cur;
      return result;
    }
    result.iterations = k + 1;

    Mat g_rho = maps.apply(result.rho);
    Mat g_sig = maps.apply(sigma);
    auto eval = [&](double th) {
      return entropy_difference((1.0 - th) * g_rho + th * g_sig, maps.key_dim, d, kMixEps);
    };
    double best_t = 0.0, best_f = f_cur;
    auto consider = [&](double th, double f) {
      if (f < best_f) {
        best_f = f;
        best_t = th;
      }
    };
    consider(1.0, eval(1.0));
    double a = 0.0, b = 1.0;
    double c = b - golden * (b - a), e = a + golden * (b - a);
    double fc = eval(c), fe = eval(e);
    consider(c, fc);
    consider(e, fe);
    for (int it = 0; it < 40; ++it) {
      if (fc <= fe) {
        b = e;
        e = c;
        fe = fc;
        c = b - golden * (b - a);
        fc = eval(c);
        consider(c, fc);
      } else {
        a = c;
        c = e;
        fc = fe;
        e = a + golden * (b - a);
        fe = eval(e);
        consider(e, fe);
      }
    }
    if (best_t == 0.0) break;
    result.rho = hermitize((1.0 - best_t) * result.rho + best_t * sigma);
    f_cur = best_f;
  }
  result.objective_value = objective(result.rho, maps, kMixEps);
  return result;
}

SolverReport certified_dual_bound(const Mat& rho_step1, const ConstraintSet& cs,
                                  const PostprocessingMaps& maps, double eps_num) {
  cs.validate();
  if (!(eps_num >= 0.0)) throw std::invalid_argument("certification: negative eps_num");
  const int d = cs.dim_a * cs.dim_b;
  SolverReport rep;
  rep.rho_step1 = hermitize(rho_step1);

  Mat grad;
  rep.primal_value = objective_and_gradient(rep.rho_step1, maps, &grad, kMixEps);

  SubproblemEncoding enc = build_linear_subproblem(grad, cs);
  ConicSolution sol = solve_conic(enc.problem);
  if (sol.status == ConicStatus::infeasible) {
    rep.status = SolverStatus::infeasible;
    return rep;
  }

  const std::size_t nobs = cs.observables.size();
  RealVec ydual = (sol.y.size() == static_cast<Eigen::Index>(enc.problem.rows.size()))
                      ? sol.y
                      : RealVec::Zero(enc.problem.rows.size());
  std::vector<double> u(nobs, 0.0), v(nobs, 0.0);
  for (std::size_t j = 0; j < nobs; ++j) {
    if (enc.equality_rows[j] >= 0) {
      double yj = ydual[enc.equality_rows[j]];
      u[j] = std::max(0.0, -yj);
      v[j] = std::max(0.0, yj);
    } else {
      u[j] = std::max(0.0, -ydual[enc.upper_rows[j]]);
      v[j] = std::max(0.0, ydual[enc.lower_rows[j]]);
    }
  }
  double alpha = 0.0, beta = 0.0;
  double trace_hi = 1.0, trace_lo = 1.0 - cs.weight;
  if (enc.asymptotic) {
    trace_hi = trace_lo = 1.0;
  } else {
    alpha = std::max(0.0, -ydual[enc.trace_upper_row]);
    beta = std::max(0.0, ydual[enc.trace_lower_row]);
  }
  Mat m_e = Mat::Zero(cs.dim_a, cs.dim_a);
  if (enc.asymptotic) {
    for (std::size_t k = 0; k < enc.basis_a.size(); ++k) {
      m_e -= ydual[enc.reduced_rows_eq[k]] * enc.basis_a[k];
    }
  } else {
    for (std::size_t k = 0; k < enc.basis_a.size(); ++k) {
      m_e += (ydual[enc.reduced_rows_n[k]] - ydual[enc.reduced_rows_p[k]]) * enc.basis_a[k];
    }
  }
  m_e = hermitize(m_e);

  Mat slack = grad + (alpha - beta) * Mat::Identity(d, d) +
              tensor(m_e, Mat::Identity(cs.dim_b, cs.dim_b));
  for (std::size_t j = 0; j < nobs; ++j) {
    slack += (u[j] - v[j]) * cs.observables[j].op.entries;
  }
  slack = hermitize(slack);
  Eigen::SelfAdjointEigenSolver<Mat> es(slack, Eigen::EigenvaluesOnly);
  double shift = std::max(0.0, -es.eigenvalues().minCoeff()) + 1e-12;
  alpha += shift;
  slack += shift * Mat::Identity(d, d);
  Eigen::SelfAdjointEigenSolver<Mat> es2(slack, Eigen::EigenvaluesOnly);
  rep.dual_feasibility_residual = std::max(0.0, -es2.eigenvalues().minCoeff());

  Eigen::SelfAdjointEigenSolver<Mat> esm(m_e, Eigen::EigenvaluesOnly);
  double s_norm = (cs.dim_a > 0) ? esm.eigenvalues().cwiseAbs().maxCoeff() : 0.0;

  double dual_obj = -alpha * trace_hi + beta * trace_lo - herm_inner(m_e, cs.rho_a) -
                    2.0 * std::sqrt(cs.weight) * s_norm;
  double magnitude_sum = alpha + beta + s_norm;
  for (std::size_t j = 0; j < nobs; ++j) {
    dual_obj += -u[j] * enc.upper_bounds[j] + v[j] * enc.lower_bounds[j];
    magnitude_sum += u[j] + v[j];
  }
  double relax = eps_num * (1.0 + magnitude_sum);
  double linear_at_rho = herm_inner(grad, rep.rho_step1);
  rep.dual_value = rep.primal_value - linear_at_rho + dual_obj;
  rep.certified_lower_bound = rep.dual_value - relax;
  rep.eps_num_slack = relax + shift * trace_hi;
  double zeta = mixing_penalty(kMixEps, maps.key_dim * d);
  rep.certified_lower_bound -= zeta;
  rep.eps_num_slack += zeta;

  bool finite = std::isfinite(rep.certified_lower_bound) && std::isfinite(rep.dual_value);
  rep.status = (finite && rep.dual_feasibility_residual <= 1e-9)
                   ? SolverStatus::certified
                   : SolverStatus::feasibility_failed;
  return rep;
}

SolverReport solve_key_rate(const ConstraintSet& cs, const PostprocessingMaps& maps, double tol,
                            int max_iter, double eps_num, const Mat* initial) {
  FrankWolfeResult fw = frank_wolfe(cs, maps, tol, max_iter, initial);
  if (fw.subproblem_infeasible) {
    SolverReport rep;
    rep.rho_step1 = fw.rho;
    rep.iterations = fw.iterations;
    rep.status = SolverStatus::infeasible;
    return rep;
  }
  SolverReport rep = certified_dual_bound(fw.rho, cs, maps, eps_num);
  rep.iterations = fw.iterations;
  rep.frank_wolfe_gap = fw.gap;
  if (rep.status == SolverStatus::certified && fw.iterations >= max_iter && fw.gap > tol) {
    rep.status = SolverStatus::max_iter;
  }
  return rep;
}

} // namespace dmcv
