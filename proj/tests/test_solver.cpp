#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dmcv/channel.hpp"
#include "dmcv/solver.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>

using namespace dmcv;

namespace {

Mat random_hermitian(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Mat m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
  }
  return hermitize(m);
}

Mat random_density(int n, unsigned seed, double mix = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Mat m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
  }
  Mat rho = m * m.adjoint();
  rho /= rho.trace().real();
  rho = (1.0 - mix) * rho + mix * Mat::Identity(n, n) / n;
  return hermitize(rho);
}

// Random PSD region operators scaled so their sum stays strictly below the
// identity (a nonzero discard mass).
std::vector<Mat> random_regions(int dim_b, int count, unsigned seed) {
  std::vector<Mat> regions;
  for (int k = 0; k < count; ++k) {
    Mat h = random_hermitian(dim_b, seed + 17 * k);
    regions.push_back((h * h.adjoint()).eval());
  }
  Mat sum = Mat::Zero(dim_b, dim_b);
  for (const Mat& r : regions) sum += r;
  Eigen::SelfAdjointEigenSolver<Mat> es(sum, Eigen::EigenvaluesOnly);
  double scale = 0.9 / es.eigenvalues().maxCoeff();
  for (Mat& r : regions) r *= scale;
  return regions;
}

// Complementary diagonal projectors splitting the Fock levels in two.
std::vector<Mat> projector_regions(int dim_b) {
  Mat p0 = Mat::Zero(dim_b, dim_b), p1 = Mat::Zero(dim_b, dim_b);
  for (int i = 0; i < dim_b; ++i) {
    if (i < dim_b / 2) {
      p0(i, i) = 1.0;
    } else {
      p1(i, i) = 1.0;
    }
  }
  return {p0, p1};
}

Mat pinch_onto_projectors(const Mat& sigma, const std::vector<Mat>& regions, int dim_a) {
  Mat out = Mat::Zero(sigma.rows(), sigma.cols());
  Mat eye_a = Mat::Identity(dim_a, dim_a);
  for (const Mat& r : regions) {
    Mat k = tensor(eye_a, r);
    out += k * sigma * k;
  }
  return hermitize(out);
}

ProtocolParams ideal_params() {
  ProtocolParams p;
  p.amplitude = 0.85;
  p.delta_r = 0.45;
  p.M = 5.0;
  p.n_c = 12;
  return p;
}

// Tr[h log2 h] through the integral representation of the logarithm on the
// support-completed matrix, with 128 Gauss-Legendre nodes.
double tr_xlog2x_integral(const Mat& h) {
  const int n = static_cast<int>(h.rows());
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  Mat proj = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    if (es.eigenvalues()[k] > 1e-12) {
      proj += es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
    }
  }
  Mat a2 = h + (Mat::Identity(n, n) - proj);
  Mat shifted = a2 - Mat::Identity(n, n);
  Mat log_a = Mat::Zero(n, n);
  using GL = boost::math::quadrature::gauss<double, 128>;
  const auto& absc = GL::abscissa();
  const auto& wts = GL::weights();
  auto accumulate = [&](double t, double w) {
    Mat denom = t * shifted + Mat::Identity(n, n);
    log_a += w * shifted * denom.inverse();
  };
  for (std::size_t i = 0; i < absc.size(); ++i) {
    accumulate(0.5 * (1.0 + absc[i]), 0.5 * wts[i]);
    accumulate(0.5 * (1.0 - absc[i]), 0.5 * wts[i]);
  }
  return (h * log_a).trace().real() / std::log(2.0);
}

double entropy_difference_integral(const Mat& g, int key_dim, int d) {
  double f = tr_xlog2x_integral(g);
  for (int z = 0; z < key_dim; ++z) {
    f -= tr_xlog2x_integral(g.block(z * d, z * d, d, d));
  }
  return f;
}

// Small constraint system anchored at the product point rho_a (x) chi, which
// is feasible for every weight.
struct SmallInstance {
  ConstraintSet cs;
  PostprocessingMaps maps;
  Mat anchor;
};

SmallInstance small_instance(double weight, double mu, double t, unsigned seed) {
  SmallInstance inst;
  inst.cs.dim_a = 2;
  inst.cs.dim_b = 3;
  inst.cs.weight = weight;
  inst.cs.rho_a = random_density(2, seed);
  Mat chi = random_density(3, seed + 1);
  inst.anchor = tensor(inst.cs.rho_a, chi);
  for (int j = 0; j < 2; ++j) {
    MomentConstraint mc;
    Mat gm = random_hermitian(6, seed + 2 + j);
    mc.op = HermitianOp::from(gm, "probe");
    mc.value = (gm * inst.anchor).trace().real();
    mc.mu = mu;
    mc.t = t;
    Eigen::SelfAdjointEigenSolver<Mat> es(gm, Eigen::EigenvaluesOnly);
    mc.cap = es.eigenvalues().cwiseAbs().maxCoeff();
    inst.cs.observables.push_back(mc);
  }
  inst.maps = make_postprocessing_maps(random_regions(3, 2, seed + 11), 2);
  return inst;
}

} // namespace

TEST_CASE("postprocessing maps from the protocol definition") {
  ProtocolParams params = ideal_params();
  TruncationSpec spec{params.n_c, 0};
  PostprocessingMaps maps = build_postprocessing_maps(params, spec);
  CHECK(maps.key_dim == 4);
  CHECK(maps.dim_in == 52);
  CHECK(maps.kraus.rows() == 208);
  CHECK(maps.kraus.cols() == 52);

  ChannelModel channel = ChannelModel::from_distance(10.0, 0.01);
  Mat rho_h = honest_joint_state(channel, params, spec).entries;
  HonestStatistics honest = honest_statistics(channel, params, 0.95, 5e8, 0.2e-10, 4.0);
  double passed = maps.apply(rho_h).trace().real();
  CHECK(std::fabs(passed - honest.p_pass * rho_h.trace().real()) <= 1e-6);

  Mat m = random_hermitian(208, 3);
  Mat once = maps.pinch(m);
  CHECK((maps.pinch(once) - once).cwiseAbs().maxCoeff() == 0.0);
  Mat grho = maps.apply(random_density(52, 4));
  Mat pinched = maps.pinch(grho);
  for (int z = 0; z < 4; ++z) {
    CHECK((grho.block(52 * z, 52 * z, 52, 52) - pinched.block(52 * z, 52 * z, 52, 52))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }

  for (int trial = 0; trial < 5; ++trial) {
    Mat rho = random_density(52, 100 + trial);
    CHECK(maps.apply(rho).trace().real() <= rho.trace().real() * (1.0 + 1e-12) + 1e-12);
  }

  std::vector<Mat> bad = {(-0.1) * Mat::Identity(3, 3), Mat::Identity(3, 3)};
  CHECK_THROWS_AS(make_postprocessing_maps(bad, 2), std::invalid_argument);
}

TEST_CASE("objective value properties") {
  std::vector<Mat> regions = projector_regions(6);
  PostprocessingMaps maps = make_postprocessing_maps(regions, 2);

  Mat sigma = random_density(12, 21);
  Mat rho_pinched = pinch_onto_projectors(sigma, regions, 2);
  CHECK(objective(rho_pinched, maps) <= 1e-10);

  for (int trial = 0; trial < 4; ++trial) {
    Mat r1 = random_density(12, 30 + trial), r2 = random_density(12, 40 + trial);
    double mid = objective(0.5 * (r1 + r2), maps);
    CHECK(mid <= 0.5 * (objective(r1, maps) + objective(r2, maps)) + 1e-10);
  }
}

TEST_CASE("objective against closed form and integral logarithm") {
  ProtocolParams params = ideal_params();
  TruncationSpec spec{params.n_c, 0};
  PostprocessingMaps maps = build_postprocessing_maps(params, spec);

  Mat rho_a = Mat::Zero(4, 4);
  rho_a(0, 0) = 1.0;
  Mat vac_proj = Mat::Zero(13, 13);
  vac_proj(0, 0) = 1.0;
  Mat rho = tensor(rho_a, vac_proj);

  double nu = 0.0, f_scalar = 0.0;
  for (int z = 0; z < 4; ++z) {
    double nz = region_operator(z, params, spec).entries(0, 0).real();
    nu += nz;
    f_scalar -= nz * std::log2(nz);
  }
  f_scalar += nu * std::log2(nu);

  double f = objective(rho, maps);
  CHECK(f == doctest::Approx(f_scalar).epsilon(1e-9));

  Mat grho = maps.apply(rho);
  double f_integral = entropy_difference_integral(grho, 4, 52);
  CHECK(f == doctest::Approx(f_integral).epsilon(1e-9));
}

TEST_CASE("gradient matches finite differences") {
  PostprocessingMaps maps = make_postprocessing_maps(random_regions(8, 3, 7), 4);
  Mat rho = random_density(32, 8);
  Mat grad;
  objective_and_gradient(rho, maps, &grad);
  CHECK((grad - grad.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);

  const double h = 1e-5;
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    Mat delta = random_hermitian(32, 500 + trial);
    delta -= (delta.trace() / 32.0) * Mat::Identity(32, 32);
    delta /= delta.norm();
    double fd = (objective(rho + h * delta, maps) - objective(rho - h * delta, maps)) / (2.0 * h);
    double an = (grad * delta).trace().real();
    double rel = std::fabs(fd - an) / std::max({std::fabs(fd), std::fabs(an), 1e-10});
    CHECK(rel <= 1e-4);
  }
}

TEST_CASE("gradient vanishes along pinched directions at a pinched point") {
  std::vector<Mat> regions = projector_regions(6);
  PostprocessingMaps maps = make_postprocessing_maps(regions, 2);
  Mat rho = pinch_onto_projectors(random_density(12, 55), regions, 2);
  Mat grad = gradient(rho, maps);
  for (int trial = 0; trial < 4; ++trial) {
    Mat delta = pinch_onto_projectors(random_hermitian(12, 60 + trial), regions, 2);
    delta -= (delta.trace() / 12.0) * Mat::Identity(12, 12);
    CHECK(std::fabs((grad * delta).trace().real()) <= 1e-8);
  }
}

TEST_CASE("equality and interval encodings of the subproblem agree") {
  SmallInstance base = small_instance(0.0, 0.0, 0.0, 1234);
  Mat w_dir = random_hermitian(6, 77);

  SubproblemEncoding enc_eq = build_linear_subproblem(w_dir, base.cs);
  CHECK(enc_eq.asymptotic);
  CHECK(enc_eq.problem.block_dims.size() == 1);
  CHECK(enc_eq.problem.rows.size() == 2 + 4);
  ConicSolution sol_eq = solve_conic(enc_eq.problem);
  REQUIRE(sol_eq.status == ConicStatus::optimal);

  double anchor_value = (w_dir * base.anchor).trace().real();
  CHECK(sol_eq.primal_objective <= anchor_value + 1e-7);

  ConstraintSet slim = base.cs;
  for (auto& obs : slim.observables) obs.mu = 1e-9;
  SubproblemEncoding enc_iv = build_linear_subproblem(w_dir, slim);
  CHECK(enc_iv.asymptotic);
  CHECK(enc_iv.problem.rows.size() == 4 + 4);
  ConicSolution sol_iv = solve_conic(enc_iv.problem);
  REQUIRE(sol_iv.status == ConicStatus::optimal);
  CHECK(std::fabs(sol_eq.primal_objective - sol_iv.primal_objective) <= 1e-6);

  ConstraintSet tiny_w = base.cs;
  tiny_w.weight = 1e-16;
  SubproblemEncoding enc_w = build_linear_subproblem(w_dir, tiny_w);
  CHECK(!enc_w.asymptotic);
  CHECK(enc_w.problem.block_dims.size() == 5);
  ConicSolution sol_w = solve_conic(enc_w.problem);
  REQUIRE((sol_w.status == ConicStatus::optimal || sol_w.status == ConicStatus::max_iter));
  CHECK(std::fabs(sol_eq.primal_objective - sol_w.primal_objective) <= 1e-6);
}

TEST_CASE("certified bound is invariant under observable rescaling") {
  SmallInstance inst = small_instance(0.01, 0.05, 0.0, 4321);
  ConstraintSet scaled = inst.cs;
  const double c = 137.0;
  for (auto& obs : scaled.observables) {
    obs.op = HermitianOp::from(c * obs.op.entries, "scaled");
    obs.value *= c;
    obs.mu *= c;
    obs.cap *= c;
  }

  // The certificate at a fixed state must not depend on the scale of the
  // constraint operators.
  SolverReport c1 = certified_dual_bound(inst.anchor, inst.cs, inst.maps, 1e-8);
  SolverReport c2 = certified_dual_bound(inst.anchor, scaled, inst.maps, 1e-8);
  REQUIRE(c1.status == SolverStatus::certified);
  REQUIRE(c2.status == SolverStatus::certified);
  CHECK(std::fabs(c1.certified_lower_bound - c2.certified_lower_bound) <= 1e-7);

  // Full solves take scale-dependent descent paths, so their bounds agree
  // only up to the sum of the reported duality gaps.
  SolverReport rep1 =
      solve_key_rate(inst.cs, inst.maps, 1e-8, 200, 1e-8, &inst.anchor);
  SolverReport rep2 = solve_key_rate(scaled, inst.maps, 1e-8, 200, 1e-8, &inst.anchor);
  REQUIRE(rep1.status == SolverStatus::certified);
  REQUIRE(rep2.status == SolverStatus::certified);
  CHECK(std::fabs(rep1.certified_lower_bound - rep2.certified_lower_bound) <=
        rep1.frank_wolfe_gap + rep2.frank_wolfe_gap + 1e-6);
}

TEST_CASE("descent stops immediately at a stationary pinched point") {
  std::vector<Mat> regions = projector_regions(6);
  PostprocessingMaps maps = make_postprocessing_maps(regions, 2);
  Mat rho = pinch_onto_projectors(random_density(12, 321), regions, 2);

  ConstraintSet cs;
  cs.dim_a = 2;
  cs.dim_b = 6;
  cs.weight = 0.01;
  cs.rho_a = partial_trace_B(rho, 2, 6);
  MomentConstraint mc;
  Mat gm = random_hermitian(12, 322);
  mc.op = HermitianOp::from(gm, "probe");
  mc.value = (gm * rho).trace().real();
  mc.mu = 0.1;
  Eigen::SelfAdjointEigenSolver<Mat> es(gm, Eigen::EigenvaluesOnly);
  mc.cap = es.eigenvalues().cwiseAbs().maxCoeff();
  cs.observables.push_back(mc);

  FrankWolfeResult fw = frank_wolfe(cs, maps, 1e-6, 50, &rho);
  CHECK(fw.iterations == 0);
  CHECK(fw.gap <= 1e-6);
  CHECK(fw.objective_value <= 1e-10);
}

TEST_CASE("descent is monotone and the certificate closes the gap") {
  SmallInstance inst = small_instance(0.02, 0.02, 0.01, 2026);
  FrankWolfeResult fw = frank_wolfe(inst.cs, inst.maps, 1e-7, 80);
  REQUIRE(!fw.subproblem_infeasible);
  for (std::size_t k = 1; k < fw.objective_history.size(); ++k) {
    CHECK(fw.objective_history[k] <= fw.objective_history[k - 1] + 1e-12);
  }
  CHECK(fw.objective_value >= 0.0);
  CHECK((fw.gap <= 1e-7 || fw.iterations == 80));

  SolverReport rep = certified_dual_bound(fw.rho, inst.cs, inst.maps, 1e-8);
  REQUIRE(rep.status == SolverStatus::certified);
  CHECK(rep.certified_lower_bound <= rep.primal_value + 1e-6);
  CHECK(rep.dual_feasibility_residual <= 1e-9);
  CHECK(rep.primal_value - rep.certified_lower_bound <=
        fw.gap + rep.eps_num_slack + 1e-5);

  SolverReport looser = certified_dual_bound(fw.rho, inst.cs, inst.maps, 1e-4);
  CHECK(looser.certified_lower_bound <= rep.certified_lower_bound + 1e-12);
}

TEST_CASE("degenerate instance matches a direct parameterized search") {
  const int da = 4, db = 3, d = 12;
  PostprocessingMaps maps = make_postprocessing_maps(random_regions(db, 2, 909), da);
  ConstraintSet cs;
  cs.dim_a = da;
  cs.dim_b = db;
  cs.weight = 0.0;
  cs.rho_a = random_density(da, 910);
  Mat chi = random_density(db, 911);
  Mat anchor = tensor(cs.rho_a, chi);

  SolverReport rep = solve_key_rate(cs, maps, 1e-7, 250, 1e-8, &anchor);
  REQUIRE((rep.status == SolverStatus::certified || rep.status == SolverStatus::max_iter));

  // Direct search: projected gradient descent over the exact-reduction slice,
  // plus random product candidates.
  Mat eye_b = Mat::Identity(db, db);
  auto project = [&](Mat rho) {
    rho = hermitize(rho);
    Eigen::SelfAdjointEigenSolver<Mat> es(rho);
    RealVec lam = es.eigenvalues().cwiseMax(0.0);
    rho = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
    Mat diff = cs.rho_a - partial_trace_B(rho, da, db);
    rho += tensor(diff, eye_b) / static_cast<double>(db);
    return hermitize(rho);
  };
  double best = objective(anchor, maps);
  Mat cur = anchor;
  for (int k = 0; k < 400; ++k) {
    Mat g = gradient(cur, maps);
    double eta = 0.3 / (1.0 + k / 40.0);
    cur = project(cur - eta * g);
    Eigen::SelfAdjointEigenSolver<Mat> es(cur, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9) continue;
    best = std::min(best, objective(cur, maps));
  }
  for (int trial = 0; trial < 100; ++trial) {
    Mat candidate = tensor(cs.rho_a, random_density(db, 2000 + trial, 0.1));
    best = std::min(best, objective(candidate, maps));
  }
  best = std::min(best, objective(rep.rho_step1, maps));
  cur = rep.rho_step1;
  for (int k = 0; k < 400; ++k) {
    Mat g = gradient(cur, maps);
    double eta = 0.05 / (1.0 + k / 40.0);
    cur = project(cur - eta * g);
    Eigen::SelfAdjointEigenSolver<Mat> es(cur, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9) continue;
    best = std::min(best, objective(cur, maps));
  }

  REQUIRE(rep.frank_wolfe_gap <= 2e-2);
  CHECK(rep.certified_lower_bound <= best + 1e-6);
  CHECK(best - rep.certified_lower_bound <=
        rep.frank_wolfe_gap + rep.eps_num_slack + 2e-3);
}

TEST_CASE("printed one-sided bounds are reported infeasible") {
  SmallInstance inst = small_instance(0.02, 0.1, 0.0, 777);
  inst.cs.literal_bounds = true;
  SolverReport rep = solve_key_rate(inst.cs, inst.maps, 1e-6, 40);
  CHECK(rep.status == SolverStatus::infeasible);
}

TEST_CASE("solver input validation") {
  SmallInstance inst = small_instance(0.01, 0.05, 0.0, 5150);
  ConstraintSet bad = inst.cs;
  bad.weight = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = inst.cs;
  bad.rho_a *= 2.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = inst.cs;
  bad.observables[0].mu = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  Mat not_psd = Mat::Identity(6, 6);
  not_psd(0, 0) = -0.5;
  CHECK_THROWS_AS(objective(not_psd, inst.maps), std::invalid_argument);

  CHECK_THROWS_AS(build_linear_subproblem(Mat::Zero(5, 5), inst.cs), std::invalid_argument);
}
