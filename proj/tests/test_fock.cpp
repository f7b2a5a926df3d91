#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dmcv/fock.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

using namespace dmcv;

namespace {

// Independent oracle: exp(beta a^dag - conj(beta) a) via eigendecomposition
// of the Hermitian generator on a padded space, truncated afterwards.
Mat displacement_exponential_oracle(cplx beta, int n_c, int pad) {
  int pdim = n_c + 1 + pad;
  Mat a = annihilation_matrix(pdim);
  Mat h = cplx(0, 1) * (beta * a.adjoint() - std::conj(beta) * a);
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  Mat phases = Mat::Zero(pdim, pdim);
  for (int i = 0; i < pdim; ++i)
    phases(i, i) = std::exp(cplx(0, -es.eigenvalues()(i)));
  Mat d = es.eigenvectors() * phases * es.eigenvectors().adjoint();
  return d.topLeftCorner(n_c + 1, n_c + 1);
}

} // namespace

TEST_CASE("ladder matrices") {
  auto [lower, raise] = ladder_matrices({.n_c = 2, .pad = 0});
  CHECK(lower(0, 1).real() == doctest::Approx(1.0));
  CHECK(lower(1, 2).real() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(lower.col(0).norm() == doctest::Approx(0.0));
  CHECK((raise - lower.adjoint()).norm() == doctest::Approx(0.0));
  auto [lp, rp] = ladder_matrices({.n_c = 3, .pad = 5});
  CHECK(lp.rows() == 9);
  CHECK(lp(7, 8).real() == doctest::Approx(std::sqrt(8.0)).epsilon(1e-12));
}

TEST_CASE("displaced number operator at beta=0") {
  TruncationSpec spec{.n_c = 6, .pad = 0};
  auto n1 = displaced_number_op(0.0, 1, spec);
  auto n2 = displaced_number_op(0.0, 2, spec);
  for (int k = 0; k <= 6; ++k) {
    CHECK(n1.entries(k, k).real() == doctest::Approx(k));
    CHECK(n2.entries(k, k).real() == doctest::Approx(k * k));
  }
  CHECK(n1.entries.cwiseAbs().sum() == doctest::Approx(21.0));
}

TEST_CASE("displaced number operator entries for real displacement") {
  TruncationSpec spec{.n_c = 10, .pad = 0};
  auto n1 = displaced_number_op(0.5, 1, spec);
  CHECK(n1.entries(0, 0).real() == doctest::Approx(0.25));
  CHECK(n1.entries(0, 1).real() == doctest::Approx(-0.5));
  CHECK(n1.entries.imag().cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("displaced number operator against dense conjugation oracle") {
  TruncationSpec spec{.n_c = 12, .pad = 0};
  for (cplx beta : {cplx(0.6, 0.0), cplx(0.3, -0.7), cplx(-1.1, 0.2)}) {
    int pad = 25;
    int pdim = spec.n_c + 1 + pad;
    TruncationSpec padded{.n_c = pdim - 1, .pad = 10};
    Mat d = displacement_matrix(beta, padded);
    Mat nhat = Mat::Zero(pdim, pdim);
    for (int k = 0; k < pdim; ++k) nhat(k, k) = k;
    Mat conj1 = (d * nhat * d.adjoint()).topLeftCorner(13, 13);
    Mat conj2 = (d * nhat * nhat * d.adjoint()).topLeftCorner(13, 13);
    auto n1 = displaced_number_op(beta, 1, spec);
    auto n2 = displaced_number_op(beta, 2, spec);
    CHECK((n1.entries - conj1).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((n2.entries - conj2).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("displaced number operator pad stability") {
  TruncationSpec a{.n_c = 12, .pad = 10};
  TruncationSpec b{.n_c = 12, .pad = 20};
  cplx beta(0.85, 0.0);
  auto x = displaced_number_op(beta, 2, a);
  auto y = displaced_number_op(beta, 2, b);
  CHECK((x.entries - y.entries).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("displaced number operator near positivity") {
  TruncationSpec spec{.n_c = 20, .pad = 10};
  for (double b : {0.4, 0.85, 1.2}) {
    auto op = displaced_number_op(b, 1, spec);
    Eigen::SelfAdjointEigenSolver<Mat> es(op.entries);
    CHECK(es.eigenvalues().minCoeff() > -1e-6);
  }
}

TEST_CASE("displacement matrix basics") {
  TruncationSpec spec{.n_c = 8, .pad = 0};
  Mat id = displacement_matrix(0.0, spec);
  CHECK((id - Mat::Identity(9, 9)).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  cplx beta(0.7, -0.4);
  Mat d = displacement_matrix(beta, spec);
  CHECK(std::abs(d(0, 0) - std::exp(cplx(-0.5 * std::norm(beta)))) < 1e-14);
  for (int j = 0; j <= 8; ++j) CHECK(d.col(j).norm() <= 1.0 + 1e-12);
}

TEST_CASE("displacement matrix against exponential oracle") {
  for (cplx beta : {cplx(1.0, 0.0), cplx(0.45, 0.9), cplx(-0.3, -0.2)}) {
    TruncationSpec spec{.n_c = 30, .pad = 0};
    Mat d = displacement_matrix(beta, spec);
    Mat oracle = displacement_exponential_oracle(beta, 30, 40);
    CHECK((d - oracle).topLeftCorner(15, 15).cwiseAbs().maxCoeff() < 1e-10);
    Mat gram = (d.adjoint() * d).topLeftCorner(10, 10);
    CHECK((gram - Mat::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("displacement of vacuum is the coherent ket") {
  cplx alpha(0.85, 0.3);
  TruncationSpec spec{.n_c = 25, .pad = 0};
  Mat d = displacement_matrix(alpha, spec);
  Vec ket = coherent_ket(alpha, spec);
  CHECK((d.col(0) - ket).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("coherent kets") {
  TruncationSpec spec{.n_c = 40, .pad = 0};
  Vec vac = coherent_ket(0.0, spec);
  CHECK(vac(0).real() == doctest::Approx(1.0));
  CHECK(vac.tail(40).norm() == doctest::Approx(0.0));

  Vec a = coherent_ket(1.0, spec);
  Vec b = coherent_ket(0.0, spec);
  double overlap = std::norm(a.dot(b));
  CHECK(overlap == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));

  Vec c = coherent_ket(0.85, {.n_c = 20, .pad = 0});
  CHECK(1.0 - c.squaredNorm() < 1e-12);
  CHECK(1.0 - c.squaredNorm() >= 0.0);
}

TEST_CASE("partial trace") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  auto rand_herm = [&](int d) {
    Mat m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = cplx(g(rng), g(rng));
    return hermitize(m).eval();
  };

  Mat ra = rand_herm(3), sb = rand_herm(4);
  Mat prod = tensor(ra, sb);
  Mat tr = partial_trace_B(prod, 3, 4);
  CHECK((tr - ra * sb.trace()).cwiseAbs().maxCoeff() < 1e-12);

  Mat x = rand_herm(12);
  CHECK(std::abs(partial_trace_B(x, 3, 4).trace() - x.trace()) < 1e-12);

  Vec bell = Vec::Zero(4);
  bell(0) = 1.0 / std::sqrt(2.0);
  bell(3) = 1.0 / std::sqrt(2.0);
  Mat rho = bell * bell.adjoint();
  Mat red = partial_trace_B(rho, 2, 2);
  CHECK((red - 0.5 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(partial_trace_B(x, 5, 2), std::invalid_argument);
}

TEST_CASE("hermitian op constructor") {
  Mat ok(2, 2);
  ok << cplx(1, 0), cplx(0.5, 0.25), cplx(0.5, -0.25), cplx(2, 0);
  auto h = HermitianOp::from(ok, "probe");
  CHECK(h.dim == 2);
  CHECK((h.entries - h.entries.adjoint()).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(h.label == "probe");

  Mat bad = ok;
  bad(0, 1) += cplx(1e-6, 0);
  CHECK_THROWS_AS(HermitianOp::from(bad, ""), std::invalid_argument);
}
