#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dmcv/protocol.hpp"

#include <cmath>
#include <stdexcept>

#include "dmcv/special.hpp"
#include "quad.hpp"

using namespace dmcv;

namespace {

constexpr double kPi = 3.14159265358979323846;

ProtocolParams ideal_params() {
  ProtocolParams p;
  p.amplitude = 0.85;
  p.delta_r = 0.45;
  p.M = 5.0;
  p.n_c = 12;
  return p;
}

ProtocolParams trusted_params() {
  ProtocolParams p = ideal_params();
  p.trusted = true;
  p.eta_d = 0.72;
  p.nu_el = 0.04;
  return p;
}

// Independent oracle: the sector integral of the ideal heterodyne density
// (1/pi) e^{-r^2} r^{n+m} e^{i theta (n-m)} / sqrt(n! m!), by tensor-product
// Gauss-Legendre in (r, theta).
Mat ideal_region_quadrature(int z, const ProtocolParams& p, int dim) {
  auto [rx, rw] = testutil::gauss_legendre(64, p.delta_r, p.M);
  double width = 2.0 * kPi / p.n_states;
  double th0 = 2.0 * kPi * z / p.n_states - 0.5 * width;
  auto [tx, tw] = testutil::gauss_legendre(64, th0, th0 + width);
  Mat out = Mat::Zero(dim, dim);
  for (size_t a = 0; a < rx.size(); ++a) {
    double r = rx[a];
    for (size_t b = 0; b < tx.size(); ++b) {
      double th = tx[b];
      double weight = rw[a] * tw[b] * r / kPi;
      for (int n = 0; n < dim; ++n) {
        for (int m = 0; m < dim; ++m) {
          double mag = std::exp(-r * r + (n + m) * std::log(r) -
                                0.5 * (log_factorial(n) + log_factorial(m)));
          double phase = th * (n - m);
          out(n, m) += weight * mag * cplx(std::cos(phase), std::sin(phase));
        }
      }
    }
  }
  return out;
}

// Independent oracle: the nonideal heterodyne density is a displaced thermal
// state, G_y = D(y/sqrt(eta_d)) rho_th D^dag / (pi eta_d). Exact rectangular
// displacement blocks make the k-sum exact up to the thermal tail.
Mat displaced_thermal_oracle(cplx y, double eta_d, double nu_el, int out_dim) {
  double nbar = (1.0 - eta_d + nu_el) / eta_d;
  int big = 70;
  TruncationSpec spec{big - 1, 1};
  Mat d = displacement_matrix(y / std::sqrt(eta_d), spec);
  Mat th = Mat::Zero(big, big);
  double q = nbar / (1.0 + nbar);
  for (int k = 0; k < big; ++k) th(k, k) = std::pow(q, k) / (1.0 + nbar);
  Mat g = d * th * d.adjoint() / (kPi * eta_d);
  return g.topLeftCorner(out_dim, out_dim);
}

Mat trusted_region_quadrature(int z, const ProtocolParams& p, const TruncationSpec& spec) {
  auto [rx, rw] = testutil::gauss_legendre(64, p.delta_r, p.M);
  double width = 2.0 * kPi / p.n_states;
  double th0 = 2.0 * kPi * z / p.n_states - 0.5 * width;
  auto [tx, tw] = testutil::gauss_legendre(64, th0, th0 + width);
  int dim = spec.dim();
  Mat out = Mat::Zero(dim, dim);
  for (size_t a = 0; a < rx.size(); ++a) {
    for (size_t b = 0; b < tx.size(); ++b) {
      cplx y = rx[a] * cplx(std::cos(tx[b]), std::sin(tx[b]));
      out += rw[a] * tw[b] * rx[a] * trusted_povm_element(y, p, spec).entries;
    }
  }
  return out;
}

Mat parity_signs(int dim) {
  Mat s = Mat::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) s(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
  return s;
}

} // namespace

TEST_CASE("params validation") {
  ProtocolParams p = ideal_params();
  CHECK_NOTHROW(p.validate());

  ProtocolParams bad = p;
  bad.probs = {0.3, 0.3, 0.3, 0.2};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.probs = {0.5, 0.5};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.delta_r = 5.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.eta_d = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.eta_d = 0.9;  // nonideal detector without the trusted flag
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_NOTHROW(trusted_params().validate());

  CHECK(p.prob(2) == doctest::Approx(0.25));
  CHECK(std::abs(p.signal(1) - cplx(0.0, 0.85)) < 1e-15);
  CHECK(std::abs(p.signal(2) - cplx(-0.85, 0.0)) < 1e-15);
  CHECK(trusted_params().detector_thermal_occupation() ==
        doctest::Approx((1.0 - 0.72 + 0.04) / 0.72).epsilon(1e-14));
}

TEST_CASE("rho_alice matches the coherent Gram matrix") {
  ProtocolParams p = ideal_params();
  p.probs = {0.3, 0.3, 0.2, 0.2};
  HermitianOp rho = rho_alice(p);
  REQUIRE(rho.dim == 4);

  TruncationSpec big{40, 1};
  for (int i = 0; i < 4; ++i) {
    Vec ki = coherent_ket(p.signal(i), big);
    for (int j = 0; j < 4; ++j) {
      Vec kj = coherent_ket(p.signal(j), big);
      cplx oracle = std::sqrt(p.prob(i) * p.prob(j)) * kj.dot(ki);
      CHECK(std::abs(rho.entries(i, j) - oracle) < 1e-10);
    }
    CHECK(rho.entries(i, i).real() == doctest::Approx(p.prob(i)).epsilon(1e-14));
  }

  Eigen::SelfAdjointEigenSolver<Mat> es(rho.entries);
  CHECK(es.eigenvalues().minCoeff() > -1e-14);
  CHECK(rho.entries.trace().real() == doctest::Approx(1.0).epsilon(1e-14));

  ProtocolParams vac = ideal_params();
  vac.amplitude = 0.0;
  HermitianOp rv = rho_alice(vac);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(std::abs(rv.entries(i, j) - 0.25) < 1e-15);
  Eigen::SelfAdjointEigenSolver<Mat> ev(rv.entries);
  CHECK(ev.eigenvalues()(3) == doctest::Approx(1.0));
  CHECK(std::abs(ev.eigenvalues()(2)) < 1e-15);
}

TEST_CASE("ideal region operator diagonal closed form") {
  ProtocolParams p = ideal_params();
  TruncationSpec spec{12, 0};
  HermitianOp r0 = region_operator_ideal(0, p, spec);
  double x1 = p.delta_r * p.delta_r, x2 = p.M * p.M;
  for (int n = 0; n <= 12; ++n) {
    double want = 0.25 * (regularized_gamma_q(n + 1.0, x1) - regularized_gamma_q(n + 1.0, x2));
    CHECK(r0.entries(n, n).real() == doctest::Approx(want).epsilon(1e-13));
  }
}

TEST_CASE("ideal region operator against sector quadrature") {
  ProtocolParams p = ideal_params();
  TruncationSpec spec{10, 0};
  for (int z : {0, 1, 3}) {
    HermitianOp r = region_operator_ideal(z, p, spec);
    Mat oracle = ideal_region_quadrature(z, p, spec.dim());
    CHECK((r.entries - oracle).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("ideal region operators resolve the identity without postselection") {
  ProtocolParams p = ideal_params();
  p.delta_r = 0.0;
  p.M = 30.0;
  TruncationSpec spec{10, 0};
  Mat sum = Mat::Zero(11, 11);
  for (int z = 0; z < 4; ++z) sum += region_operator_ideal(z, p, spec).entries;
  CHECK((sum - Mat::Identity(11, 11)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ideal region operator spectrum and edge cases") {
  ProtocolParams p = ideal_params();
  TruncationSpec spec{20, 0};
  HermitianOp r = region_operator_ideal(1, p, spec);
  Eigen::SelfAdjointEigenSolver<Mat> es(r.entries);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
  CHECK(es.eigenvalues().maxCoeff() < 1.0 + 1e-12);

  ProtocolParams collapsed = ideal_params();
  collapsed.delta_r = collapsed.M;
  HermitianOp zero = region_operator_ideal(0, collapsed, spec);
  CHECK(zero.entries.cwiseAbs().maxCoeff() < 1e-15);

  CHECK_THROWS_AS(region_operator_ideal(4, p, spec), std::invalid_argument);
  CHECK_THROWS_AS(region_operator_ideal(-1, p, spec), std::invalid_argument);
}

TEST_CASE("opposite sectors differ by Fock parity conjugation") {
  TruncationSpec spec{9, 0};
  Mat s = parity_signs(spec.dim());
  ProtocolParams pi = ideal_params();
  for (int z : {0, 1}) {
    Mat lhs = region_operator_ideal(z + 2, pi, spec).entries;
    Mat rhs = s * region_operator_ideal(z, pi, spec).entries * s;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
  }
  ProtocolParams pt = trusted_params();
  for (int z : {0, 1}) {
    Mat lhs = region_operator_trusted(z + 2, pt, spec).entries;
    Mat rhs = s * region_operator_trusted(z, pt, spec).entries * s;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("nonideal heterodyne density equals a displaced thermal state") {
  ProtocolParams p = trusted_params();
  TruncationSpec spec{12, 0};
  for (cplx y : {cplx(0.0, 0.0), cplx(0.7, 0.3), cplx(-1.2, 0.9), cplx(0.0, 2.0)}) {
    HermitianOp g = trusted_povm_element(y, p, spec);
    Mat oracle = displaced_thermal_oracle(y, p.eta_d, p.nu_el, spec.dim());
    CHECK((g.entries - oracle).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("nonideal heterodyne density vacuum value") {
  ProtocolParams p = trusted_params();
  TruncationSpec spec{4, 0};
  double nbar = p.detector_thermal_occupation();
  HermitianOp g = trusted_povm_element(0.0, p, spec);
  CHECK(g.entries(0, 0).real() ==
        doctest::Approx(1.0 / (kPi * p.eta_d * (1.0 + nbar))).epsilon(1e-13));
  for (int n = 0; n < 4; ++n) CHECK(std::abs(g.entries(n, n + 1)) < 1e-15);

  ProtocolParams ideal = ideal_params();
  CHECK_THROWS_AS(trusted_povm_element(0.5, ideal, spec), std::domain_error);
}

TEST_CASE("nonideal heterodyne density approaches the coherent projector") {
  ProtocolParams p = ideal_params();
  p.trusted = true;
  p.nu_el = 1e-8;
  TruncationSpec spec{8, 0};
  for (cplx y : {cplx(0.7, 0.0), cplx(-0.4, 1.1)}) {
    HermitianOp g = trusted_povm_element(y, p, spec);
    Vec ket = coherent_ket(y, spec);
    Mat proj = ket * ket.adjoint() / kPi;
    CHECK((g.entries - proj).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("trusted region operator against sector quadrature") {
  ProtocolParams p = trusted_params();
  TruncationSpec spec{8, 0};
  for (int z : {0, 2}) {
    HermitianOp r = region_operator_trusted(z, p, spec);
    Mat oracle = trusted_region_quadrature(z, p, spec);
    CHECK((r.entries - oracle).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("trusted region operators approach the ideal ones") {
  ProtocolParams p = ideal_params();
  p.trusted = true;
  p.nu_el = 1e-8;
  TruncationSpec spec{10, 0};
  for (int z = 0; z < 4; ++z) {
    Mat t = region_operator_trusted(z, p, spec).entries;
    Mat i = region_operator_ideal(z, p, spec).entries;
    CHECK((t - i).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("trusted region operators resolve the identity without postselection") {
  ProtocolParams p = trusted_params();
  p.delta_r = 0.0;
  p.M = 30.0;
  TruncationSpec spec{10, 0};
  Mat sum = Mat::Zero(11, 11);
  for (int z = 0; z < 4; ++z) sum += region_operator_trusted(z, p, spec).entries;
  CHECK((sum - Mat::Identity(11, 11)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("trusted region operator spectrum and dispatch") {
  ProtocolParams p = trusted_params();
  TruncationSpec spec{12, 0};
  HermitianOp r = region_operator_trusted(3, p, spec);
  Eigen::SelfAdjointEigenSolver<Mat> es(r.entries);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
  CHECK(es.eigenvalues().maxCoeff() < 1.0 + 1e-12);

  ProtocolParams collapsed = trusted_params();
  collapsed.delta_r = collapsed.M;
  CHECK(region_operator_trusted(0, collapsed, spec).entries.cwiseAbs().maxCoeff() < 1e-15);

  CHECK((region_operator(3, p, spec).entries - r.entries).cwiseAbs().maxCoeff() == 0.0);
  ProtocolParams pi = ideal_params();
  CHECK((region_operator(1, pi, spec).entries - region_operator_ideal(1, pi, spec).entries)
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("bounded observable coefficients: wide-range limits") {
  double eta_d = 0.72, nu_el = 0.04;
  double c2 = (1.0 + nu_el) / eta_d;
  BoundedCoeffs k = bounded_observable_coeffs(40.0, eta_d, nu_el);
  CHECK(k.A == doctest::Approx(eta_d).epsilon(1e-14));
  CHECK(k.B == doctest::Approx(nu_el).epsilon(1e-12));
  CHECK(k.C == doctest::Approx(eta_d * eta_d).epsilon(1e-14));
  CHECK(k.D ==
        doctest::Approx(eta_d * eta_d * (4.0 * c2 - 3.0 * c2 / eta_d - 1.0)).epsilon(1e-12));
  CHECK(k.E == doctest::Approx(0.0));
  CHECK(std::abs(k.E) < 1e-300);
}

TEST_CASE("bounded observable coefficients: ideal detector at the working range") {
  BoundedCoeffs k = bounded_observable_coeffs(5.0, 1.0, 0.0);
  double e = std::exp(-25.0);
  CHECK(k.A == doctest::Approx(1.0 - e / (std::sqrt(kPi) * 5.0)).epsilon(1e-14));
  CHECK(k.C == doctest::Approx(k.A).epsilon(1e-14));
  CHECK(std::abs(k.B) < 1e-9);
  CHECK(std::abs(k.D) < 1e-8);
  CHECK(std::abs(k.E) < 1e-8);
  CHECK_THROWS_AS(bounded_observable_coeffs(0.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("observable set: ideal structure") {
  ProtocolParams p = ideal_params();
  TruncationSpec spec{12, 0};
  std::vector<cplx> beta(4, cplx(0.0, 0.0));
  auto obs = observable_set(p, beta, spec);
  REQUIRE(obs.size() == 9);

  CHECK(obs[0].kind == ObservableSpec::Kind::identity);
  CHECK(obs[0].signal_index == -1);
  CHECK(obs[0].expected_bound == doctest::Approx(1.0));
  CHECK((obs[0].op.entries - Mat::Identity(4 * 13, 4 * 13)).cwiseAbs().maxCoeff() == 0.0);

  // With beta = 0 the moments are plain photon-number powers on block i.
  const auto& m1 = obs[1 + 2 * 2];  // first moment, signal 2
  CHECK(m1.kind == ObservableSpec::Kind::n_first_moment);
  CHECK(m1.signal_index == 2);
  CHECK(m1.expected_bound == doctest::Approx(24.5));
  for (int n = 0; n <= 12; ++n) {
    CHECK(m1.op.entries(2 * 13 + n, 2 * 13 + n).real() == doctest::Approx(double(n)));
    CHECK(std::abs(m1.op.entries(n, n)) < 1e-15);  // other blocks empty
  }
  const auto& m2 = obs[2];  // second moment, signal 0
  CHECK(m2.kind == ObservableSpec::Kind::n_second_moment);
  CHECK(m2.expected_bound == doctest::Approx(612.5));
  for (int n = 0; n <= 12; ++n)
    CHECK(m2.op.entries(n, n).real() == doctest::Approx(double(n) * n));

  std::vector<cplx> wrong(3);
  CHECK_THROWS_AS(observable_set(p, wrong, spec), std::invalid_argument);
}

TEST_CASE("observable set: truncated first moments stay below the range cap") {
  ProtocolParams p = ideal_params();
  TruncationSpec spec{12, 0};
  double eta = std::pow(10.0, -0.2);  // 10 km
  std::vector<cplx> beta;
  for (int i = 0; i < 4; ++i) beta.push_back(std::sqrt(eta) * p.signal(i));
  auto obs = observable_set(p, beta, spec);
  for (const auto& o : obs) {
    if (o.kind != ObservableSpec::Kind::n_first_moment) continue;
    Eigen::SelfAdjointEigenSolver<Mat> es(o.op.entries);
    CHECK(es.eigenvalues().maxCoeff() < o.expected_bound);
  }
}

TEST_CASE("observable set: trusted combination entries") {
  ProtocolParams p = trusted_params();
  TruncationSpec spec{12, 0};
  double eta = std::pow(10.0, -0.2);
  std::vector<cplx> beta;
  for (int i = 0; i < 4; ++i) beta.push_back(std::sqrt(eta * p.eta_d) * p.signal(i));
  auto obs = observable_set(p, beta, spec);
  REQUIRE(obs.size() == 9);
  BoundedCoeffs k = bounded_observable_coeffs(p.M, p.eta_d, p.nu_el);

  int i = 1;
  cplx center = beta[i] / std::sqrt(p.eta_d);
  const auto& m1 = obs[1 + 2 * i];
  double want = k.A * std::norm(center) + k.B;
  CHECK(m1.op.entries(i * 13, i * 13).real() == doctest::Approx(want).epsilon(1e-12));

  const auto& m2 = obs[2 + 2 * i];
  Mat n1 = displaced_number_op(center, 1, spec).entries;
  Mat n2 = displaced_number_op(center, 2, spec).entries;
  Mat block = m2.op.entries.block(i * 13, i * 13, 13, 13);
  CHECK((block - (k.C * n2 + k.D * n1 + k.E * Mat::Identity(13, 13))).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("key map classification") {
  CHECK(keymap_classify(cplx(1.0, 0.0), 0.45, 5.0) == 0);
  CHECK(keymap_classify(cplx(0.0, 0.1), 0.45, 5.0) == kDiscardSymbol);
  CHECK(keymap_classify(cplx(6.0, 6.0), 0.45, 5.0) == kDiscardSymbol);
  CHECK(keymap_classify(cplx(0.0, 1.3), 0.45, 5.0) == 1);
  CHECK(keymap_classify(cplx(-2.0, 0.1), 0.45, 5.0) == 2);
  CHECK(keymap_classify(cplx(0.3, -0.9), 0.45, 5.0) == 3);
  CHECK(keymap_classify(cplx(0.45, 0.0), 0.45, 5.0) == 0);   // boundary radii kept
  CHECK(keymap_classify(cplx(-5.0, 0.0), 0.45, 5.0) == 2);

  // Inside the annulus the symbol is the nearest constellation phase.
  for (int step = 0; step < 64; ++step) {
    double theta = -kPi + (2.0 * kPi * step + 0.01) / 64.0;
    cplx y = 2.0 * cplx(std::cos(theta), std::sin(theta));
    int want = static_cast<int>(std::lround(theta / (0.5 * kPi)));
    want = ((want % 4) + 4) % 4;
    CHECK(keymap_classify(y, 0.45, 5.0) == want);
  }
}
