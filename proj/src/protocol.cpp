#include "dmcv/protocol.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dmcv/special.hpp"

namespace dmcv {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Integral of exp(i phi (n-m)) over the angular sector of symbol z.
cplx angular_factor(int n, int m, int z, int n_states) {
  int k = n - m;
  if (k == 0) return 2.0 * kPi / n_states;
  double mag = 2.0 * std::sin(k * kPi / n_states) / k;
  double phase = 2.0 * kPi * k * z / n_states;
  return mag * cplx(std::cos(phase), std::sin(phase));
}

double log_povm_prefactor(int n, int m, double eta_d, double nbar) {
  int alpha = m - n;
  return -std::log(kPi) - (0.5 * alpha + 1.0) * std::log(eta_d) +
         0.5 * (log_factorial(n) - log_factorial(m)) + n * std::log(nbar) -
         (m + 1) * std::log1p(nbar);
}
} // namespace

void ProtocolParams::validate() const {
  if (n_states < 2) throw std::invalid_argument("params: need at least two signal states");
  if (amplitude < 0.0) throw std::invalid_argument("params: negative amplitude");
  if (!probs.empty()) {
    if (static_cast<int>(probs.size()) != n_states)
      throw std::invalid_argument("params: probs size mismatch");
    double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("params: probs must sum to 1");
    for (double p : probs)
      if (p <= 0.0) throw std::invalid_argument("params: probs must be positive");
  }
  if (delta_r < 0.0) throw std::invalid_argument("params: negative delta_r");
  if (M <= 0.0) throw std::invalid_argument("params: M must be positive");
  if (delta_r >= M) throw std::invalid_argument("params: delta_r must lie below M");
  if (n_c < 1) throw std::invalid_argument("params: cutoff too small");
  if (eta_d <= 0.0 || eta_d > 1.0) throw std::invalid_argument("params: eta_d outside (0,1]");
  if (nu_el < 0.0) throw std::invalid_argument("params: negative nu_el");
  if (!trusted && (eta_d != 1.0 || nu_el != 0.0))
    throw std::invalid_argument("params: untrusted model requires an ideal detector");
}

double ProtocolParams::prob(int i) const {
  return probs.empty() ? 1.0 / n_states : probs[i];
}

cplx ProtocolParams::signal(int i) const {
  double phase = 2.0 * kPi * i / n_states;
  return amplitude * cplx(std::cos(phase), std::sin(phase));
}

double ProtocolParams::detector_thermal_occupation() const {
  return (1.0 - eta_d + nu_el) / eta_d;
}

HermitianOp rho_alice(const ProtocolParams& params) {
  params.validate();
  int n = params.n_states;
  Mat rho(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      cplx ai = params.signal(i), aj = params.signal(j);
      cplx overlap = std::exp(-0.5 * std::norm(ai) - 0.5 * std::norm(aj) + std::conj(aj) * ai);
      rho(i, j) = std::sqrt(params.prob(i) * params.prob(j)) * overlap;
    }
  }
  return HermitianOp::from(rho, "rho_alice");
}

HermitianOp region_operator_ideal(int z, const ProtocolParams& params, const TruncationSpec& spec) {
  if (z < 0 || z >= params.n_states) throw std::invalid_argument("region_operator: bad symbol");
  int dim = spec.dim();
  double x1 = params.delta_r * params.delta_r;
  double x2 = params.M * params.M;
  Mat r(dim, dim);
  for (int n = 0; n < dim; ++n) {
    for (int m = n; m < dim; ++m) {
      double s = 0.5 * (n + m) + 1.0;
      double mass = regularized_gamma_q(s, x1) - regularized_gamma_q(s, x2);
      double radial =
          0.5 * std::exp(log_gamma(s) - 0.5 * (log_factorial(n) + log_factorial(m))) * mass;
      cplx val = angular_factor(n, m, z, params.n_states) * radial / kPi;
      r(n, m) = val;
      r(m, n) = std::conj(val);
    }
  }
  return HermitianOp::from(r, "region_ideal_" + std::to_string(z));
}

HermitianOp trusted_povm_element(cplx y, const ProtocolParams& params, const TruncationSpec& spec) {
  double nbar = params.detector_thermal_occupation();
  if (nbar <= 0.0)
    throw std::domain_error("trusted_povm_element: ideal detector limit, use the coherent projector");
  double a = 1.0 / (params.eta_d * (1.0 + nbar));
  double b = params.eta_d * nbar * (1.0 + nbar);
  double r2 = std::norm(y);
  double argy = std::arg(y);
  int dim = spec.dim();
  Mat g(dim, dim);
  for (int n = 0; n < dim; ++n) {
    for (int m = n; m < dim; ++m) {
      int alpha = m - n;
      cplx val = 0.0;
      if (alpha == 0 || r2 > 0.0) {
        double lnmag = log_povm_prefactor(n, m, params.eta_d, nbar) +
                       log_laguerre_at_negative(n, alpha, r2 / b) - a * r2;
        if (alpha > 0) lnmag += 0.5 * alpha * std::log(r2);
        double phase = -alpha * argy;
        val = std::exp(lnmag) * cplx(std::cos(phase), std::sin(phase));
      }
      g(n, m) = val;
      g(m, n) = std::conj(val);
    }
  }
  return HermitianOp::from(g, "povm_trusted");
}

HermitianOp region_operator_trusted(int z, const ProtocolParams& params, const TruncationSpec& spec) {
  if (z < 0 || z >= params.n_states) throw std::invalid_argument("region_operator: bad symbol");
  double nbar = params.detector_thermal_occupation();
  if (nbar <= 0.0)
    throw std::domain_error("region_operator_trusted: ideal detector limit, use the ideal operator");
  double a = 1.0 / (params.eta_d * (1.0 + nbar));
  double b = params.eta_d * nbar * (1.0 + nbar);
  double x1 = a * params.delta_r * params.delta_r;
  double x2 = a * params.M * params.M;
  double lnb = std::log(b);
  double lna = std::log(a);
  int dim = spec.dim();
  Mat r(dim, dim);
  for (int n = 0; n < dim; ++n) {
    for (int m = n; m < dim; ++m) {
      int alpha = m - n;
      // log-sum-exp over the Laguerre expansion; every term is positive
      double peak = -INFINITY;
      std::vector<double> lts(n + 1, -INFINITY);
      for (int j = 0; j <= n; ++j) {
        double sj = 0.5 * alpha + j + 1.0;
        double mass = regularized_gamma_q(sj, x1) - regularized_gamma_q(sj, x2);
        if (mass <= 0.0) continue;
        lts[j] = log_binomial(m, n - j) - j * lnb - log_factorial(j) - sj * lna + log_gamma(sj) +
                 std::log(mass);
        peak = std::max(peak, lts[j]);
      }
      cplx val = 0.0;
      if (std::isfinite(peak)) {
        double acc = 0.0;
        for (int j = 0; j <= n; ++j) acc += std::exp(lts[j] - peak);
        double lnmag = log_povm_prefactor(n, m, params.eta_d, nbar) + peak + std::log(0.5 * acc);
        val = angular_factor(n, m, z, params.n_states) * std::exp(lnmag);
      }
      r(n, m) = val;
      r(m, n) = std::conj(val);
    }
  }
  return HermitianOp::from(r, "region_trusted_" + std::to_string(z));
}

HermitianOp region_operator(int z, const ProtocolParams& params, const TruncationSpec& spec) {
  return params.trusted ? region_operator_trusted(z, params, spec)
                        : region_operator_ideal(z, params, spec);
}

BoundedCoeffs bounded_observable_coeffs(double M, double eta_d, double nu_el) {
  if (M <= 0.0) throw std::invalid_argument("bounded_observable_coeffs: M must be positive");
  double c2 = (1.0 + nu_el) / eta_d;
  double c = std::sqrt(c2);
  double mt = M / (std::sqrt(eta_d) * c);
  double mt2 = mt * mt;
  double e = std::exp(-mt2);
  double rp = std::sqrt(kPi);

  BoundedCoeffs k{};
  k.A = eta_d * (1.0 - e / (rp * mt));
  k.B = eta_d * c2 * (1.0 - (2.0 * mt + 2.0 * mt2 * rp + 2.0 * rp) / (kPi * mt) * e) +
        2.0 * eta_d * c * (mt2 * rp * eta_d + 1.0) / (rp * mt) * e -
        (1.0 - 2.0 * e / (rp * mt));
  k.C = eta_d * eta_d * (1.0 - e / (rp * mt));
  k.D = eta_d * eta_d *
        (4.0 * c2 * (1.0 - (8.0 * mt2 + 8.0 * mt + 1.0) / (4.0 * rp * mt) * e) -
         3.0 * c2 / eta_d * (1.0 - (9.0 * c2 + 4.0 * mt2) / (6.0 * rp * mt * c2) * e) -
         (1.0 - e / (rp * mt)));
  k.E = 2.0 * eta_d * eta_d * c2 * (1.0 - (13.0 * rp - 3.0 * mt - 4.0 * mt2 * rp * c2) / (8.0 * kPi * mt)) * e -
        3.0 * eta_d * c2 * (1.0 - (3.0 - c2) / (2.0 * rp * mt)) * e +
        (1.0 - (eta_d * eta_d * c2 * c2 * mt2 * mt2 + 3.0 * eta_d * c2 * mt2 - 3.0 +
                2.0 * eta_d * eta_d) /
                   (rp * mt * eta_d * eta_d)) * e;
  return k;
}

std::vector<ObservableSpec> observable_set(const ProtocolParams& params,
                                           const std::vector<cplx>& beta,
                                           const TruncationSpec& spec) {
  params.validate();
  if (static_cast<int>(beta.size()) != params.n_states)
    throw std::invalid_argument("observable_set: need one center per signal");
  int dA = params.n_states;
  int dB = spec.dim();
  std::vector<ObservableSpec> out;
  out.push_back({ObservableSpec::Kind::identity, -1,
                 HermitianOp::from(Mat::Identity(dA * dB, dA * dB), "identity"), 1.0});

  double cap1 = params.M * params.M - 0.5;
  double cap2 = std::pow(params.M, 4) - 0.5 * params.M * params.M;
  Mat eyeB = Mat::Identity(dB, dB);
  for (int i = 0; i < dA; ++i) {
    Mat proj = Mat::Zero(dA, dA);
    proj(i, i) = 1.0;
    Mat op1, op2;
    if (!params.trusted) {
      op1 = displaced_number_op(beta[i], 1, spec).entries;
      op2 = displaced_number_op(beta[i], 2, spec).entries;
    } else {
      BoundedCoeffs k = bounded_observable_coeffs(params.M, params.eta_d, params.nu_el);
      cplx center = beta[i] / std::sqrt(params.eta_d);
      Mat n1 = displaced_number_op(center, 1, spec).entries;
      Mat n2 = displaced_number_op(center, 2, spec).entries;
      op1 = k.A * n1 + k.B * eyeB;
      op2 = k.C * n2 + k.D * n1 + k.E * eyeB;
    }
    out.push_back({ObservableSpec::Kind::n_first_moment, i,
                   HermitianOp::from(tensor(proj, op1), "moment1_" + std::to_string(i)), cap1});
    out.push_back({ObservableSpec::Kind::n_second_moment, i,
                   HermitianOp::from(tensor(proj, op2), "moment2_" + std::to_string(i)), cap2});
  }
  return out;
}

int keymap_classify(cplx y, double delta_r, double M, int n_states) {
  double r = std::abs(y);
  if (r < delta_r || r > M) return kDiscardSymbol;
  double theta = std::arg(y);
  double width = 2.0 * kPi / n_states;
  int z = static_cast<int>(std::floor((theta + 0.5 * width) / width));
  z %= n_states;
  if (z < 0) z += n_states;
  return z;
}

} // namespace dmcv
