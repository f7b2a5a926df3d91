#include "dmcv/channel.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dmcv/special.hpp"
#include "quadrature.hpp"

namespace dmcv {

namespace {
constexpr double kPi = 3.14159265358979323846;

double shannon_bits(const std::vector<double>& q) {
  double h = 0.0;
  for (double v : q)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

// Mass of an offset complex Gaussian (second moment s) over an annular
// sector, by tensor Gauss-Legendre with node doubling until the result is
// stable to 1e-11.
double sector_mass(cplx c, double s, double r_lo, double r_hi, double th_c, double half_w) {
  double cm = std::abs(c);
  double ph = std::arg(c);
  double prev = -1.0;
  for (int n : {48, 96, 192, 384}) {
    auto [rx, rw] = detail::gauss_legendre_nodes(n, r_lo, r_hi);
    auto [tx, tw] = detail::gauss_legendre_nodes(n, th_c - half_w, th_c + half_w);
    double acc = 0.0;
    for (int a = 0; a < n; ++a) {
      double r = rx[a];
      double radial = rw[a] * r / (kPi * s);
      for (int b = 0; b < n; ++b) {
        double d2 = r * r + cm * cm - 2.0 * r * cm * std::cos(tx[b] - ph);
        acc += radial * tw[b] * std::exp(-d2 / s);
      }
    }
    if (prev >= 0.0 && std::abs(acc - prev) < 1e-11) return acc;
    prev = acc;
  }
  return prev;
}
} // namespace

double transmittance_from_distance(double L) {
  if (L < 0.0) throw std::invalid_argument("transmittance_from_distance: negative distance");
  return std::pow(10.0, -0.02 * L);
}

ChannelModel ChannelModel::from_distance(double L, double xi) {
  ChannelModel ch;
  ch.distance_km = L;
  ch.eta = transmittance_from_distance(L);
  ch.xi = xi;
  ch.validate();
  return ch;
}

ChannelModel ChannelModel::from_eta(double eta, double xi) {
  ChannelModel ch;
  ch.distance_km = eta > 0.0 ? -50.0 * std::log10(eta) : 0.0;
  ch.eta = eta;
  ch.xi = xi;
  ch.validate();
  return ch;
}

void ChannelModel::validate() const {
  if (eta <= 0.0 || eta > 1.0) throw std::invalid_argument("channel: eta outside (0,1]");
  if (xi < 0.0) throw std::invalid_argument("channel: negative excess noise");
  if (distance_km < 0.0) throw std::invalid_argument("channel: negative distance");
}

ConditionalOutput conditional_output_state(int i, const ChannelModel& channel,
                                           const ProtocolParams& params) {
  channel.validate();
  return {std::sqrt(channel.eta) * params.signal(i), channel.nbar_ch()};
}

std::vector<double> expected_observations(const ChannelModel& channel,
                                          const ProtocolParams& params) {
  channel.validate();
  params.validate();
  double nbar = channel.nbar_ch();
  double m2 = 2.0 * nbar * nbar + nbar;
  double g1 = nbar, g2 = m2;
  if (params.trusted) {
    BoundedCoeffs k = bounded_observable_coeffs(params.M, params.eta_d, params.nu_el);
    g1 = k.A * nbar + k.B;
    g2 = k.C * m2 + k.D * nbar + k.E;
  }
  std::vector<double> gamma{1.0};
  for (int i = 0; i < params.n_states; ++i) {
    gamma.push_back(params.prob(i) * g1);
    gamma.push_back(params.prob(i) * g2);
  }
  return gamma;
}

OutcomeStats outcome_distribution_and_ec(const ChannelModel& channel, const ProtocolParams& params,
                                         double beta_ec, double n_rounds, double eps_ec) {
  channel.validate();
  params.validate();
  if (beta_ec <= 0.0 || beta_ec > 1.0)
    throw std::invalid_argument("outcome_distribution_and_ec: beta_ec outside (0,1]");
  if (eps_ec <= 0.0 || eps_ec >= 1.0)
    throw std::invalid_argument("outcome_distribution_and_ec: eps_ec outside (0,1)");
  if (n_rounds < 1.0)
    throw std::invalid_argument("outcome_distribution_and_ec: need at least one round");

  int ns = params.n_states;
  double s = 1.0 + params.nu_el + params.eta_d * channel.nbar_ch();
  double half_w = kPi / ns;
  OutcomeStats out;
  out.joint_zx = RealMat::Zero(ns, ns + 1);
  for (int x = 0; x < ns; ++x) {
    cplx c = std::sqrt(params.eta_d * channel.eta) * params.signal(x);
    double kept = 0.0;
    for (int z = 0; z < ns; ++z) {
      double mass = sector_mass(c, s, params.delta_r, params.M, 2.0 * kPi * z / ns, half_w);
      out.joint_zx(x, z) = mass;
      kept += mass;
    }
    out.joint_zx(x, ns) = std::max(0.0, 1.0 - kept);
  }

  for (int x = 0; x < ns; ++x)
    out.p_pass += params.prob(x) * (1.0 - out.joint_zx(x, ns));

  double h_z = 0.0, h_zx = 0.0;
  if (out.p_pass > 0.0) {
    std::vector<double> marginal(ns, 0.0);
    for (int x = 0; x < ns; ++x) {
      double keep_x = 1.0 - out.joint_zx(x, ns);
      if (keep_x <= 0.0) continue;
      double weight = params.prob(x) * keep_x / out.p_pass;
      std::vector<double> row(ns);
      for (int z = 0; z < ns; ++z) {
        row[z] = out.joint_zx(x, z) / keep_x;
        marginal[z] += weight * row[z];
      }
      h_zx += weight * shannon_bits(row);
    }
    h_z = shannon_bits(marginal);
  }
  double delta = (1.0 - beta_ec) * h_z + beta_ec * h_zx;
  out.delta_ec = out.p_pass * delta + std::log2(2.0 / eps_ec) / n_rounds;
  return out;
}

double expected_weight(const ChannelModel& channel, const ProtocolParams& params) {
  channel.validate();
  params.validate();
  double nbar = channel.nbar_ch();
  if (nbar == 0.0) return 0.0;
  return std::pow(nbar / (1.0 + nbar), params.n_c + 1);
}

namespace {
// Probability that a single test-round outcome reaches magnitude beta_test,
// diagonal in the number basis.
double exceedance_coefficient(int n, double beta2, const ProtocolParams& params) {
  if (!params.trusted) return regularized_gamma_q(n + 1.0, beta2);
  double nbar_d = params.detector_thermal_occupation();
  double a = 1.0 / (params.eta_d * (1.0 + nbar_d));
  double peak = -INFINITY;
  std::vector<double> terms(n + 1);
  for (int j = 0; j <= n; ++j) {
    terms[j] = log_binomial(n, j) + (n - j) * std::log(nbar_d) - n * std::log1p(nbar_d) +
               std::log(regularized_gamma_q(j + 1.0, a * beta2));
    peak = std::max(peak, terms[j]);
  }
  if (!std::isfinite(peak)) return 0.0;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - peak);
  return std::exp(peak) * acc;
}

// Number-basis populations of a displaced thermal state.
double log_population(int n, double d2, double nbar) {
  if (nbar <= 0.0) {
    if (d2 == 0.0) return n == 0 ? 0.0 : -INFINITY;
    return -d2 + n * std::log(d2) - log_factorial(n);
  }
  double base = n * (std::log(nbar) - std::log1p(nbar)) - std::log1p(nbar) - d2 / (1.0 + nbar);
  if (d2 == 0.0) return base;
  return base + log_laguerre_at_negative(n, 0, d2 / (nbar * (1.0 + nbar)));
}
} // namespace

double honest_v1_expectation(const ChannelModel& channel, const ProtocolParams& params,
                             double beta_test) {
  channel.validate();
  params.validate();
  if (beta_test < 0.0) throw std::invalid_argument("honest_v1_expectation: negative beta_test");
  double beta2 = beta_test * beta_test;
  double nbar = channel.nbar_ch();
  double total = 0.0;
  for (int i = 0; i < params.n_states; ++i) {
    double d2 = std::norm(std::sqrt(channel.eta) * params.signal(i));
    double cum = 0.0, acc = 0.0, coeff = 1.0;
    int n = 0;
    for (; n < 4000; ++n) {
      double p = std::exp(log_population(n, d2, nbar));
      coeff = exceedance_coefficient(n, beta2, params);
      cum += p;
      acc += p * coeff;
      if (1.0 - cum < 1e-14) break;
    }
    acc += std::max(0.0, 1.0 - cum) * coeff;
    total += params.prob(i) * acc;
  }
  return std::min(total, 1.0);
}

HermitianOp honest_joint_state(const ChannelModel& channel, const ProtocolParams& params,
                               const TruncationSpec& spec) {
  channel.validate();
  params.validate();
  int da = params.n_states;
  int db = spec.dim();
  double nbar = channel.nbar_ch();
  double root_eta = std::sqrt(channel.eta);

  std::vector<cplx> nodes;
  std::vector<double> weights;
  if (nbar == 0.0) {
    nodes.push_back(0.0);
    weights.push_back(1.0);
  } else {
    auto [hx, hw] = detail::gauss_hermite_nodes(16);
    double scale = std::sqrt(nbar);
    for (size_t u = 0; u < hx.size(); ++u)
      for (size_t v = 0; v < hx.size(); ++v) {
        nodes.push_back(scale * cplx(hx[u], hx[v]));
        weights.push_back(hw[u] * hw[v] / kPi);
      }
  }

  Mat rho = Mat::Zero(da * db, da * db);
  for (size_t q = 0; q < nodes.size(); ++q) {
    cplx d = nodes[q];
    std::vector<Vec> kets(da);
    std::vector<cplx> phases(da);
    for (int i = 0; i < da; ++i) {
      cplx center = root_eta * params.signal(i);
      kets[i] = coherent_ket(center + d, spec);
      phases[i] = std::exp(0.5 * (d * std::conj(center) - std::conj(d) * center));
    }
    for (int i = 0; i < da; ++i) {
      for (int j = 0; j < da; ++j) {
        cplx ai = params.signal(i), aj = params.signal(j);
        cplx loss = std::exp((1.0 - channel.eta) *
                             (-0.5 * std::norm(ai) - 0.5 * std::norm(aj) + std::conj(aj) * ai));
        cplx coeff = weights[q] * std::sqrt(params.prob(i) * params.prob(j)) * loss * phases[i] *
                     std::conj(phases[j]);
        rho.block(i * db, j * db, db, db) += coeff * kets[i] * kets[j].adjoint();
      }
    }
  }
  return HermitianOp::from(hermitize(rho), "rho_ab_honest");
}

HonestStatistics honest_statistics(const ChannelModel& channel, const ProtocolParams& params,
                                   double beta_ec, double n_rounds, double eps_ec,
                                   double beta_test) {
  HonestStatistics hs;
  hs.gamma = expected_observations(channel, params);
  OutcomeStats os = outcome_distribution_and_ec(channel, params, beta_ec, n_rounds, eps_ec);
  hs.p_pass = os.p_pass;
  hs.joint_zx = os.joint_zx;
  hs.delta_ec = os.delta_ec;
  hs.w_exp = expected_weight(channel, params);
  hs.v1_expect = honest_v1_expectation(channel, params, beta_test);
  return hs;
}

} // namespace dmcv
