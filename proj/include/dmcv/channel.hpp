#pragma once

#include <vector>

#include "dmcv/fock.hpp"
#include "dmcv/protocol.hpp"

namespace dmcv {

// Lossy thermal-noise Gaussian channel; excess noise xi is referenced to the
// channel input in shot-noise units, so the received thermal occupation is
// eta * xi / 2.
struct ChannelModel {
  double distance_km = 0.0;
  double eta = 1.0;
  double xi = 0.0;

  static ChannelModel from_distance(double L, double xi);
  static ChannelModel from_eta(double eta, double xi);
  double nbar_ch() const { return eta * xi / 2.0; }
  void validate() const;
};

double transmittance_from_distance(double L);

struct ConditionalOutput {
  cplx center;  // sqrt(eta) * alpha_i, before the detector
  double nbar;
};
ConditionalOutput conditional_output_state(int i, const ChannelModel& channel,
                                           const ProtocolParams& params);

// Expected values for the constraint observables, in observable_set order:
// identity first, then per signal the first and second displaced moments,
// each folded with the signal prior.
std::vector<double> expected_observations(const ChannelModel& channel,
                                          const ProtocolParams& params);

struct OutcomeStats {
  double p_pass = 0.0;
  RealMat joint_zx;     // row x: P(z | signal x), last column is the discard mass
  double delta_ec = 0.0;  // error-correction bits per key-generation round
};
OutcomeStats outcome_distribution_and_ec(const ChannelModel& channel, const ProtocolParams& params,
                                         double beta_ec, double n_rounds, double eps_ec);

// Thermal tail mass beyond the cutoff in the per-signal displaced frame.
double expected_weight(const ChannelModel& channel, const ProtocolParams& params);

// Probability that a test round's outcome magnitude reaches beta_test, for the
// signal-averaged honest output.
double honest_v1_expectation(const ChannelModel& channel, const ProtocolParams& params,
                             double beta_test);

// Honest joint state of Alice's register and the truncated received mode.
HermitianOp honest_joint_state(const ChannelModel& channel, const ProtocolParams& params,
                               const TruncationSpec& spec);

struct HonestStatistics {
  std::vector<double> gamma;
  double p_pass = 0.0;
  RealMat joint_zx;
  double delta_ec = 0.0;
  double w_exp = 0.0;
  double v1_expect = 0.0;
};
HonestStatistics honest_statistics(const ChannelModel& channel, const ProtocolParams& params,
                                   double beta_ec, double n_rounds, double eps_ec,
                                   double beta_test);

} // namespace dmcv
