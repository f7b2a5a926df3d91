#pragma once

#include <vector>

#include "dmcv/fock.hpp"

namespace dmcv {

// Signal constellation, postselection geometry, cutoff, and detector model.
struct ProtocolParams {
  int n_states = 4;
  double amplitude = 0.0;     // coherent amplitude |alpha| in shot-noise units
  std::vector<double> probs;  // p_i; empty means uniform
  double delta_r = 0.0;       // radial postselection
  double M = 5.0;             // detection range bound
  int n_c = 12;               // photon-number cutoff
  double eta_d = 1.0;
  double nu_el = 0.0;
  bool trusted = false;

  void validate() const;
  double prob(int i) const;
  cplx signal(int i) const;   // alpha * exp(2 pi i k / n_states)
  double detector_thermal_occupation() const;  // (1 - eta_d + nu_el)/eta_d
};

constexpr int kDiscardSymbol = -1;

struct BoundedCoeffs {
  double A, B, C, D, E;
};

struct ObservableSpec {
  enum class Kind { identity, n_first_moment, n_second_moment };
  Kind kind;
  int signal_index;  // -1 for the global identity
  HermitianOp op;    // on A tensor B
  double expected_bound;
};

HermitianOp rho_alice(const ProtocolParams& params);

// Annular-sector key-map operator between radii delta_r and M for the ideal
// heterodyne POVM; z indexes the angular sector.
HermitianOp region_operator_ideal(int z, const ProtocolParams& params, const TruncationSpec& spec);

// Nonideal heterodyne POVM density at outcome y (efficiency eta_d, electronic
// noise nu_el). Requires a strictly positive detector thermal occupation.
HermitianOp trusted_povm_element(cplx y, const ProtocolParams& params, const TruncationSpec& spec);

// Same annular-sector integral taken over the nonideal POVM.
HermitianOp region_operator_trusted(int z, const ProtocolParams& params, const TruncationSpec& spec);

// Dispatches on params.trusted.
HermitianOp region_operator(int z, const ProtocolParams& params, const TruncationSpec& spec);

// Closed-form coefficients expressing the range-restricted noisy photon-number
// observables through displaced number operators.
BoundedCoeffs bounded_observable_coeffs(double M, double eta_d, double nu_el);

// Constraint observables: global identity plus first and second displaced
// moments per signal, conditioned on Alice's register. beta[i] is the
// phase-space center for signal i on Bob's side.
std::vector<ObservableSpec> observable_set(const ProtocolParams& params,
                                           const std::vector<cplx>& beta,
                                           const TruncationSpec& spec);

// Key symbol for outcome y, or kDiscardSymbol outside the annulus.
int keymap_classify(cplx y, double delta_r, double M, int n_states = 4);

} // namespace dmcv
