#pragma once

#include <vector>

#include "dmcv/conic.hpp"
#include "dmcv/fock.hpp"
#include "dmcv/protocol.hpp"

namespace dmcv {

// Key-register postprocessing pair: G attaches the announced key symbol by
// conjugating with the region-operator square roots (the discard outcome is
// dropped), Z dephases the attached key register.
struct PostprocessingMaps {
  Mat kraus;  // (key_dim * dim_in) x dim_in isometry-like block column
  int key_dim = 0;
  int dim_a = 0;
  int dim_b = 0;
  int dim_in = 0;

  Mat apply(const Mat& rho) const;        // G(rho)
  Mat apply_adjoint(const Mat& m) const;  // adjoint of G
  Mat pinch(const Mat& m) const;          // Z: zero the off-diagonal key blocks
};

// Low-level constructor from explicit region operators on the B factor; each
// must be PSD within a -1e-8 eigenvalue tolerance.
PostprocessingMaps make_postprocessing_maps(const std::vector<Mat>& region_ops, int dim_a);

// Region operators from the protocol definition (ideal or trusted detector).
PostprocessingMaps build_postprocessing_maps(const ProtocolParams& params,
                                             const TruncationSpec& spec);

// Conditional-entropy objective f(rho) = D(G(rho) || Z(G(rho))) in bits, with
// eigenvalue floor 1e-14 inside the logarithms. mix_eps > 0 mixes the map
// output toward the maximally mixed state before the logarithms, keeping the
// spectrum interior so the gradient is exact; the solver entry points use this
// internally and charge the continuity penalty to the certificate.
double objective(const Mat& rho_bar, const PostprocessingMaps& maps, double mix_eps = 0.0);
Mat gradient(const Mat& rho_bar, const PostprocessingMaps& maps, double mix_eps = 0.0);
double objective_and_gradient(const Mat& rho_bar, const PostprocessingMaps& maps, Mat* grad,
                              double mix_eps = 0.0);

// One two-sided statistical constraint Tr[op rho] in
// [value - mu - t - w*cap, value + mu + t].
struct MomentConstraint {
  HermitianOp op;  // on A tensor B
  double value = 0.0;
  double mu = 0.0;
  double t = 0.0;
  double cap = 0.0;  // operator-norm bound entering the weight correction
};

struct ConstraintSet {
  Mat rho_a;  // dim_a x dim_a reduced state of the sender register
  std::vector<MomentConstraint> observables;
  double weight = 0.0;  // w in [0, 1)
  int dim_a = 0;
  int dim_b = 0;
  // Comparison mode reproducing the one-sided printed constraint system
  // (upper value - mu, lower value + mu - w*cap); expected to be infeasible
  // for mu > 0.
  bool literal_bounds = false;

  void validate() const;
};

// Standard-form encoding of the linearized subproblem
// min <direction, rho> over the constraint set, with row bookkeeping for
// recovering the dual certificate.
struct SubproblemEncoding {
  ConicProblem problem;
  bool asymptotic = false;  // weight == 0 path: exact reduced-state equality
  std::vector<int> upper_rows, lower_rows, equality_rows;  // per observable
  std::vector<double> upper_bounds, lower_bounds;          // bounds actually used
  int trace_upper_row = -1, trace_lower_row = -1, trace_equality_row = -1;
  int weight_row = -1;
  std::vector<int> reduced_rows_p, reduced_rows_n;  // finite path, per basis element
  std::vector<int> reduced_rows_eq;                 // asymptotic path
  std::vector<Mat> basis_a;  // orthonormal Hermitian basis of the A factor
};

SubproblemEncoding build_linear_subproblem(const Mat& direction, const ConstraintSet& constraints);

struct FrankWolfeResult {
  Mat rho;
  double objective_value = 0.0;
  double gap = 0.0;
  int iterations = 0;
  bool subproblem_infeasible = false;
  std::vector<double> objective_history;
};

// First-order minimization: each step solves the linear subproblem, then a
// 40-iteration golden-section line search on [0,1].
FrankWolfeResult frank_wolfe(const ConstraintSet& constraints, const PostprocessingMaps& maps,
                             double tol = 1e-6, int max_iter = 150,
                             const Mat* initial = nullptr);

enum class SolverStatus { certified, feasibility_failed, max_iter, infeasible };

struct SolverReport {
  Mat rho_step1;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double certified_lower_bound = 0.0;
  double dual_feasibility_residual = 0.0;
  int iterations = 0;
  SolverStatus status = SolverStatus::feasibility_failed;
  double frank_wolfe_gap = 0.0;
  // Total deduction applied for numerical margins (feasibility repair plus the
  // eps_num relaxation); certified_lower_bound already includes it.
  double eps_num_slack = 0.0;
};

// Linearizes f at rho_step1, reads the subproblem's dual point, verifies dual
// feasibility by explicit eigenvalue checks with margin shifting, and returns
// the hyperplane lower bound f - <grad, rho> + (verified dual objective).
SolverReport certified_dual_bound(const Mat& rho_step1, const ConstraintSet& constraints,
                                  const PostprocessingMaps& maps, double eps_num = 1e-8);

// frank_wolfe followed by certified_dual_bound.
SolverReport solve_key_rate(const ConstraintSet& constraints, const PostprocessingMaps& maps,
                            double tol = 1e-6, int max_iter = 150, double eps_num = 1e-8,
                            const Mat* initial = nullptr);

} // namespace dmcv
