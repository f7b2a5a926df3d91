#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dmcv/fock.hpp"

namespace dmcv {

// Standard-form conic program
//   minimize    sum_b <C_b, X_b> + c . x
//   subject to  sum_b <A_{i,b}, X_b> + a_i . x = rhs_i
//               X_b symmetric positive semidefinite, x >= 0
// Zero-sized matrices and vectors stand for structurally zero data.
struct ConicProblem {
  std::vector<int> block_dims;
  int nonneg_dim = 0;
  std::vector<RealMat> objective_blocks;
  RealVec objective_linear;

  struct Row {
    std::vector<RealMat> blocks;
    RealVec linear;
    double rhs = 0.0;
  };
  std::vector<Row> rows;

  std::string name;
  double tol_gap = 1e-9;
  double tol_feas = 1e-10;
  int max_iterations = 100;

  void validate() const;
};

enum class ConicStatus { optimal, max_iter, infeasible, numerical_failure };

struct ConicSolution {
  ConicStatus status = ConicStatus::numerical_failure;
  std::vector<RealMat> X;
  RealVec x;
  RealVec y;
  std::vector<RealMat> S;
  RealVec s;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double rel_gap = 1.0;
  double primal_residual = 1.0;
  double dual_residual = 1.0;
  int iterations = 0;
};

// Dense primal-dual interior-point solve. DMCV_BACKEND selects the backend
// (internal | external); DMCV_SDP_DUMP names a directory that receives a
// plain-text copy of every problem solved.
ConicSolution solve_conic(const ConicProblem& problem);

// Real-symmetric embedding [[Re, -Im], [Im, Re]] of a complex Hermitian
// matrix. Inner products double: <embed(A), embed(B)> = 2 Re<A, B>.
RealMat embed_hermitian(const Mat& h);
Mat extract_hermitian(const RealMat& e);

void write_problem_text(const ConicProblem& problem, std::ostream& os);

} // namespace dmcv
