#pragma once

#include <complex>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace dmcv {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RealMat = Eigen::MatrixXd;
using RealVec = Eigen::VectorXd;

// Photon-number cutoff n_c (working dimension n_c+1) plus extra levels kept
// internally while forming operator polynomials. pad = 0 selects a default
// that grows with the displacement magnitude.
struct TruncationSpec {
  int n_c = 1;
  int pad = 0;
  int dim() const { return n_c + 1; }
};

// Dense complex Hermitian matrix with dimension metadata and a provenance tag.
struct HermitianOp {
  int dim = 0;
  Mat entries;
  std::string label;

  // Validates near-Hermiticity and stores an exactly Hermitian completion.
  static HermitianOp from(const Mat& m, std::string label = {});
};

int default_pad(cplx beta, int degree);

Mat annihilation_matrix(int dim);
std::pair<Mat, Mat> ladder_matrices(const TruncationSpec& spec);

// Truncation of the displaced number operator n_beta (degree 1) or its square
// (degree 2), expanded on the padded space and projected down to n_c+1.
HermitianOp displaced_number_op(cplx beta, int degree, const TruncationSpec& spec);

// Exact number-basis matrix elements of D(beta), truncated to n_c+1.
Mat displacement_matrix(cplx beta, const TruncationSpec& spec);

Vec coherent_ket(cplx alpha, const TruncationSpec& spec);

Mat tensor(const Mat& a, const Mat& b);
Mat hermitize(const Mat& m);
Mat partial_trace_B(const Mat& op, int dimA, int dimB);
HermitianOp partial_trace_B(const HermitianOp& op, int dimA, int dimB);

} // namespace dmcv
