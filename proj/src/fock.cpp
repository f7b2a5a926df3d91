#include "dmcv/fock.hpp"

#include <cmath>
#include <stdexcept>

#include "dmcv/special.hpp"

namespace dmcv {

HermitianOp HermitianOp::from(const Mat& m, std::string label) {
  if (m.rows() != m.cols()) throw std::invalid_argument("HermitianOp: matrix not square");
  double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (dev > 1e-10) throw std::invalid_argument("HermitianOp: asymmetry " + std::to_string(dev));
  HermitianOp out;
  out.dim = static_cast<int>(m.rows());
  out.label = std::move(label);
  out.entries = Mat(out.dim, out.dim);
  for (int i = 0; i < out.dim; ++i) {
    out.entries(i, i) = m(i, i).real();
    for (int j = i + 1; j < out.dim; ++j) {
      cplx v = 0.5 * (m(i, j) + std::conj(m(j, i)));
      out.entries(i, j) = v;
      out.entries(j, i) = std::conj(v);
    }
  }
  return out;
}

int default_pad(cplx beta, int degree) {
  return 2 * degree + static_cast<int>(std::ceil(4.0 * std::abs(beta)));
}

Mat annihilation_matrix(int dim) {
  Mat a = Mat::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

std::pair<Mat, Mat> ladder_matrices(const TruncationSpec& spec) {
  Mat a = annihilation_matrix(spec.dim() + spec.pad);
  return {a, a.adjoint()};
}

HermitianOp displaced_number_op(cplx beta, int degree, const TruncationSpec& spec) {
  if (degree != 1 && degree != 2) throw std::invalid_argument("displaced_number_op: degree must be 1 or 2");
  int pad = spec.pad > 0 ? spec.pad : default_pad(beta, degree);
  int pdim = spec.dim() + pad;
  Mat shifted = annihilation_matrix(pdim) - beta * Mat::Identity(pdim, pdim);
  Mat nb = shifted.adjoint() * shifted;
  if (degree == 2) nb = nb * nb;
  return HermitianOp::from(nb.topLeftCorner(spec.dim(), spec.dim()),
                           degree == 1 ? "n_disp" : "n_disp_sq");
}

Mat displacement_matrix(cplx beta, const TruncationSpec& spec) {
  int dim = spec.dim();
  Mat d(dim, dim);
  double b2 = std::norm(beta);
  double gauss = std::exp(-0.5 * b2);
  for (int n = 0; n < dim; ++n) {
    for (int m = n; m < dim; ++m) {
      // sqrt(n!/m!) beta^{m-n} accumulated as a product of beta/sqrt(k)
      cplx pref = gauss;
      for (int k = n + 1; k <= m; ++k) pref *= beta / std::sqrt(static_cast<double>(k));
      cplx val = pref * generalized_laguerre(n, m - n, b2);
      d(m, n) = val;
      if (m != n) {
        cplx prefl = gauss;
        for (int k = n + 1; k <= m; ++k) prefl *= -std::conj(beta) / std::sqrt(static_cast<double>(k));
        d(n, m) = prefl * generalized_laguerre(n, m - n, b2);
      }
    }
  }
  return d;
}

Vec coherent_ket(cplx alpha, const TruncationSpec& spec) {
  Vec v(spec.dim());
  cplx entry = std::exp(-0.5 * std::norm(alpha));
  v(0) = entry;
  for (int n = 1; n < spec.dim(); ++n) {
    entry *= alpha / std::sqrt(static_cast<double>(n));
    v(n) = entry;
  }
  return v;
}

Mat tensor(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Mat hermitize(const Mat& m) { return 0.5 * (m + m.adjoint()); }

Mat partial_trace_B(const Mat& op, int dimA, int dimB) {
  if (op.rows() != static_cast<Eigen::Index>(dimA) * dimB || op.rows() != op.cols())
    throw std::invalid_argument("partial_trace_B: dimension mismatch");
  Mat out = Mat::Zero(dimA, dimA);
  for (int i = 0; i < dimA; ++i)
    for (int j = 0; j < dimA; ++j)
      for (int k = 0; k < dimB; ++k)
        out(i, j) += op(i * dimB + k, j * dimB + k);
  return out;
}

HermitianOp partial_trace_B(const HermitianOp& op, int dimA, int dimB) {
  return HermitianOp::from(partial_trace_B(op.entries, dimA, dimB), op.label + "|trB");
}

} // namespace dmcv
