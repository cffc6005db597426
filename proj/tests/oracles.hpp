#pragma once
// Test-side reference constructions, kept independent of the library's
// bit-indexed assembly: everything here goes through explicit Kronecker
// products so the two paths can disagree.
#include <Eigen/Dense>
#include <complex>
#include <random>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;

inline Mat pauli(char k) {
  Mat m(2, 2);
  switch (k) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: throw std::runtime_error("bad pauli label");
  }
  return m;
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// String of single-site labels, site 0 leftmost: "XXI" = X ox X ox I.
inline Mat pauli_string(const std::string& labels) {
  Mat m = pauli(labels[0]);
  for (std::size_t s = 1; s < labels.size(); ++s) m = kron(m, pauli(labels[s]));
  return m;
}

inline double spectral_norm(const Mat& m) {
  return Eigen::JacobiSVD<Mat>(m).singularValues()(0);
}

// Haar-ish random unitary via QR of a complex Gaussian matrix.
inline Mat random_unitary(Eigen::Index dim, std::mt19937& rng) {
  std::normal_distribution<double> g;
  Mat a(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < dim; ++j)
    q.col(j) *= r(j, j) / std::abs(r(j, j));
  return q;
}

}  // namespace oracle
