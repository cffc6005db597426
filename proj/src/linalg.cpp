#include "lightcone/linalg.hpp"

#include <complex>
#include <lapacke.h>

#include <string>

#include "lightcone/errors.hpp"

namespace lightcone::linalg {

static Eigen::VectorXd zheevd(Eigen::MatrixXcd& a, char jobz) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  Eigen::VectorXd w(n);
  if (n == 0) return w;
  // std::complex<double> is layout-compatible with the C complex type.
  lapack_int info = LAPACKE_zheevd(
      LAPACK_COL_MAJOR, jobz, 'L', n,
      reinterpret_cast<lapack_complex_double*>(a.data()), n, w.data());
  if (info != 0)
    throw numerical_failure_error("zheevd failed, info=" + std::to_string(info));
  return w;
}

Eigen::VectorXd hermitian_eigenvalues(const Eigen::MatrixXcd& m) {
  Eigen::MatrixXcd a = m;
  return zheevd(a, 'N');
}

std::pair<Eigen::VectorXd, Eigen::MatrixXcd> hermitian_eigensystem(
    const Eigen::MatrixXcd& m) {
  Eigen::MatrixXcd a = m;
  Eigen::VectorXd w = zheevd(a, 'V');
  return {std::move(w), std::move(a)};
}

bool is_hermitian(const Eigen::MatrixXcd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  // Scale-aware elementwise check.
  double scale = m.cwiseAbs().maxCoeff();
  double thresh = tol * std::max(1.0, scale);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i <= j; ++i)
      if (std::abs(m(i, j) - std::conj(m(j, i))) > thresh) return false;
  return true;
}

}  // namespace lightcone::linalg
