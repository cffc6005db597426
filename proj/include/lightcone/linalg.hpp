#pragma once
#include <Eigen/Dense>
#include <utility>

namespace lightcone::linalg {

// Eigenvalues of a Hermitian matrix, ascending. LAPACK divide-and-conquer.
Eigen::VectorXd hermitian_eigenvalues(const Eigen::MatrixXcd& m);

// Full eigensystem {values ascending, column eigenvectors}.
std::pair<Eigen::VectorXd, Eigen::MatrixXcd> hermitian_eigensystem(
    const Eigen::MatrixXcd& m);

bool is_hermitian(const Eigen::MatrixXcd& m, double tol = 1e-12);

}  // namespace lightcone::linalg
