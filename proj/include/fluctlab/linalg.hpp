#pragma once

#include <Eigen/Dense>
#include <complex>

namespace fluctlab {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cplx = std::complex<double>;

/// Eigendecomposition of a Hermitian matrix A = V diag(w) V^dagger.
/// Dispatches to LAPACK divide-and-conquer for larger dimensions and
/// to the real path when A is numerically real symmetric.
struct HermitianEig {
  VectorXd eigenvalues;
  MatrixXcd eigenvectors;
};
HermitianEig hermitian_eig(const MatrixXcd& a);

/// Real symmetric eigendecomposition (LAPACK dsyevd for large n).
void sym_eig_inplace(MatrixXd& a, VectorXd& w);

/// Operator norm (largest singular value). Uses max |eigenvalue| when the
/// matrix is Hermitian, otherwise sqrt(lambda_max(A^dagger A)).
double operator_norm(const MatrixXcd& a);

bool is_hermitian(const MatrixXcd& a, double tol = 1e-12);

/// exp(i z A) for Hermitian A, via spectral decomposition.
MatrixXcd exp_i_hermitian(const MatrixXcd& a, cplx z);
MatrixXcd exp_i_hermitian(const HermitianEig& eig, cplx z);

}  // namespace fluctlab
