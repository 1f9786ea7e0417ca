#include "fluctlab/linalg.hpp"

#include <lapacke.h>

#include <Eigen/Eigenvalues>
#include <stdexcept>

namespace fluctlab {

namespace {
constexpr int kLapackThreshold = 128;

bool numerically_real(const MatrixXcd& a, double tol = 1e-14) {
  double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return true;
  return a.imag().cwiseAbs().maxCoeff() <= tol * scale;
}
}  // namespace

void sym_eig_inplace(MatrixXd& a, VectorXd& w) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  w.resize(n);
  lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(),
                                   n, w.data());
  if (info != 0) throw std::runtime_error("dsyevd failed");
}

HermitianEig hermitian_eig(const MatrixXcd& a) {
  const auto n = a.rows();
  HermitianEig out;
  if (n < kLapackThreshold) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(a);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("hermitian_eig: eigensolver failed");
    out.eigenvalues = es.eigenvalues();
    out.eigenvectors = es.eigenvectors();
    return out;
  }
  if (numerically_real(a)) {
    MatrixXd m = a.real();
    sym_eig_inplace(m, out.eigenvalues);
    out.eigenvectors = m.cast<cplx>();
    return out;
  }
  MatrixXcd m = a;
  out.eigenvalues.resize(n);
  lapack_int info = LAPACKE_zheevd(
      LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(n),
      reinterpret_cast<lapack_complex_double*>(m.data()),
      static_cast<lapack_int>(n), out.eigenvalues.data());
  if (info != 0) throw std::runtime_error("zheevd failed");
  out.eigenvectors = std::move(m);
  return out;
}

bool is_hermitian(const MatrixXcd& a, double tol) {
  double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

double operator_norm(const MatrixXcd& a) {
  if (a.rows() == 0) return 0.0;
  if (is_hermitian(a)) {
    auto eig = hermitian_eig(a);
    return eig.eigenvalues.cwiseAbs().maxCoeff();
  }
  MatrixXcd g = a.adjoint() * a;
  auto eig = hermitian_eig(g);
  double m = eig.eigenvalues.maxCoeff();
  return m > 0 ? std::sqrt(m) : 0.0;
}

MatrixXcd exp_i_hermitian(const HermitianEig& eig, cplx z) {
  VectorXcd phases = (cplx(0, 1) * z * eig.eigenvalues.cast<cplx>().array())
                         .exp()
                         .matrix();
  return eig.eigenvectors * phases.asDiagonal() * eig.eigenvectors.adjoint();
}

MatrixXcd exp_i_hermitian(const MatrixXcd& a, cplx z) {
  return exp_i_hermitian(hermitian_eig(a), z);
}

}  // namespace fluctlab
