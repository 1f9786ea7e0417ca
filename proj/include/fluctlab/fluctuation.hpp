#pragma once

#include <vector>

#include "fluctlab/state.hpp"

namespace fluctlab {

/// Scaled fluctuation sum over the symmetric block of radius n:
/// (2n+1)^{-1/2} sum_{|j| <= n} (tau_j(q) - phi(q)), as a dense operator.
LocalOperator fluctuation_operator(const StateFunctional& state,
                                   const LocalOperator& q, int n);

struct CovarianceResult {
  cplx value = 0.0;
  double tail_bound = 0.0;  // certified bound on the truncated remainder
  int terms = 0;            // number of lattice shifts summed directly
};

struct CovarianceOptions {
  double tail_tol = 1e-10;
  int shift_cap = 200;  // never sum more shifts than this per side
};

/// t(q, r) = sum_k [phi(tau_k(q) r) - phi(q) phi(r)]. Finitely correlated
/// states use the exact transfer resolvent; otherwise the sum is truncated
/// where the state's decay certificate bounds the remainder below tail_tol.
/// Throws NoMixingCertificateError when no certificate is available.
CovarianceResult covariance_t(const StateFunctional& state,
                              const LocalOperator& q, const LocalOperator& r,
                              const CovarianceOptions& opts = {});

/// s(q, r) = sum_k phi([tau_k(q), r]); the sum is finite because the
/// commutator vanishes once the supports separate. Purely imaginary for
/// self-adjoint q, r.
cplx symplectic_s(const StateFunctional& state, const LocalOperator& q,
                  const LocalOperator& r);

/// Covariance and symplectic data over a generator family.
struct CovarianceData {
  std::vector<LocalOperator> generators;
  MatrixXcd t;     // Hermitian
  MatrixXd sigma;  // real antisymmetric, equals 2 Im t
  double tail_bound = 0.0;
};
CovarianceData covariance_data(const StateFunctional& state,
                               const std::vector<LocalOperator>& generators,
                               const CovarianceOptions& opts = {});

/// Evaluates F_N(T) = phi(prod_k exp(i T Q_k^{(N)})) on the block window,
/// with the product ordered as the generator list. One eigendecomposition
/// per generator; T sweeps reuse them.
class CharacteristicEvaluator {
 public:
  CharacteristicEvaluator(const StateFunctional& state,
                          const std::vector<LocalOperator>& generators, int n);

  cplx value(double t_param) const;
  /// dF_N/dT by operator insertion; supported for one or two generators.
  cplx derivative(double t_param) const;

  const Interval& window() const { return window_; }

 private:
  Interval window_{0, 0};
  std::vector<HermitianEig> eigs_;
  MatrixXcd rho_;
  // Single generator: spectral weights (V^dag rho V)_aa.
  VectorXcd weights_;
  // Two generators: pair_(a, b) = W_ab Z_ba with W = V_Q^dag V_R and
  // Z = V_R^dag rho V_Q, so F(T) = e_a(T)^T pair_ e_b(T).
  MatrixXcd pair_;
};

/// F_N(T) for a one-off evaluation; sweeps should construct the evaluator.
cplx characteristic_function(const StateFunctional& state,
                             const std::vector<LocalOperator>& generators,
                             double t_param, int n);

/// Closed-form block characteristic function for a product state and a
/// single-site generator: [phi_site(exp(i T (q - phi(q)) / sqrt(2n+1)))]^(2n+1).
cplx product_characteristic(const ProductState& state, const LocalOperator& q,
                            long n, double t_param);

/// Gaussian limit of the ordered product of exponentials:
/// exp(-T^2/2 sum_kl t_kl) * exp(-i T^2/2 sum_{k<l} sigma_kl).
cplx gaussian_prediction(const CovarianceData& data, double t_param);

struct CLTReport {
  std::vector<int> block_radii;
  std::vector<double> sup_errors;  // sup over the T grid per radius
  CovarianceData covariance;
  std::vector<double> t_grid;
};

/// Sup-norm distance between the finite-block characteristic function and
/// its Gaussian limit, over a T grid, for each block radius.
CLTReport clt_study(const StateFunctional& state,
                    const std::vector<LocalOperator>& generators,
                    const std::vector<int>& block_radii,
                    const std::vector<double>& t_grid,
                    const CovarianceOptions& opts = {});

/// d/dT F_N(T) + T (t(q+r, q+r) + i sigma(q, r)) F_N(T) for the two-factor
/// characteristic function; tends to zero as the block grows.
cplx bolthausen_residual(const StateFunctional& state, const LocalOperator& q,
                         const LocalOperator& r, int n, double t_param,
                         const CovarianceOptions& opts = {});

struct ExpCommutatorCheck {
  double defect = 0.0;           // ||e^{i(A+B)} - e^{iB} e^{iA}||
  double commutator_exp = 0.0;   // ||[A, e^{iB}]||
  double commutator_norm = 0.0;  // ||[A, B]||
};
/// For self-adjoint A, B: defect <= commutator_norm / 2 and
/// commutator_exp <= commutator_norm. (A Duhamel expansion bounds the
/// defect by the average of ||[A, e^{iuB}]|| <= u ||[A, B]|| over
/// u in [0, 1]; the endpoint value commutator_exp alone does not
/// dominate the defect in general.)
ExpCommutatorCheck exp_commutator_check(const MatrixXcd& a,
                                        const MatrixXcd& b);

/// Slowly growing block-splitting scale m(N) = ceil((2N+1)^{1/8} ln(2N+1)).
int block_sequence(long n);

}  // namespace fluctlab
