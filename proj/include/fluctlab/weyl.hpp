#pragma once

#include <vector>

#include "fluctlab/fluctuation.hpp"
#include "fluctlab/gibbs.hpp"

namespace fluctlab {

/// Real test-function space carrying the covariance quadratic form and the
/// symplectic form of a generator family.
struct SymplecticSpace {
  MatrixXd t_form;  // symmetric positive semidefinite
  MatrixXd sigma;   // antisymmetric

  int dim() const { return static_cast<int>(t_form.rows()); }
  double t_quad(const VectorXd& f) const { return f.dot(t_form * f); }
  double sigma_at(const VectorXd& f, const VectorXd& g) const {
    return f.dot(sigma * g);
  }
  static SymplecticSpace from_covariance(const CovarianceData& data);
};

/// Quotient by the near-null directions of the covariance form. The
/// symplectic form must vanish on the removed directions (QuotientError
/// otherwise): degenerate covariance directions carry no phase space.
struct QuotientResult {
  SymplecticSpace space;
  MatrixXd basis;          // columns: retained directions, orthonormal
  MatrixXd kernel;         // columns: removed directions
};
QuotientResult quotient_reduce(const SymplecticSpace& s, double rel_tol = 1e-8,
                               double sigma_tol = 1e-6);

/// An ordered product of Weyl generators W(f_1) ... W(f_m).
struct WeylWord {
  std::vector<VectorXd> factors;
};

/// W(f_1)...W(f_m) = e^{i phase} W(f_1 + ... + f_m) with
/// phase = -1/2 sum_{k<l} sigma(f_k, f_l).
struct ReducedWeyl {
  double phase = 0.0;
  VectorXd total;
};
ReducedWeyl weyl_reduce(const SymplecticSpace& s, const WeylWord& word);

/// Quasifree expectation e^{i phase} exp(-1/2 t(total, total)).
cplx quasifree_expect(const SymplecticSpace& s, const WeylWord& word);

/// Gram matrix M_ij = <W(f_i)^* W(f_j)> = quasifree_expect(W(-f_i) W(f_j));
/// positive semidefinite for any admissible (t, sigma) pair.
MatrixXcd quasifree_gram(const SymplecticSpace& s,
                         const std::vector<VectorXd>& fs);

/// Covariance data over the family {q_i} followed by their truncated
/// time-evolved images, with a check that near-null covariance directions
/// of the original family stay near-null after evolution.
struct MacroDynamicsReport {
  CovarianceData enlarged;  // generators ordered {q_i}, then {alpha_t(q_i)}
  double truncation_error = 0.0;
  bool kernel_invariant = true;
  double kernel_leak = 0.0;  // largest evolved quadratic over the kernel
};
MacroDynamicsReport macro_dynamics(const StateFunctional& state,
                                   const Interaction& psi,
                                   const std::vector<LocalOperator>& generators,
                                   double time, double evolve_tol = 1e-6,
                                   const CovarianceOptions& opts = {});

/// Covariance modulus of continuity under the dynamics:
/// t(alpha_u(q) - q, alpha_u(q) - q) with the evolved operator truncated to
/// [-truncation_radius, truncation_radius]. Tends to zero with u.
double dynamics_continuity(const StateFunctional& state, const Interaction& psi,
                           const LocalOperator& q, double u,
                           int truncation_radius, double evolve_tol = 1e-6,
                           const CovarianceOptions& opts = {});

/// KMS identity carried by exponentials of fluctuation operators on a fixed
/// Gibbs window: F(z) = phi(e^{iQ} alpha_z(e^{iR})) satisfies
/// F(t + i beta) = phi(alpha_t(e^{iR}) e^{iQ}) exactly at finite volume.
struct KMSFluctuationReport {
  double residual = 0.0;        // continuation identity defect
  double magnitude = 0.0;       // |F(t)| at the real time, <= 1
};
KMSFluctuationReport kms_fluctuation_check(const GibbsState& state,
                                           const LocalOperator& q,
                                           const LocalOperator& r, int n,
                                           double time);

}  // namespace fluctlab
