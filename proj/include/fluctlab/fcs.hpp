#pragma once

#include <string>
#include <vector>

#include "fluctlab/state.hpp"

namespace fluctlab {

/// Kraus data for a finitely correlated state: site_dim matrices of size
/// bond_dim x bond_dim with sum_i V_i^dagger V_i = 1.
struct FCSSpec {
  int bond_dim = 0;
  int site_dim = 0;
  std::vector<MatrixXcd> kraus;
  double tol = 1e-12;

  /// Parses {"bond_dim": k, "site_dim": d, "kraus": [[re, im, ...]], "tol": t}
  /// with each Kraus matrix flattened row-major as alternating re/im pairs.
  static FCSSpec from_json_text(const std::string& text);
  std::string to_json_text() const;
};

/// Translation-invariant finitely correlated state. Expectations contract
/// through the bond space: phi(A_1 x ... x A_w) = tr(rho E_{A_1}(... E_{A_w}(1)))
/// with E_A(B) = sum_ij A_ij V_i^dagger B V_j and the leftmost site outermost.
class FCSState : public StateFunctional {
 public:
  explicit FCSState(std::vector<MatrixXcd> kraus, double tol = 1e-12);
  static FCSState from_spec(const FCSSpec& spec);

  /// Classical Markov chain embedding: (V_i)_{ab} = delta_{b,i} sqrt(P(a,i))
  /// for a column-stochastic transition matrix P (P(a,i) = prob of moving to
  /// a from i). The nonzero transfer spectrum equals the spectrum of P.
  static FCSState classical_markov(const MatrixXd& transition);

  int site_dim() const override { return static_cast<int>(kraus_.size()); }
  int bond_dim() const { return static_cast<int>(rho_.rows()); }
  bool translation_invariant() const override { return true; }

  cplx expect(const LocalOperator& q) const override;
  cplx expect_pair(const LocalOperator& a, const LocalOperator& b,
                   int k) const override;
  MatrixXcd window_density(const Interval& window) const override;
  std::optional<DecayCertificate> mixing_certificate() const override;

  const std::vector<MatrixXcd>& kraus() const { return kraus_; }
  /// Fixed point of the Schroedinger map rho -> sum_i V_i rho V_i^dagger.
  const MatrixXcd& fixed_point() const { return rho_; }

  /// E_Q(B) for a possibly multi-site Q, contracted site by site.
  MatrixXcd contract(const MatrixXcd& q, int sites, const MatrixXcd& b) const;
  /// Dual (Heisenberg) transfer map B -> sum_i V_i^dagger B V_i.
  MatrixXcd transfer_apply(const MatrixXcd& b) const;

 private:
  std::vector<MatrixXcd> kraus_;
  MatrixXcd rho_;
};

/// Matrix of the dual transfer map on vectorized bond operators,
/// L = sum_i (V_i^T kron V_i^dagger), with eigenvalues sorted by modulus.
struct TransferOperator {
  MatrixXcd matrix;
  VectorXcd eigenvalues;  // descending modulus
};
TransferOperator dual_transfer(const FCSState& state);

/// Certified exponential relaxation of the dual transfer map:
/// ||L^n(A) - psi(A) 1|| <= prefactor * slem^n * ||A|| for 0 <= n <= horizon,
/// with prefactor = max_n sqrt(k) ||D^n||_2 / slem^n over that horizon
/// (D = L minus the fixed-point projection, norms via Frobenius bridging).
struct MixingCertificate {
  bool is_mixing = false;
  double slem = 0.0;       // second largest eigenvalue modulus
  double rate = 0.0;       // -log(slem); +infinity when the gap is total
  double prefactor = 1.0;
  int horizon = 64;
};
MixingCertificate mixing_analysis(const FCSState& state,
                                  double peripheral_tol = 1e-9);

/// Numerical rank of the cross-correlation matrix phi(a_i b_j) over matrix
/// unit bases {a_i} of a left window of k_left sites and {b_j} of the
/// adjacent right window of k_right sites. For a finitely correlated state
/// of bond dimension k the rank is at most k^2; a product state gives 1.
/// Threshold is relative to the top singular value.
int fcs_rank_probe(const StateFunctional& state, int k_left = 1,
                   int k_right = 1, double rel_threshold = 1e-8);

/// Closed-form sum over k >= 1 of phi(product) - phi(fixed) phi(moving),
/// where `moving` is translated right by k. For overlapping k the product is
/// taken in operator order (moving first when `moving_first`); once the
/// supports separate, the geometric tail is summed exactly through the
/// resolvent (I - D)^{-1} of the reduced transfer map.
cplx fcs_connected_sum(const FCSState& state, const LocalOperator& fixed,
                       const LocalOperator& moving, bool moving_first);

}  // namespace fluctlab
