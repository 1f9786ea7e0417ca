#pragma once

#include <complex>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "fluctlab/fit.hpp"
#include "fluctlab/local_operator.hpp"

namespace fluctlab {

/// Certified exponential decay of truncated pair correlations:
/// |phi(tau_k(a) b) - phi(a)phi(b)| <= C e^{-M |gap|} ||a|| ||b||.
/// M = +infinity encodes exact factorization beyond overlap.
struct DecayCertificate {
  double prefactor = 1.0;
  double rate = 0.0;
  bool exponential() const { return rate > 0.0; }
};

/// An expectation oracle over local operators.
class StateFunctional {
 public:
  virtual ~StateFunctional() = default;

  virtual int site_dim() const = 0;
  virtual bool translation_invariant() const = 0;

  virtual cplx expect(const LocalOperator& q) const = 0;

  /// phi(tau_k(a) * b), with a and b at their declared supports.
  /// The default embeds both into the joined window; subclasses override
  /// with cheaper contractions.
  virtual cplx expect_pair(const LocalOperator& a, const LocalOperator& b,
                           int k) const;

  /// Reduced density matrix of the state on `window` (dense).
  virtual MatrixXcd window_density(const Interval& window) const = 0;

  /// Decay certificate for truncated correlations, when one is available.
  virtual std::optional<DecayCertificate> mixing_certificate() const {
    return std::nullopt;
  }
};

/// Translation-invariant product state with a fixed on-site density matrix.
class ProductState : public StateFunctional {
 public:
  explicit ProductState(MatrixXcd site_density);

  /// Normalized trace (infinite-temperature) state.
  static ProductState tracial(int site_dim = 2);
  /// All sites in the +z pure state.
  static ProductState plus_z();

  int site_dim() const override { return static_cast<int>(rho_.rows()); }
  bool translation_invariant() const override { return true; }
  cplx expect(const LocalOperator& q) const override;
  cplx expect_pair(const LocalOperator& a, const LocalOperator& b,
                   int k) const override;
  MatrixXcd window_density(const Interval& window) const override;
  std::optional<DecayCertificate> mixing_certificate() const override {
    return DecayCertificate{0.0, std::numeric_limits<double>::infinity()};
  }

  const MatrixXcd& site_density() const { return rho_; }

 private:
  MatrixXcd rho_;
};

struct TwoPointTable {
  std::vector<int> separations;
  std::vector<double> values;  // |phi(q1 tau_n(q2)) - phi(q1) phi(q2)|
  LinearFit fit;               // log value vs n: rate = -slope
  double fitted_rate() const { return -fit.slope; }
  double fitted_prefactor() const { return std::exp(fit.intercept); }
};

/// Truncated two-point correlations over the given separations, with a
/// log-linear decay fit.
TwoPointTable two_point_decay(const StateFunctional& state,
                              const LocalOperator& q1, const LocalOperator& q2,
                              const std::vector<int>& separations);

}  // namespace fluctlab
