#pragma once

#include <map>
#include <mutex>

#include "fluctlab/dynamics.hpp"
#include "fluctlab/state.hpp"

namespace fluctlab {

/// How finite windows are chosen when evaluating Gibbs expectations.
struct WindowPolicy {
  bool adaptive = true;          // window = joined support grown by margin
  Interval fixed_window{0, 0};   // used when adaptive == false
  int margin = 2;
  std::int64_t max_window_dim = kDefaultWindowCap;
  std::int64_t dense_dim_cap = std::int64_t{1} << 12;  // for dense densities
  // Smallest window dimension at which eligible Hamiltonians switch to the
  // spin-flip parity-sector eigensolver (exposed for cross-validation).
  std::int64_t parity_min_dim = std::int64_t{1} << 13;
};

namespace detail {
class GibbsWindowED;
}

/// Finite-volume Gibbs state phi(Q) = tr(e^{-beta H} Q) / tr(e^{-beta H}),
/// with window choice per policy and thermodynamic-limit extrapolation.
class GibbsState : public StateFunctional {
 public:
  GibbsState(Interaction psi, double beta, WindowPolicy policy = {});
  ~GibbsState() override;

  int site_dim() const override { return psi_.site_dim(); }
  bool translation_invariant() const override { return policy_.adaptive; }
  cplx expect(const LocalOperator& q) const override;
  cplx expect_pair(const LocalOperator& a, const LocalOperator& b,
                   int k) const override;
  MatrixXcd window_density(const Interval& window) const override;
  std::optional<DecayCertificate> mixing_certificate() const override;

  /// Expectation on an explicit window.
  cplx expect_on_window(const LocalOperator& q, const Interval& window) const;

  /// Expectation of the product ops[0] * ops[1] * ... on an explicit window,
  /// applied factor-wise without materializing the embedded product.
  cplx expect_product_on_window(const std::vector<LocalOperator>& ops,
                                const Interval& window) const;

  struct Extrapolated {
    cplx value;
    double error_bar = 0.0;
    std::vector<double> increments;
    LinearFit increment_fit;  // log increment vs buffer size
  };

  /// Evaluates phi^{[lo-k, hi+k]}(q) for growing k until increments < tol.
  Extrapolated thermodynamic_expect(const LocalOperator& q, double tol) const;

  /// |phi(q1 alpha_{i beta}(q2)) - phi(q2 q1)| at finite volume.
  double kms_residual(const LocalOperator& q1, const LocalOperator& q2,
                      const Interval& window) const;

  const Interaction& interaction() const { return psi_; }
  double beta() const { return beta_; }
  const WindowPolicy& policy() const { return policy_; }

  Interval choose_window(const Interval& joined_support) const;

 private:
  std::shared_ptr<detail::GibbsWindowED> window_ed(const Interval& w) const;

  Interaction psi_;
  double beta_;
  WindowPolicy policy_;
  mutable std::mutex mu_;
  mutable std::map<std::string, std::shared_ptr<detail::GibbsWindowED>> cache_;
  mutable std::vector<std::string> cache_order_;
  mutable std::optional<std::optional<DecayCertificate>> certificate_;
};

}  // namespace fluctlab
