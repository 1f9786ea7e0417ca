#include "fluctlab/state.hpp"

#include "fluctlab/errors.hpp"

namespace fluctlab {

cplx StateFunctional::expect_pair(const LocalOperator& a,
                                  const LocalOperator& b, int k) const {
  return expect(multiply(translate(a, k), b));
}

ProductState::ProductState(MatrixXcd site_density) : rho_(std::move(site_density)) {
  if (rho_.rows() != rho_.cols())
    throw std::invalid_argument("ProductState: density not square");
  if (!is_hermitian(rho_, 1e-12) || std::abs(rho_.trace() - 1.0) > 1e-12)
    throw InvariantViolationError("ProductState: density not normalized");
}

ProductState ProductState::tracial(int site_dim) {
  return ProductState(MatrixXcd::Identity(site_dim, site_dim) /
                      static_cast<double>(site_dim));
}

ProductState ProductState::plus_z() {
  MatrixXcd rho = MatrixXcd::Zero(2, 2);
  rho(0, 0) = 1.0;
  return ProductState(std::move(rho));
}

cplx ProductState::expect(const LocalOperator& q) const {
  MatrixXcd rho = window_density(q.support());
  return (rho * q.matrix()).trace();
}

cplx ProductState::expect_pair(const LocalOperator& a, const LocalOperator& b,
                               int k) const {
  LocalOperator shifted = translate(a, k);
  if (shifted.support().disjoint(b.support()))
    return expect(a) * expect(b);  // exact factorization
  return StateFunctional::expect_pair(a, b, k);
}

MatrixXcd ProductState::window_density(const Interval& window) const {
  MatrixXcd out = MatrixXcd::Identity(1, 1);
  for (int i = 0; i < window.length(); ++i) out = kron(out, rho_);
  return out;
}

TwoPointTable two_point_decay(const StateFunctional& state,
                              const LocalOperator& q1, const LocalOperator& q2,
                              const std::vector<int>& separations) {
  TwoPointTable table;
  const cplx m1 = state.expect(q1);
  const cplx m2 = state.expect(q2);
  std::vector<double> xs;
  for (int n : separations) {
    // phi(q1 tau_n(q2)) = phi(tau_{-n}(q1) q2) by translation invariance.
    cplx raw = state.expect_pair(q1, q2, -n);
    table.separations.push_back(n);
    table.values.push_back(std::abs(raw - m1 * m2));
    xs.push_back(static_cast<double>(n));
  }
  table.fit = log_linear_fit(xs, table.values);
  return table;
}

}  // namespace fluctlab
