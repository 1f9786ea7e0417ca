#pragma once

#include <vector>

#include "fluctlab/interval.hpp"
#include "fluctlab/linalg.hpp"

namespace fluctlab {

/// A dense operator together with its support interval on the lattice.
/// Site `support.lo` is the leftmost tensor factor of the matrix; embedding
/// into larger windows is always explicit via embed().
class LocalOperator {
 public:
  LocalOperator(Interval support, MatrixXcd matrix, int site_dim = 2);

  const Interval& support() const { return support_; }
  const MatrixXcd& matrix() const { return matrix_; }
  int site_dim() const { return site_dim_; }
  std::int64_t dim() const { return matrix_.rows(); }

  bool self_adjoint(double tol = 1e-12) const {
    return is_hermitian(matrix_, tol);
  }
  double norm() const { return operator_norm(matrix_); }

  LocalOperator adjoint() const {
    return LocalOperator(support_, matrix_.adjoint(), site_dim_);
  }

 private:
  Interval support_;
  int site_dim_;
  MatrixXcd matrix_;
};

/// Tensor with the unit on the extra components of `window`.
LocalOperator embed(const LocalOperator& q, const Interval& window);

/// Lattice translation: support shifted by j, matrix unchanged.
LocalOperator translate(const LocalOperator& q, int j);

LocalOperator operator+(const LocalOperator& a, const LocalOperator& b);
LocalOperator operator-(const LocalOperator& a, const LocalOperator& b);
LocalOperator operator*(cplx c, const LocalOperator& a);

/// Product on the joined support.
LocalOperator multiply(const LocalOperator& a, const LocalOperator& b);

/// [a,b] on the joined support; exactly zero for disjoint supports.
LocalOperator commutator(const LocalOperator& a, const LocalOperator& b);
LocalOperator anticommutator(const LocalOperator& a, const LocalOperator& b);

/// Conditional expectation onto A_[-n,n]: normalized partial trace over the
/// sites of the support outside [-n,n].
LocalOperator partial_trace_localize(const LocalOperator& q, int n);

/// Normalized partial trace of `q` onto the sub-window `keep` of its support.
LocalOperator partial_trace_to(const LocalOperator& q, const Interval& keep);

/// Applies (q tensor 1) on `window` to every column of `x` in place,
/// without materializing the embedded matrix. `x` has d^len(window) rows.
void apply_embedded(const LocalOperator& q, const Interval& window,
                    Eigen::Ref<MatrixXcd> x);

/// Identity on a window.
LocalOperator identity_op(const Interval& window, int site_dim = 2);

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b);

namespace pauli {
MatrixXcd sx();
MatrixXcd sy();
MatrixXcd sz();
MatrixXcd id();
MatrixXcd raising();
MatrixXcd lowering();
/// Named single-site generator lookup: pauli_x/y/z, raising, lowering, identity.
MatrixXcd by_name(const std::string& name);
/// A word of named generators on consecutive sites starting at `anchor`.
LocalOperator word(const std::vector<std::string>& names, int anchor = 0);
}  // namespace pauli

/// Deterministic random Hermitian matrix (test and probe helper).
MatrixXcd random_hermitian(int dim, std::uint64_t seed);

}  // namespace fluctlab
