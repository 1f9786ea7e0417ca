#include "fluctlab/local_operator.hpp"

#include <random>

#include "fluctlab/errors.hpp"

namespace fluctlab {

LocalOperator::LocalOperator(Interval support, MatrixXcd matrix, int site_dim)
    : support_(support), site_dim_(site_dim), matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols())
    throw std::invalid_argument("LocalOperator: matrix not square");
  if (matrix_.rows() != pow_dim(site_dim_, support_.length()))
    throw std::invalid_argument(
        "LocalOperator: matrix dimension does not match support " +
        support_.str());
}

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
  MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

LocalOperator embed(const LocalOperator& q, const Interval& window) {
  if (!window.contains(q.support()))
    throw SupportError("embed: support " + q.support().str() +
                       " not contained in window " + window.str());
  if (window == q.support()) return q;
  const int d = q.site_dim();
  const auto dl = pow_dim(d, q.support().lo - window.lo);
  const auto dr = pow_dim(d, window.hi - q.support().hi);
  MatrixXcd il = MatrixXcd::Identity(dl, dl);
  MatrixXcd ir = MatrixXcd::Identity(dr, dr);
  return LocalOperator(window, kron(kron(il, q.matrix()), ir), d);
}

LocalOperator translate(const LocalOperator& q, int j) {
  return LocalOperator(q.support().shifted(j), q.matrix(), q.site_dim());
}

LocalOperator operator+(const LocalOperator& a, const LocalOperator& b) {
  Interval w = a.support().join(b.support());
  return LocalOperator(w, embed(a, w).matrix() + embed(b, w).matrix(),
                       a.site_dim());
}

LocalOperator operator-(const LocalOperator& a, const LocalOperator& b) {
  Interval w = a.support().join(b.support());
  return LocalOperator(w, embed(a, w).matrix() - embed(b, w).matrix(),
                       a.site_dim());
}

LocalOperator operator*(cplx c, const LocalOperator& a) {
  return LocalOperator(a.support(), c * a.matrix(), a.site_dim());
}

LocalOperator multiply(const LocalOperator& a, const LocalOperator& b) {
  Interval w = a.support().join(b.support());
  return LocalOperator(w, embed(a, w).matrix() * embed(b, w).matrix(),
                       a.site_dim());
}

LocalOperator commutator(const LocalOperator& a, const LocalOperator& b) {
  Interval w = a.support().join(b.support());
  if (a.support().disjoint(b.support()))
    return LocalOperator(w, MatrixXcd::Zero(pow_dim(a.site_dim(), w.length()),
                                            pow_dim(a.site_dim(), w.length())),
                         a.site_dim());
  MatrixXcd ae = embed(a, w).matrix(), be = embed(b, w).matrix();
  return LocalOperator(w, ae * be - be * ae, a.site_dim());
}

LocalOperator anticommutator(const LocalOperator& a, const LocalOperator& b) {
  Interval w = a.support().join(b.support());
  MatrixXcd ae = embed(a, w).matrix(), be = embed(b, w).matrix();
  return LocalOperator(w, ae * be + be * ae, a.site_dim());
}

LocalOperator partial_trace_to(const LocalOperator& q, const Interval& keep) {
  if (!q.support().contains(keep))
    throw SupportError("partial_trace_to: keep window not inside support");
  if (keep == q.support()) return q;
  const int d = q.site_dim();
  const auto dl = pow_dim(d, keep.lo - q.support().lo);
  const auto dk = pow_dim(d, keep.length());
  const auto dr = pow_dim(d, q.support().hi - keep.hi);
  const auto& m = q.matrix();
  MatrixXcd out = MatrixXcd::Zero(dk, dk);
  // index I = iL*dk*dr + iK*dr + iR; trace over (iL, iR), normalized.
  for (std::int64_t il = 0; il < dl; ++il)
    for (std::int64_t ik = 0; ik < dk; ++ik)
      for (std::int64_t jk = 0; jk < dk; ++jk) {
        cplx s = 0.0;
        for (std::int64_t ir = 0; ir < dr; ++ir)
          s += m(il * dk * dr + ik * dr + ir, il * dk * dr + jk * dr + ir);
        out(ik, jk) += s;
      }
  out /= static_cast<double>(dl * dr);
  return LocalOperator(keep, std::move(out), d);
}

LocalOperator partial_trace_localize(const LocalOperator& q, int n) {
  if (n < 0) throw std::invalid_argument("partial_trace_localize: n < 0");
  Interval target(-n, n);
  if (target.contains(q.support())) return q;
  if (q.support().disjoint(target)) {
    // Fully traced out: scalar times the unit at the nearest retained site.
    cplx scalar = q.matrix().trace() / static_cast<double>(q.dim());
    int site = std::clamp(q.support().lo, -n, n);
    return LocalOperator(Interval(site, site),
                         scalar * MatrixXcd::Identity(q.site_dim(), q.site_dim()),
                         q.site_dim());
  }
  Interval keep(std::max(q.support().lo, -n), std::min(q.support().hi, n));
  return partial_trace_to(q, keep);
}

void apply_embedded(const LocalOperator& q, const Interval& window,
                    Eigen::Ref<MatrixXcd> x) {
  if (!window.contains(q.support()))
    throw SupportError("apply_embedded: support not inside window");
  const int d = q.site_dim();
  const auto dl = pow_dim(d, q.support().lo - window.lo);
  const auto dq = q.dim();
  const auto dr = pow_dim(d, window.hi - q.support().hi);
  MatrixXcd qt = q.matrix().transpose();
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (std::int64_t il = 0; il < dl; ++il) {
      Eigen::Map<MatrixXcd> blk(x.col(c).data() + il * dq * dr, dr, dq);
      blk = blk * qt;
    }
  }
}

LocalOperator identity_op(const Interval& window, int site_dim) {
  auto n = pow_dim(site_dim, window.length());
  return LocalOperator(window, MatrixXcd::Identity(n, n), site_dim);
}

namespace pauli {

MatrixXcd sx() {
  MatrixXcd m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
MatrixXcd sy() {
  MatrixXcd m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}
MatrixXcd sz() {
  MatrixXcd m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
MatrixXcd id() { return MatrixXcd::Identity(2, 2); }
MatrixXcd raising() {
  MatrixXcd m(2, 2);
  m << 0, 1, 0, 0;
  return m;
}
MatrixXcd lowering() {
  MatrixXcd m(2, 2);
  m << 0, 0, 1, 0;
  return m;
}

MatrixXcd by_name(const std::string& name) {
  if (name == "sx" || name == "pauli_x") return sx();
  if (name == "sy" || name == "pauli_y") return sy();
  if (name == "sz" || name == "pauli_z") return sz();
  if (name == "id" || name == "identity") return id();
  if (name == "raising" || name == "sp") return raising();
  if (name == "lowering" || name == "sm") return lowering();
  throw ConfigError("unknown generator name: " + name);
}

LocalOperator word(const std::vector<std::string>& names, int anchor) {
  if (names.empty()) throw ConfigError("empty tensor word");
  MatrixXcd m = by_name(names[0]);
  for (std::size_t i = 1; i < names.size(); ++i) m = kron(m, by_name(names[i]));
  return LocalOperator(
      Interval(anchor, anchor + static_cast<int>(names.size()) - 1),
      std::move(m), 2);
}

}  // namespace pauli

MatrixXcd random_hermitian(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  MatrixXcd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = cplx(g(rng), g(rng));
  return 0.5 * (a + a.adjoint()).eval();
}

}  // namespace fluctlab
