#include "fluctlab/dynamics.hpp"

#include <cmath>

#include "fluctlab/errors.hpp"

namespace fluctlab {

LocalOperator local_hamiltonian(const Interaction& psi, const Interval& window) {
  const int d = psi.site_dim();
  const auto dim = pow_dim(d, window.length());
  MatrixXcd h = MatrixXcd::Zero(dim, dim);
  for (const auto& term : psi.terms()) {
    const int w = term.support().length();
    for (int a = window.lo; a + w - 1 <= window.hi; ++a) {
      LocalOperator shifted = translate(term, a);
      h += embed(shifted, window).matrix();
    }
  }
  return LocalOperator(window, std::move(h), d);
}

HamiltonianCache& HamiltonianCache::instance() {
  static HamiltonianCache cache;
  return cache;
}

std::shared_ptr<const HermitianEig> HamiltonianCache::get(
    const Interaction& psi, const Interval& window) {
  std::string key = std::to_string(psi.hash()) + ":" + window.str();
  {
    std::lock_guard lock(mu_);
    auto it = map_.find(key);
    if (it != map_.end()) return it->second;
  }
  LocalOperator h = local_hamiltonian(psi, window);
  auto eig = std::make_shared<HermitianEig>(hermitian_eig(h.matrix()));
  std::lock_guard lock(mu_);
  map_[key] = eig;
  return eig;
}

LocalOperator evolve(const LocalOperator& q, double t, const Interaction& psi,
                     const Interval& window) {
  if (!window.contains(q.support()))
    throw SupportError("evolve: support not inside window");
  auto eig = HamiltonianCache::instance().get(psi, window);
  MatrixXcd u = exp_i_hermitian(*eig, t);
  MatrixXcd qe = embed(q, window).matrix();
  return LocalOperator(window, u * qe * u.adjoint(), q.site_dim());
}

LocalOperator complex_evolve(const LocalOperator& q, cplx z,
                             const Interaction& psi, const Interval& window,
                             double overflow_threshold,
                             bool* conditioning_warning) {
  if (!window.contains(q.support()))
    throw SupportError("complex_evolve: support not inside window");
  auto eig = HamiltonianCache::instance().get(psi, window);
  const double spread =
      eig->eigenvalues.maxCoeff() - eig->eigenvalues.minCoeff();
  if (conditioning_warning)
    *conditioning_warning = std::abs(z.imag()) * spread > overflow_threshold;
  // e^{izH} Q e^{-izH}; for complex z the two factors are not adjoints.
  MatrixXcd left = exp_i_hermitian(*eig, z);
  MatrixXcd right = exp_i_hermitian(*eig, -z);
  MatrixXcd qe = embed(q, window).matrix();
  return LocalOperator(window, left * qe * right, q.site_dim());
}

EvolutionResult evolve_infinite_approx(const LocalOperator& q, double t,
                                       const Interaction& psi, double tol,
                                       std::int64_t max_window_dim) {
  if (tol <= 0) throw std::invalid_argument("evolve_infinite_approx: tol <= 0");
  Interval base = q.support();
  std::vector<double> increments;
  LocalOperator prev = evolve(q, t, psi, base);
  Interval prev_window = base;
  for (int buffer = 1;; ++buffer) {
    Interval window = base.grown(buffer);
    if (pow_dim(q.site_dim(), window.length()) > max_window_dim)
      throw WindowCapError(
          "evolve_infinite_approx: window cap hit before tolerance " +
          std::to_string(tol));
    LocalOperator cur = evolve(q, t, psi, window);
    double inc = (cur - embed(prev, window)).norm();
    increments.push_back(inc);
    if (inc < tol) {
      // Geometric extrapolation of the remaining increments.
      double extrapolated = 0.0;
      if (increments.size() >= 2 && increments[increments.size() - 2] > 0) {
        double r = inc / increments[increments.size() - 2];
        if (r < 1.0) extrapolated = inc * r / (1.0 - r);
      }
      return EvolutionResult{cur, window, inc + extrapolated};
    }
    prev = std::move(cur);
    prev_window = window;
  }
}

LiebRobinsonTable lieb_robinson_probe(const LocalOperator& q, double t,
                                      const Interaction& psi,
                                      const std::vector<int>& buffers) {
  if (buffers.empty()) return {};
  for (std::size_t i = 1; i < buffers.size(); ++i)
    if (buffers[i] <= buffers[i - 1])
      throw std::invalid_argument("lieb_robinson_probe: buffers not increasing");
  const int b_max = buffers.back();
  Interval ref_window = q.support().grown(b_max);
  LocalOperator ref = evolve(q, t, psi, ref_window);
  LiebRobinsonTable table;
  std::vector<double> xs, ys;
  for (int b : buffers) {
    Interval window = q.support().grown(b);
    LocalOperator cur = evolve(q, t, psi, window);
    double dev = (embed(cur, ref_window) - ref).norm();
    table.rows.push_back({b, dev});
    xs.push_back(b);
    ys.push_back(dev);
  }
  table.decay_fit = log_linear_fit(xs, ys);
  return table;
}

}  // namespace fluctlab
