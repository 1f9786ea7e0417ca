#include "fluctlab/weyl.hpp"

#include <cmath>

#include "fluctlab/errors.hpp"

namespace fluctlab {

SymplecticSpace SymplecticSpace::from_covariance(const CovarianceData& data) {
  SymplecticSpace s;
  s.t_form = data.t.real();
  s.t_form = 0.5 * (s.t_form + s.t_form.transpose()).eval();
  s.sigma = data.sigma;
  return s;
}

QuotientResult quotient_reduce(const SymplecticSpace& s, double rel_tol,
                               double sigma_tol) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s.t_form);
  const VectorXd& lam = es.eigenvalues();
  const double top = std::max(lam.maxCoeff(), 0.0);
  const double cut = rel_tol * std::max(top, 1e-300);
  std::vector<int> kept, removed;
  for (int i = 0; i < lam.size(); ++i)
    (lam[i] >= cut ? kept : removed).push_back(i);
  QuotientResult out;
  out.basis = MatrixXd(s.dim(), kept.size());
  out.kernel = MatrixXd(s.dim(), removed.size());
  for (std::size_t i = 0; i < kept.size(); ++i)
    out.basis.col(i) = es.eigenvectors().col(kept[i]);
  for (std::size_t i = 0; i < removed.size(); ++i)
    out.kernel.col(i) = es.eigenvectors().col(removed[i]);
  const double sigma_scale = std::max(1.0, s.sigma.cwiseAbs().maxCoeff());
  for (std::size_t i = 0; i < removed.size(); ++i) {
    double leak = (s.sigma * out.kernel.col(i)).cwiseAbs().maxCoeff();
    if (leak > sigma_tol * sigma_scale)
      throw QuotientError(
          "quotient_reduce: symplectic form does not vanish on a null "
          "covariance direction (leak " +
          std::to_string(leak) + ")");
  }
  out.space.t_form = out.basis.transpose() * s.t_form * out.basis;
  out.space.sigma = out.basis.transpose() * s.sigma * out.basis;
  return out;
}

ReducedWeyl weyl_reduce(const SymplecticSpace& s, const WeylWord& word) {
  ReducedWeyl out;
  out.total = VectorXd::Zero(s.dim());
  for (const auto& f : word.factors) {
    if (f.size() != s.dim())
      throw std::invalid_argument("weyl_reduce: factor dimension mismatch");
    // W(g) W(f) = e^{-i sigma(g, f)/2} W(g + f), applied left to right.
    out.phase -= 0.5 * s.sigma_at(out.total, f);
    out.total += f;
  }
  return out;
}

cplx quasifree_expect(const SymplecticSpace& s, const WeylWord& word) {
  ReducedWeyl red = weyl_reduce(s, word);
  return std::exp(cplx(0.0, red.phase)) *
         std::exp(-0.5 * s.t_quad(red.total));
}

MatrixXcd quasifree_gram(const SymplecticSpace& s,
                         const std::vector<VectorXd>& fs) {
  const auto m = static_cast<Eigen::Index>(fs.size());
  MatrixXcd gram(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      gram(i, j) = quasifree_expect(s, WeylWord{{-fs[i], fs[j]}});
  return gram;
}

MacroDynamicsReport macro_dynamics(const StateFunctional& state,
                                   const Interaction& psi,
                                   const std::vector<LocalOperator>& generators,
                                   double time, double evolve_tol,
                                   const CovarianceOptions& opts) {
  MacroDynamicsReport report;
  std::vector<LocalOperator> family = generators;
  for (const auto& g : generators) {
    EvolutionResult res = evolve_infinite_approx(g, time, psi, evolve_tol);
    report.truncation_error =
        std::max(report.truncation_error, res.truncation_error);
    family.push_back(res.op);
  }
  report.enlarged = covariance_data(state, family, opts);
  // Near-null covariance directions of the original family must stay
  // near-null after evolution: the macroscopic dynamics acts on the quotient.
  const auto m = static_cast<Eigen::Index>(generators.size());
  SymplecticSpace original;
  original.t_form = report.enlarged.t.topLeftCorner(m, m).real();
  original.t_form =
      0.5 * (original.t_form + original.t_form.transpose()).eval();
  original.sigma = report.enlarged.sigma.topLeftCorner(m, m);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(original.t_form);
  const double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
  const MatrixXd evolved_t =
      report.enlarged.t.bottomRightCorner(m, m).real();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (es.eigenvalues()[i] >= 1e-8 * std::max(top, 1e-300)) continue;
    VectorXd v = es.eigenvectors().col(i);
    const double leak = v.dot(evolved_t * v);
    report.kernel_leak = std::max(report.kernel_leak, std::abs(leak));
  }
  report.kernel_invariant =
      report.kernel_leak <= 1e-6 * std::max(top, 1.0);
  return report;
}

double dynamics_continuity(const StateFunctional& state, const Interaction& psi,
                           const LocalOperator& q, double u,
                           int truncation_radius, double evolve_tol,
                           const CovarianceOptions& opts) {
  EvolutionResult res = evolve_infinite_approx(q, u, psi, evolve_tol);
  LocalOperator truncated = partial_trace_localize(res.op, truncation_radius);
  LocalOperator diff = truncated - embed(q, truncated.support());
  return covariance_t(state, diff, diff, opts).value.real();
}

KMSFluctuationReport kms_fluctuation_check(const GibbsState& state,
                                           const LocalOperator& q,
                                           const LocalOperator& r, int n,
                                           double time) {
  if (state.translation_invariant())
    throw std::invalid_argument(
        "kms_fluctuation_check: needs a fixed-window Gibbs state");
  const Interval window = state.policy().fixed_window;
  LocalOperator qf = fluctuation_operator(state, q, n);
  LocalOperator rf = fluctuation_operator(state, r, n);
  MatrixXcd a = exp_i_hermitian(embed(qf, window).matrix(), 1.0);
  MatrixXcd b = exp_i_hermitian(embed(rf, window).matrix(), 1.0);
  auto eig = HamiltonianCache::instance().get(state.interaction(), window);
  const VectorXd& lam = eig->eigenvalues;
  const double beta = state.beta();
  const double lo = lam.minCoeff();
  if (beta * (lam.maxCoeff() - lo) > 700.0)
    throw InvariantViolationError(
        "kms_fluctuation_check: continuation factor overflows");
  // Everything in the energy eigenbasis: Boltzmann weights and the
  // continuation factors combine per matrix element without overflow.
  const MatrixXcd& v = eig->eigenvectors;
  MatrixXcd at = v.adjoint() * a * v;
  MatrixXcd bt = v.adjoint() * b * v;
  VectorXd w = (-beta * (lam.array() - lo)).exp();
  const double z = w.sum();
  const cplx i_unit(0.0, 1.0);
  cplx continued = 0.0, swapped = 0.0, real_time = 0.0;
  const auto dim = lam.size();
  for (Eigen::Index ia = 0; ia < dim; ++ia) {
    for (Eigen::Index ib = 0; ib < dim; ++ib) {
      const double gap = lam[ib] - lam[ia];
      const cplx phase = std::exp(i_unit * time * gap);
      // F(t + i beta): alpha_{t+i beta}(B)_{ab} carries the extra factor
      // e^{-beta (lam_b - lam_a)} relative to the real-time evolution.
      continued +=
          w[ia] * at(ia, ib) * phase * std::exp(-beta * gap) * bt(ib, ia);
      real_time += w[ia] * at(ia, ib) * phase * bt(ib, ia);
      // phi(alpha_t(B) A): the evolved factor sits on the left.
      swapped += w[ia] * std::exp(i_unit * time * (lam[ia] - lam[ib])) *
                 bt(ia, ib) * at(ib, ia);
    }
  }
  KMSFluctuationReport report;
  report.residual = std::abs(continued - swapped) / z;
  report.magnitude = std::abs(real_time) / z;
  return report;
}

}  // namespace fluctlab
