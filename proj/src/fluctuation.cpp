#include "fluctlab/fluctuation.hpp"

#include <cmath>

#include "fluctlab/errors.hpp"
#include "fluctlab/fcs.hpp"

namespace fluctlab {

LocalOperator fluctuation_operator(const StateFunctional& state,
                                   const LocalOperator& q, int n) {
  if (n < 0) throw std::invalid_argument("fluctuation_operator: n < 0");
  const cplx mean = state.expect(q);
  const Interval window(q.support().lo - n, q.support().hi + n);
  const auto dim = pow_dim(q.site_dim(), window.length());
  MatrixXcd sum = MatrixXcd::Zero(dim, dim);
  for (int j = -n; j <= n; ++j)
    sum += embed(translate(q, j), window).matrix();
  sum -= (static_cast<double>(2 * n + 1) * mean) *
         MatrixXcd::Identity(dim, dim);
  sum /= std::sqrt(static_cast<double>(2 * n + 1));
  return LocalOperator(window, std::move(sum), q.site_dim());
}

CovarianceResult covariance_t(const StateFunctional& state,
                              const LocalOperator& q, const LocalOperator& r,
                              const CovarianceOptions& opts) {
  CovarianceResult out;
  const cplx mq = state.expect(q);
  const cplx mr = state.expect(r);
  out.value = state.expect(multiply(q, r)) - mq * mr;
  out.terms = 1;
  if (const auto* fcs = dynamic_cast<const FCSState*>(&state)) {
    // Exact geometric tails through the transfer resolvent:
    // k > 0 contributes phi(tau_k(q) r), k < 0 contributes phi(q tau_k(r)).
    out.value += fcs_connected_sum(*fcs, r, q, /*moving_first=*/true);
    out.value += fcs_connected_sum(*fcs, q, r, /*moving_first=*/false);
    return out;
  }
  auto cert = state.mixing_certificate();
  if (!cert || !cert->exponential())
    throw NoMixingCertificateError(
        "covariance_t: state offers no usable decay certificate");
  const double scale = q.norm() * r.norm();
  const int overlap = std::max(r.support().hi - q.support().lo,
                               q.support().hi - r.support().lo);
  // Bound on the remainder of both one-sided sums once shift k is done;
  // shifts beyond k have gaps of at least k - overlap.
  auto remainder_after = [&](int k) {
    if (std::isinf(cert->rate)) return 0.0;
    const double lam = std::exp(-cert->rate);
    const int gap = std::max(0, k - overlap);
    return 2.0 * cert->prefactor * scale * std::pow(lam, gap) / (1.0 - lam);
  };
  for (int k = 1;; ++k) {
    cplx ck, cmk;
    if (k <= overlap) {
      // The shifted supports may still intersect; keep the factor order.
      ck = state.expect(multiply(translate(q, k), r)) - mq * mr;
      cmk = state.expect(multiply(q, translate(r, k))) - mq * mr;
    } else {
      ck = state.expect_pair(q, r, k) - mq * mr;
      cmk = state.expect_pair(r, q, k) - mq * mr;
    }
    out.value += ck + cmk;
    out.terms += 2;
    if (k > overlap && remainder_after(k) <= opts.tail_tol) {
      out.tail_bound = remainder_after(k);
      break;
    }
    if (k >= opts.shift_cap) {
      out.tail_bound = remainder_after(k);
      break;
    }
  }
  return out;
}

cplx symplectic_s(const StateFunctional& state, const LocalOperator& q,
                  const LocalOperator& r) {
  // [tau_k(q), r] = 0 once the shifted supports separate, so the sum is
  // finite by construction.
  const int k_lo = r.support().lo - q.support().hi;
  const int k_hi = r.support().hi - q.support().lo;
  cplx total = 0.0;
  for (int k = k_lo; k <= k_hi; ++k)
    total += state.expect(commutator(translate(q, k), r));
  return total;
}

CovarianceData covariance_data(const StateFunctional& state,
                               const std::vector<LocalOperator>& generators,
                               const CovarianceOptions& opts) {
  const auto m = static_cast<Eigen::Index>(generators.size());
  CovarianceData data;
  data.generators = generators;
  data.t = MatrixXcd::Zero(m, m);
  data.sigma = MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      CovarianceResult res =
          covariance_t(state, generators[i], generators[j], opts);
      data.t(i, j) = res.value;
      data.t(j, i) = std::conj(res.value);
      data.tail_bound = std::max(data.tail_bound, res.tail_bound);
      cplx s = symplectic_s(state, generators[i], generators[j]);
      data.sigma(i, j) = s.imag();
      data.sigma(j, i) = -s.imag();
    }
  }
  return data;
}

CharacteristicEvaluator::CharacteristicEvaluator(
    const StateFunctional& state, const std::vector<LocalOperator>& generators,
    int n) {
  if (generators.empty())
    throw std::invalid_argument("CharacteristicEvaluator: no generators");
  std::vector<LocalOperator> fluct;
  for (const auto& g : generators)
    fluct.push_back(fluctuation_operator(state, g, n));
  window_ = fluct[0].support();
  for (const auto& f : fluct) window_ = window_.join(f.support());
  rho_ = state.window_density(window_);
  for (const auto& f : fluct)
    eigs_.push_back(hermitian_eig(embed(f, window_).matrix()));
  if (eigs_.size() == 1) {
    weights_ = (eigs_[0].eigenvectors.adjoint() * rho_ *
                eigs_[0].eigenvectors)
                   .diagonal();
  } else if (eigs_.size() == 2) {
    MatrixXcd w = eigs_[0].eigenvectors.adjoint() * eigs_[1].eigenvectors;
    MatrixXcd z = eigs_[1].eigenvectors.adjoint() * rho_ *
                  eigs_[0].eigenvectors;
    // F(T) = sum_ab e^{iT(lam_a + mu_b)} W_ab Z_ba; fold W and Z once so a
    // T sweep costs one matrix-vector product each.
    pair_ = w.cwiseProduct(z.transpose());
  }
}

cplx CharacteristicEvaluator::value(double t_param) const {
  const cplx i_unit(0.0, 1.0);
  if (eigs_.size() == 1) {
    cplx total = 0.0;
    for (Eigen::Index a = 0; a < weights_.size(); ++a)
      total += std::exp(i_unit * t_param * eigs_[0].eigenvalues[a]) *
               weights_[a];
    return total;
  }
  if (eigs_.size() == 2) {
    const VectorXcd ea =
        (i_unit * t_param * eigs_[0].eigenvalues.cast<cplx>()).array().exp().matrix();
    const VectorXcd eb =
        (i_unit * t_param * eigs_[1].eigenvalues.cast<cplx>()).array().exp().matrix();
    return (ea.transpose() * (pair_ * eb))(0, 0);
  }
  MatrixXcd m = rho_;
  for (const auto& eig : eigs_) m *= exp_i_hermitian(eig, t_param);
  return m.trace();
}

cplx CharacteristicEvaluator::derivative(double t_param) const {
  const cplx i_unit(0.0, 1.0);
  if (eigs_.size() == 1) {
    cplx total = 0.0;
    for (Eigen::Index a = 0; a < weights_.size(); ++a) {
      const double lam = eigs_[0].eigenvalues[a];
      total += i_unit * lam * std::exp(i_unit * t_param * lam) * weights_[a];
    }
    return total;
  }
  if (eigs_.size() == 2) {
    const VectorXcd ea =
        (i_unit * t_param * eigs_[0].eigenvalues.cast<cplx>()).array().exp().matrix();
    const VectorXcd eb =
        (i_unit * t_param * eigs_[1].eigenvalues.cast<cplx>()).array().exp().matrix();
    const VectorXcd la =
        eigs_[0].eigenvalues.cast<cplx>().cwiseProduct(ea);
    const VectorXcd lb =
        eigs_[1].eigenvalues.cast<cplx>().cwiseProduct(eb);
    const cplx left = (la.transpose() * (pair_ * eb))(0, 0);
    const cplx right = (ea.transpose() * (pair_ * lb))(0, 0);
    return i_unit * (left + right);
  }
  throw std::invalid_argument(
      "CharacteristicEvaluator: derivative supports at most two generators");
}

cplx characteristic_function(const StateFunctional& state,
                             const std::vector<LocalOperator>& generators,
                             double t_param, int n) {
  return CharacteristicEvaluator(state, generators, n).value(t_param);
}

cplx product_characteristic(const ProductState& state, const LocalOperator& q,
                            long n, double t_param) {
  if (q.support().length() != 1)
    throw std::invalid_argument("product_characteristic: q not single-site");
  const cplx mean = state.expect(q);
  const double scale = t_param / std::sqrt(static_cast<double>(2 * n + 1));
  MatrixXcd centered =
      q.matrix() - mean * MatrixXcd::Identity(q.dim(), q.dim());
  MatrixXcd u = exp_i_hermitian(centered, scale);
  const cplx site = (state.site_density() * u).trace();
  return std::pow(site, static_cast<double>(2 * n + 1));
}

cplx gaussian_prediction(const CovarianceData& data, double t_param) {
  const auto m = data.t.rows();
  double quad = 0.0;
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index l = 0; l < m; ++l) quad += data.t(k, l).real();
  double phase = 0.0;
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index l = k + 1; l < m; ++l) phase += data.sigma(k, l);
  const double half_t2 = 0.5 * t_param * t_param;
  return std::exp(-half_t2 * quad) *
         std::exp(cplx(0.0, -half_t2 * phase));
}

CLTReport clt_study(const StateFunctional& state,
                    const std::vector<LocalOperator>& generators,
                    const std::vector<int>& block_radii,
                    const std::vector<double>& t_grid,
                    const CovarianceOptions& opts) {
  CLTReport report;
  report.block_radii = block_radii;
  report.t_grid = t_grid;
  report.covariance = covariance_data(state, generators, opts);
  for (int n : block_radii) {
    CharacteristicEvaluator eval(state, generators, n);
    double sup = 0.0;
    for (double t : t_grid)
      sup = std::max(sup, std::abs(eval.value(t) -
                                   gaussian_prediction(report.covariance, t)));
    report.sup_errors.push_back(sup);
  }
  return report;
}

cplx bolthausen_residual(const StateFunctional& state, const LocalOperator& q,
                         const LocalOperator& r, int n, double t_param,
                         const CovarianceOptions& opts) {
  CovarianceData data = covariance_data(state, {q, r}, opts);
  // t(q+r, q+r) is the full quadratic form; the cross phase is sigma(q, r).
  double quad = 0.0;
  for (Eigen::Index a = 0; a < 2; ++a)
    for (Eigen::Index b = 0; b < 2; ++b) quad += data.t(a, b).real();
  const double sig = data.sigma(0, 1);
  CharacteristicEvaluator eval(state, {q, r}, n);
  return eval.derivative(t_param) +
         t_param * cplx(quad, sig) * eval.value(t_param);
}

ExpCommutatorCheck exp_commutator_check(const MatrixXcd& a,
                                        const MatrixXcd& b) {
  ExpCommutatorCheck out;
  MatrixXcd eb = exp_i_hermitian(b, 1.0);
  MatrixXcd ea = exp_i_hermitian(a, 1.0);
  MatrixXcd eab = exp_i_hermitian(MatrixXcd(a + b), 1.0);
  out.defect = operator_norm(eab - eb * ea);
  out.commutator_exp = operator_norm(a * eb - eb * a);
  out.commutator_norm = operator_norm(a * b - b * a);
  return out;
}

int block_sequence(long n) {
  if (n < 0) throw std::invalid_argument("block_sequence: n < 0");
  const double size = static_cast<double>(2 * n + 1);
  return static_cast<int>(std::ceil(std::pow(size, 0.125) * std::log(size)));
}

}  // namespace fluctlab
