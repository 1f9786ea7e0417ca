#include "fluctlab/gibbs.hpp"

#include <array>
#include <cmath>

#include "fluctlab/errors.hpp"

namespace fluctlab {
namespace detail {

namespace {

bool numerically_real_matrix(const MatrixXcd& a) {
  double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return true;
  return a.imag().cwiseAbs().maxCoeff() <= 1e-14 * scale;
}

bool numerically_diagonal(const MatrixXcd& a) {
  double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return true;
  double off = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) off = std::max(off, std::abs(a(i, j)));
  return off <= 1e-14 * scale;
}

// Normalized Boltzmann weights e^{-beta(lambda - lambda_min)} / Z.
VectorXd boltzmann_weights(const VectorXd& eigenvalues, double beta) {
  const double lo = eigenvalues.minCoeff();
  VectorXd w = (-beta * (eigenvalues.array() - lo)).exp();
  return w / w.sum();
}

// One translated interaction term, preprocessed for sparse application to
// computational basis states of a qubit window. Site s occupies the bit at
// position (window.hi - s), so the leftmost site is the most significant bit.
struct SparseTerm {
  std::vector<int> bit_pos;  // per local site, most significant first
  // For each input local index: the nonzero (output local index, value) list.
  std::vector<std::vector<std::pair<int, double>>> columns;

  int extract(std::int64_t y) const {
    int iq = 0;
    for (int p : bit_pos) iq = (iq << 1) | static_cast<int>((y >> p) & 1);
    return iq;
  }
  std::int64_t scatter(std::int64_t y, int iq) const {
    const int w = static_cast<int>(bit_pos.size());
    for (int t = 0; t < w; ++t) {
      std::int64_t bit = (iq >> (w - 1 - t)) & 1;
      y = (y & ~(std::int64_t{1} << bit_pos[t])) | (bit << bit_pos[t]);
    }
    return y;
  }
};

std::vector<SparseTerm> sparse_terms(const Interaction& psi,
                                     const Interval& window) {
  std::vector<SparseTerm> out;
  for (const auto& term : psi.terms()) {
    const int w = term.support().length();
    const auto& m = term.matrix();
    std::vector<std::vector<std::pair<int, double>>> cols(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        if (std::abs(m(i, j)) > 0.0)
          cols[j].emplace_back(static_cast<int>(i), m(i, j).real());
    for (int a = window.lo; a + w - 1 <= window.hi; ++a) {
      SparseTerm st;
      for (int s = a; s <= a + w - 1; ++s)
        st.bit_pos.push_back(window.hi - s);
      st.columns = cols;
      out.push_back(std::move(st));
    }
  }
  return out;
}

}  // namespace

/// Windowed eigendecomposition of the Gibbs density. Two modes:
///  - plain: full Hermitian diagonalization, shared with the dynamics cache;
///  - parity: for real spin-flip-symmetric qubit Hamiltonians on large
///    windows, the two sigma_x^{tensor n} parity sectors are diagonalized
///    separately as real symmetric blocks of half the dimension.
class GibbsWindowED {
 public:
  GibbsWindowED(const Interaction& psi, double beta, const Interval& window,
                std::int64_t parity_min_dim = std::int64_t{1} << 13)
      : window_(window), d_(psi.site_dim()), beta_(beta) {
    dim_ = pow_dim(d_, window.length());
    bool real_terms = true;
    for (const auto& term : psi.terms())
      real_terms = real_terms && numerically_real_matrix(term.matrix());
    parity_ = d_ == 2 && dim_ >= parity_min_dim && real_terms &&
              psi.spin_flip_symmetric();
    if (!parity_ && dim_ > (std::int64_t{1} << 13))
      throw WindowCapError(
          "GibbsWindowED: window " + window.str() +
          " too large without a parity-sector reduction");
    if (parity_) {
      build_parity(psi);
    } else {
      eig_ = HamiltonianCache::instance().get(psi, window);
      weights_ = boltzmann_weights(eig_->eigenvalues, beta_);
    }
  }

  const Interval& window() const { return window_; }
  bool parity_mode() const { return parity_; }

  cplx expect_product(const std::vector<const LocalOperator*>& ops) const {
    if (parity_) {
      bool all_diag = true;
      for (const auto* op : ops)
        all_diag = all_diag && numerically_diagonal(op->matrix());
      return all_diag ? parity_diagonal(ops) : parity_general(ops);
    }
    MatrixXcd x = eig_->eigenvectors;
    for (auto it = ops.rbegin(); it != ops.rend(); ++it)
      apply_embedded(**it, window_, x);
    VectorXcd overlaps = (eig_->eigenvectors.conjugate().cwiseProduct(x))
                             .colwise()
                             .sum()
                             .transpose();
    return overlaps.cwiseProduct(weights_.cast<cplx>()).sum();
  }

  // Dense e^{-beta H} / Z on the window; plain mode only.
  MatrixXcd thermal_density() const {
    if (parity_)
      throw WindowCapError("thermal_density: window too large for dense form");
    return eig_->eigenvectors * weights_.asDiagonal() *
           eig_->eigenvectors.adjoint();
  }

  std::size_t bytes() const {
    if (parity_)
      return 2 * static_cast<std::size_t>(block_vecs_[0].size()) * 8 +
             static_cast<std::size_t>(dim_) * 4;
    return static_cast<std::size_t>(eig_->eigenvectors.size()) * 16;
  }

 private:
  void build_parity(const Interaction& psi) {
    const std::int64_t flip_mask = dim_ - 1;
    const std::int64_t nreps = dim_ / 2;
    reps_.reserve(nreps);
    rep_index_.assign(dim_, -1);
    for (std::int64_t y = 0; y < dim_; ++y) {
      std::int64_t fy = y ^ flip_mask;
      if (y < fy) {
        rep_index_[y] = rep_index_[fy] = static_cast<std::int32_t>(reps_.size());
        reps_.push_back(y);
      }
    }
    auto terms = sparse_terms(psi, window_);
    for (int p = 0; p < 2; ++p)
      block_vecs_[p] = MatrixXd::Zero(nreps, nreps);
    // Sector blocks: H+/-[i,j] = <rep_i|H|rep_j> +/- <~rep_i|H|rep_j>.
    for (std::int64_t j = 0; j < nreps; ++j) {
      const std::int64_t y = reps_[j];
      for (const auto& st : terms) {
        const int iq = st.extract(y);
        for (const auto& [iq2, v] : st.columns[iq]) {
          const std::int64_t x = st.scatter(y, iq2);
          const std::int32_t i = rep_index_[x];
          if (x == reps_[i]) {
            block_vecs_[0](i, j) += v;
            block_vecs_[1](i, j) += v;
          } else {
            block_vecs_[0](i, j) += v;
            block_vecs_[1](i, j) -= v;
          }
        }
      }
    }
    VectorXd all(2 * nreps);
    for (int p = 0; p < 2; ++p) {
      sym_eig_inplace(block_vecs_[p], block_vals_[p]);
      all.segment(p * nreps, nreps) = block_vals_[p];
    }
    weights_ = boltzmann_weights(all, beta_);
  }

  cplx parity_diagonal(const std::vector<const LocalOperator*>& ops) const {
    const std::int64_t flip_mask = dim_ - 1;
    // Diagonal of the embedded product over the full window.
    VectorXcd diag = VectorXcd::Ones(dim_);
    for (const auto* op : ops) {
      std::vector<int> pos;
      for (int s = op->support().lo; s <= op->support().hi; ++s)
        pos.push_back(window_.hi - s);
      for (std::int64_t y = 0; y < dim_; ++y) {
        int iq = 0;
        for (int p : pos) iq = (iq << 1) | static_cast<int>((y >> p) & 1);
        diag[y] *= op->matrix()(iq, iq);
      }
    }
    const std::int64_t nreps = dim_ / 2;
    // |v(rep)|^2 = |v(~rep)|^2 = c^2 / 2 in either sector.
    VectorXcd q(nreps);
    for (std::int64_t j = 0; j < nreps; ++j)
      q[j] = 0.5 * (diag[reps_[j]] + diag[reps_[j] ^ flip_mask]);
    cplx value = 0.0;
    for (int p = 0; p < 2; ++p) {
      const auto& v = block_vecs_[p];
      for (std::int64_t i = 0; i < nreps; ++i) {
        const double w = weights_[p * nreps + i];
        if (w < 1e-300) continue;
        value += w * (v.col(i).array().square().cast<cplx>() * q.array()).sum();
      }
    }
    return value;
  }

  cplx parity_general(const std::vector<const LocalOperator*>& ops) const {
    const std::int64_t flip_mask = dim_ - 1;
    const std::int64_t nreps = dim_ / 2;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    MatrixXcd full(dim_, 1), applied(dim_, 1);
    cplx value = 0.0;
    for (int p = 0; p < 2; ++p) {
      const double parity_sign = (p == 0) ? 1.0 : -1.0;
      for (std::int64_t i = 0; i < nreps; ++i) {
        const double w = weights_[p * nreps + i];
        if (w < 1e-18) continue;  // negligible Boltzmann weight
        for (std::int64_t j = 0; j < nreps; ++j) {
          const double c = block_vecs_[p](j, i) * inv_sqrt2;
          full(reps_[j], 0) = c;
          full(reps_[j] ^ flip_mask, 0) = parity_sign * c;
        }
        applied = full;
        for (auto it = ops.rbegin(); it != ops.rend(); ++it)
          apply_embedded(**it, window_, applied);
        value += w * full.col(0).dot(applied.col(0));
      }
    }
    return value;
  }

  Interval window_;
  int d_;
  double beta_;
  std::int64_t dim_ = 0;
  bool parity_ = false;
  std::shared_ptr<const HermitianEig> eig_;  // plain mode
  std::array<MatrixXd, 2> block_vecs_;       // parity mode: sector eigenvectors
  std::array<VectorXd, 2> block_vals_;
  std::vector<std::int64_t> reps_;
  std::vector<std::int32_t> rep_index_;
  VectorXd weights_;  // normalized, concatenated over sectors in parity mode
};

}  // namespace detail

GibbsState::GibbsState(Interaction psi, double beta, WindowPolicy policy)
    : psi_(std::move(psi)), beta_(beta), policy_(policy) {
  if (beta_ < 0) throw std::invalid_argument("GibbsState: beta < 0");
  if (!policy_.adaptive && policy_.fixed_window.length() < psi_.range())
    throw SupportError("GibbsState: fixed window shorter than the range");
}

GibbsState::~GibbsState() = default;

Interval GibbsState::choose_window(const Interval& joined_support) const {
  if (!policy_.adaptive) {
    if (!policy_.fixed_window.contains(joined_support))
      throw SupportError("GibbsState: support " + joined_support.str() +
                         " outside fixed window " + policy_.fixed_window.str());
    return policy_.fixed_window;
  }
  Interval w = joined_support.grown(policy_.margin);
  if (pow_dim(psi_.site_dim(), w.length()) > policy_.max_window_dim)
    throw WindowCapError("GibbsState: adaptive window " + w.str() +
                         " exceeds the dimension cap");
  return w;
}

std::shared_ptr<detail::GibbsWindowED> GibbsState::window_ed(
    const Interval& w) const {
  const std::string key = w.str();
  {
    std::lock_guard lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  auto ed = std::make_shared<detail::GibbsWindowED>(psi_, beta_, w,
                                                    policy_.parity_min_dim);
  std::lock_guard lock(mu_);
  // Bound the cache footprint; evict oldest decompositions first.
  constexpr std::size_t kCacheBytes = std::size_t{5} << 29;  // 2.5 GB
  std::size_t total = ed->bytes();
  for (const auto& [k, e] : cache_) total += e->bytes();
  while (total > kCacheBytes && !cache_order_.empty()) {
    auto victim = cache_.find(cache_order_.front());
    cache_order_.erase(cache_order_.begin());
    if (victim != cache_.end()) {
      total -= victim->second->bytes();
      cache_.erase(victim);
    }
  }
  cache_[key] = ed;
  cache_order_.push_back(key);
  return ed;
}

cplx GibbsState::expect(const LocalOperator& q) const {
  return expect_on_window(q, choose_window(q.support()));
}

cplx GibbsState::expect_on_window(const LocalOperator& q,
                                  const Interval& window) const {
  if (!window.contains(q.support()))
    throw SupportError("expect_on_window: support outside window");
  return window_ed(window)->expect_product({&q});
}

cplx GibbsState::expect_product_on_window(const std::vector<LocalOperator>& ops,
                                          const Interval& window) const {
  std::vector<const LocalOperator*> ptrs;
  for (const auto& op : ops) {
    if (!window.contains(op.support()))
      throw SupportError("expect_product_on_window: support outside window");
    ptrs.push_back(&op);
  }
  return window_ed(window)->expect_product(ptrs);
}

cplx GibbsState::expect_pair(const LocalOperator& a, const LocalOperator& b,
                             int k) const {
  LocalOperator ta = translate(a, k);
  Interval joined = ta.support().join(b.support());
  return expect_product_on_window({ta, b}, choose_window(joined));
}

MatrixXcd GibbsState::window_density(const Interval& window) const {
  Interval w = choose_window(window);
  if (pow_dim(psi_.site_dim(), w.length()) > policy_.dense_dim_cap)
    throw WindowCapError("window_density: dense window " + w.str() +
                         " exceeds the dense cap");
  MatrixXcd rho = window_ed(w)->thermal_density();
  LocalOperator rho_op(w, std::move(rho), psi_.site_dim());
  LocalOperator reduced = partial_trace_to(rho_op, window);
  // partial_trace_to normalizes by the traced-out dimension; undo that to
  // keep the reduced density at unit trace.
  const double scale = static_cast<double>(
      pow_dim(psi_.site_dim(), w.length() - window.length()));
  return reduced.matrix() * scale;
}

std::optional<DecayCertificate> GibbsState::mixing_certificate() const {
  {
    std::lock_guard lock(mu_);
    if (certificate_) return *certificate_;
  }
  std::optional<DecayCertificate> cert;
  if (psi_.site_dim() == 2 && policy_.adaptive) {
    LocalOperator z(Interval{0, 0}, pauli::sz());
    LocalOperator x(Interval{0, 0}, pauli::sx());
    std::vector<int> seps = {1, 2, 3, 4, 5, 6};
    TwoPointTable tz = two_point_decay(*this, z, z, seps);
    TwoPointTable tx = two_point_decay(*this, x, x, seps);
    std::vector<double> xs, ys;
    double peak = 0.0;
    for (std::size_t i = 0; i < seps.size(); ++i) {
      double v = std::max(tz.values[i], tx.values[i]);
      peak = std::max(peak, v);
      xs.push_back(seps[i]);
      ys.push_back(v);
    }
    if (peak < 1e-13) {
      cert = DecayCertificate{0.0, std::numeric_limits<double>::infinity()};
    } else {
      LinearFit fit = log_linear_fit(xs, ys);
      if (fit.points >= 4 && fit.slope < -1e-6 && fit.r2 > 0.9) {
        // Safety factor over the fitted prefactor: the fit is empirical.
        cert = DecayCertificate{10.0 * std::exp(fit.intercept), -fit.slope};
      }
    }
  }
  std::lock_guard lock(mu_);
  certificate_ = cert;
  return cert;
}

GibbsState::Extrapolated GibbsState::thermodynamic_expect(
    const LocalOperator& q, double tol) const {
  if (tol <= 0) throw std::invalid_argument("thermodynamic_expect: tol <= 0");
  Extrapolated out;
  Interval base = q.support();
  cplx prev = expect_on_window(q, base);
  std::vector<double> xs;
  for (int buffer = 1;; ++buffer) {
    Interval window = base.grown(buffer);
    if (pow_dim(psi_.site_dim(), window.length()) > policy_.max_window_dim)
      throw WindowCapError(
          "thermodynamic_expect: window cap hit before tolerance");
    cplx cur = expect_on_window(q, window);
    double inc = std::abs(cur - prev);
    out.increments.push_back(inc);
    xs.push_back(buffer);
    if (inc < tol) {
      double extrapolated = 0.0;
      const auto n = out.increments.size();
      if (n >= 2 && out.increments[n - 2] > 0) {
        double r = inc / out.increments[n - 2];
        if (r < 1.0) extrapolated = inc * r / (1.0 - r);
      }
      out.value = cur;
      out.error_bar = inc + extrapolated;
      out.increment_fit = log_linear_fit(xs, out.increments);
      return out;
    }
    prev = cur;
  }
}

double GibbsState::kms_residual(const LocalOperator& q1,
                                const LocalOperator& q2,
                                const Interval& window) const {
  auto eig = HamiltonianCache::instance().get(psi_, window);
  const VectorXd& lam = eig->eigenvalues;
  const double lo = lam.minCoeff();
  const double spread = lam.maxCoeff() - lo;
  if (beta_ * spread > 700.0)
    throw InvariantViolationError(
        "kms_residual: analytic continuation factor overflows");
  // Work in the energy eigenbasis so the Boltzmann weight and the
  // imaginary-time factor e^{-beta(lambda_b - lambda_a)} stay representable.
  const MatrixXcd& v = eig->eigenvectors;
  MatrixXcd a = v.adjoint() * embed(q1, window).matrix() * v;
  MatrixXcd b = v.adjoint() * embed(q2, window).matrix() * v;
  VectorXd w = (-beta_ * (lam.array() - lo)).exp();
  const double z = w.sum();
  cplx lhs = 0.0, rhs = 0.0;
  const auto n = lam.size();
  for (Eigen::Index ia = 0; ia < n; ++ia) {
    for (Eigen::Index ib = 0; ib < n; ++ib) {
      const cplx prod = a(ia, ib) * b(ib, ia);
      lhs += w[ia] * std::exp(-beta_ * (lam[ib] - lam[ia])) * prod;
      rhs += w[ib] * prod;
    }
  }
  return std::abs(lhs - rhs) / z;
}

}  // namespace fluctlab
