#include "fluctlab/quasilocal.hpp"

#include <cmath>
#include <limits>

#include "fluctlab/errors.hpp"

namespace fluctlab {

QuasiLocalObservable::QuasiLocalObservable(std::vector<LocalOperator> levels,
                                           double theta, double tail_coeff)
    : levels_(std::move(levels)), theta_(theta), tail_coeff_(tail_coeff) {
  if (levels_.empty())
    throw std::invalid_argument("QuasiLocalObservable: empty ladder");
  if (theta_ <= 0.0 || theta_ >= 1.0)
    throw std::invalid_argument("QuasiLocalObservable: theta outside (0,1)");
  if (tail_coeff_ < 0.0)
    throw std::invalid_argument("QuasiLocalObservable: negative tail");
  for (int n = 0; n < static_cast<int>(levels_.size()); ++n)
    if (!Interval(-n, n).contains(levels_[n].support()))
      throw SupportError("QuasiLocalObservable: level " + std::to_string(n) +
                         " not supported in [-n,n]");
}

QuasiLocalObservable QuasiLocalObservable::from_local(const LocalOperator& top,
                                                      double theta) {
  int w = std::max(std::abs(top.support().lo), std::abs(top.support().hi));
  LocalOperator sym = embed(top, Interval(-w, w));
  std::vector<LocalOperator> levels;
  for (int n = 0; n < w; ++n) levels.push_back(partial_trace_localize(sym, n));
  levels.push_back(sym);
  return QuasiLocalObservable(std::move(levels), theta, 0.0);
}

double QuasiLocalObservable::tail_bound() const {
  return level_tail(top_halfwidth());
}

double QuasiLocalObservable::level_tail(int n) const {
  if (tail_coeff_ == 0.0) return 0.0;
  return tail_coeff_ * std::pow(theta_, std::max(n, top_halfwidth()));
}

bool QuasiLocalObservable::self_adjoint() const {
  for (const auto& l : levels_)
    if (!l.self_adjoint()) return false;
  return true;
}

double local_norm_profile(const QuasiLocalObservable& q, int n) {
  if (n < 0) throw std::invalid_argument("local_norm_profile: n < 0");
  if (n == 0) return q.top().norm() + q.tail_bound();
  const int top = q.top_halfwidth();
  if (n >= top) {
    // The conditional expectation fixes the whole ladder; only the certified
    // remainder survives, and the optimal approximant keeps decaying.
    return 2.0 * q.level_tail(n);
  }
  double strict =
      (q.top() - partial_trace_localize(q.top(), n)).norm();
  return strict + 2.0 * q.tail_bound();
}

double theta_norm(const QuasiLocalObservable& q, double theta) {
  if (theta <= 0.0 || theta >= 1.0)
    throw std::invalid_argument("theta_norm: theta outside (0,1)");
  const int top = q.top_halfwidth();
  double sum = 0.0;
  for (int n = 0; n <= top; ++n)
    sum += local_norm_profile(q, n) * std::pow(theta, -n);
  if (q.tail_coeff() > 0.0) {
    const double ratio = q.theta() / theta;
    if (ratio >= 1.0) return std::numeric_limits<double>::infinity();
    sum += 2.0 * q.tail_coeff() * std::pow(ratio, top + 1) / (1.0 - ratio);
  }
  return sum;
}

namespace {

// Norms of the ladder increments R_0 = Q_0, R_n = Q_n - Q_{n-1}.
std::vector<double> increment_norms(const QuasiLocalObservable& q) {
  std::vector<double> r;
  r.push_back(q.levels()[0].norm());
  for (int n = 1; n <= q.top_halfwidth(); ++n)
    r.push_back((q.levels()[n] - q.levels()[n - 1]).norm());
  return r;
}

}  // namespace

CommutatorSum commutator_sum(const QuasiLocalObservable& q1,
                             const QuasiLocalObservable& q2, int k_max) {
  CommutatorSum out;
  const LocalOperator& t1 = q1.top();
  const LocalOperator& t2 = q2.top();
  for (int k = -k_max; k <= k_max; ++k) {
    LocalOperator shifted = translate(t1, k);
    if (shifted.support().disjoint(t2.support())) continue;
    out.partial_sum += commutator(shifted, t2).norm();
  }

  // Majorant data. Increments beyond the ladder top follow the certified
  // decay; theta_eval must sit strictly above the certificate rate when a
  // nonzero remainder is present.
  double theta_eval = std::max(q1.theta(), q2.theta());
  if (q1.tail_coeff() > 0.0 || q2.tail_coeff() > 0.0)
    theta_eval = 0.5 * (1.0 + theta_eval);
  const double tn1 = theta_norm(q1, theta_eval);
  const double tn2 = theta_norm(q2, theta_eval);
  const double c = (1.0 + 1.0 / theta_eval);
  auto r1 = increment_norms(q1);
  auto r2 = increment_norms(q2);
  auto rnorm = [&](const std::vector<double>& r, const QuasiLocalObservable& q,
                   double tn, int n) {
    if (n < static_cast<int>(r.size())) return r[n];
    return c * std::pow(theta_eval, n) * tn;
  };
  const int l1 = q1.top_halfwidth(), l2 = q2.top_halfwidth();
  const bool has_tail = q1.tail_coeff() > 0.0 || q2.tail_coeff() > 0.0;
  const int n_cap = has_tail ? std::max({l1, l2, k_max}) + 200 : l1;
  const int m_cap = has_tail ? n_cap : l2;
  double tail = 0.0;
  for (int n = 0; n <= n_cap; ++n) {
    for (int m = 0; m <= m_cap; ++m) {
      const bool covered = (n <= l1 && m <= l2 && n + m <= k_max);
      if (covered) continue;
      double term = 2.0 * (2.0 * (n + m) + 1.0) * rnorm(r1, q1, tn1, n) *
                    rnorm(r2, q2, tn2, m);
      tail += term;
    }
  }
  out.tail_bound = tail;
  return out;
}

}  // namespace fluctlab
