#pragma once

#include <optional>
#include <vector>

#include "fluctlab/local_operator.hpp"

namespace fluctlab {

/// A quasi-local observable: a finite ladder of strictly local approximants
/// Q_0, Q_1, ..., Q_L with Q_n supported in [-n,n], plus a certified bound
/// on the discarded remainder ||Q - Q_L|| <= tail_coeff * theta^n for n >= L.
class QuasiLocalObservable {
 public:
  /// Builds the ladder from a strictly local top level via conditional
  /// expectations; tail_coeff = 0 certifies the ladder is exact.
  static QuasiLocalObservable from_local(const LocalOperator& top,
                                         double theta = 0.5);

  /// Explicit ladder with a decay certificate.
  QuasiLocalObservable(std::vector<LocalOperator> levels, double theta,
                       double tail_coeff);

  const std::vector<LocalOperator>& levels() const { return levels_; }
  const LocalOperator& top() const { return levels_.back(); }
  int top_halfwidth() const { return static_cast<int>(levels_.size()) - 1; }
  double theta() const { return theta_; }
  double tail_coeff() const { return tail_coeff_; }

  /// Certified bound on ||Q - Q_L||.
  double tail_bound() const;

  /// Certified bound on ||Q - Q_n|| for any n >= 0.
  double level_tail(int n) const;

  bool self_adjoint() const;

 private:
  std::vector<LocalOperator> levels_;  // levels_[n] supported in [-n,n]
  double theta_;
  double tail_coeff_;
};

/// Computable surrogate for ||Q||^(n): the distance to the conditional
/// expectation onto [-n,n], which upper-bounds the localization infimum and
/// is within a factor 2 of it. n = 0 returns (a bound on) ||Q||.
double local_norm_profile(const QuasiLocalObservable& q, int n);

/// <Q>_theta = sum_n ||Q||^(n) theta^{-n}, with the finite ladder summed
/// exactly and the certified tail added; +infinity when the tail certificate
/// does not cover the requested theta.
double theta_norm(const QuasiLocalObservable& q, double theta);

struct CommutatorSum {
  double partial_sum = 0.0;
  double tail_bound = 0.0;
};

/// sum_{|k|<=k_max} ||[tau_k(q1), q2]|| plus an analytic bound on the
/// uncovered terms from the ladder majorant
/// 2(2(m+n)+1)(1+1/theta)^2 theta^{n+m} <q1> <q2>.
CommutatorSum commutator_sum(const QuasiLocalObservable& q1,
                             const QuasiLocalObservable& q2, int k_max);

}  // namespace fluctlab
