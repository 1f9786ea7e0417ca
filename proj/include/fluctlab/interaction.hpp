#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fluctlab/local_operator.hpp"

namespace fluctlab {

/// A finite-range translation-invariant interaction: self-adjoint terms
/// anchored at site 0, translated on demand over any window.
class Interaction {
 public:
  Interaction(std::vector<LocalOperator> terms, int site_dim = 2);

  const std::vector<LocalOperator>& terms() const { return terms_; }
  int range() const { return range_; }
  int site_dim() const { return site_dim_; }
  bool empty() const { return terms_.empty(); }

  /// True when every term commutes with the global on-site flip
  /// sigma_x^{tensor n}; enables parity-sector diagonalization.
  bool spin_flip_symmetric() const;

  /// Stable content hash (used as eigendecomposition cache key).
  std::uint64_t hash() const;

  static Interaction transverse_field_ising(double coupling = 1.0,
                                            double field = 1.0);
  static Interaction xy(double coupling = 1.0);
  static Interaction heisenberg(double coupling = 1.0);
  static Interaction by_name(const std::string& preset, double coupling,
                             double field);

 private:
  std::vector<LocalOperator> terms_;  // anchored at lo = 0
  int site_dim_;
  int range_;
};

}  // namespace fluctlab
