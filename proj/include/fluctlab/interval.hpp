#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fluctlab {

/// A nonempty interval of lattice sites [lo, hi].
struct Interval {
  int lo = 0;
  int hi = 0;

  Interval() = default;
  Interval(int lo_, int hi_) : lo(lo_), hi(hi_) {
    if (lo > hi) throw std::invalid_argument("Interval: lo > hi");
  }

  int length() const { return hi - lo + 1; }

  bool contains(const Interval& other) const {
    return lo <= other.lo && other.hi <= hi;
  }
  bool contains(int site) const { return lo <= site && site <= hi; }

  bool disjoint(const Interval& other) const {
    return hi < other.lo || other.hi < lo;
  }

  Interval join(const Interval& other) const {
    return Interval(std::min(lo, other.lo), std::max(hi, other.hi));
  }

  Interval shifted(int j) const { return Interval(lo + j, hi + j); }

  Interval grown(int margin) const { return Interval(lo - margin, hi + margin); }

  bool operator==(const Interval& other) const = default;

  std::string str() const {
    return "[" + std::to_string(lo) + "," + std::to_string(hi) + "]";
  }
};

/// d^n as a dimension, guarded against overflow past 2^62.
inline std::int64_t pow_dim(int d, int n) {
  std::int64_t r = 1;
  for (int i = 0; i < n; ++i) {
    if (r > (std::int64_t{1} << 62) / d)
      throw std::overflow_error("pow_dim: dimension overflow");
    r *= d;
  }
  return r;
}

}  // namespace fluctlab
