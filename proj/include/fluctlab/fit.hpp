#pragma once

#include <cmath>
#include <vector>

namespace fluctlab {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};

inline LinearFit linear_fit(const std::vector<double>& x,
                            const std::vector<double>& y) {
  LinearFit f;
  const int n = static_cast<int>(x.size());
  f.points = n;
  if (n < 2) return f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0) return f;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_tot = syy - sy * sy / n;
  double ss_res = 0;
  for (int i = 0; i < n; ++i) {
    double r = y[i] - (f.slope * x[i] + f.intercept);
    ss_res += r * r;
  }
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

/// Fit log|y| ~ intercept + slope * x, dropping entries below `floor`.
inline LinearFit log_linear_fit(const std::vector<double>& x,
                                const std::vector<double>& y,
                                double floor = 1e-14) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(y[i]) > floor) {
      xs.push_back(x[i]);
      ys.push_back(std::log(std::abs(y[i])));
    }
  }
  return linear_fit(xs, ys);
}

}  // namespace fluctlab
