#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace locdim {

// Sample quantile with linear interpolation between order statistics
// (h = (n - 1) p, the common default of R and NumPy).
inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(p >= 0 && p <= 1)) throw std::invalid_argument("quantile level must be in [0, 1]");
  std::sort(v.begin(), v.end());
  double h = (v.size() - 1) * p;
  size_t lo = static_cast<size_t>(std::floor(h));
  size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

inline double median(const std::vector<double>& v) { return quantile(v, 0.5); }
inline double iqr(const std::vector<double>& v) { return quantile(v, 0.75) - quantile(v, 0.25); }

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean of an empty sample");
  double s = 0;
  for (double x : v) s += x;
  return s / double(v.size());
}

}  // namespace locdim
