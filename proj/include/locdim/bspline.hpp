#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "json_io.hpp"

namespace locdim {

// Knots t_{-M}, ..., t_{K+M}. Index k maps to values[k + M].
class KnotSequence {
 public:
  KnotSequence() = default;
  KnotSequence(std::vector<double> values, int degree) : values_(std::move(values)), degree_(degree) {
    if (degree_ < 0) throw std::invalid_argument("knot degree must be >= 0");
    if (static_cast<int>(values_.size()) < 2 * degree_ + 1)
      throw std::invalid_argument("need at least 2M+1 knots");
    min_gap_ = std::numeric_limits<double>::infinity();
    for (size_t i = 1; i < values_.size(); ++i) {
      double g = values_[i] - values_[i - 1];
      if (!(g > 0)) throw std::invalid_argument("knots must be strictly increasing");
      min_gap_ = std::min(min_gap_, g);
    }
  }

  // t_k = start + k * gap for k = -M .. K+M
  static KnotSequence uniform(double start, double gap, int K, int M) {
    std::vector<double> v;
    for (int k = -M; k <= K + M; ++k) v.push_back(start + k * gap);
    return KnotSequence(std::move(v), M);
  }

  int degree() const { return degree_; }
  int K() const { return static_cast<int>(values_.size()) - 2 * degree_ - 1; }
  int first_index() const { return -degree_; }
  int last_index() const { return K() + degree_; }
  double min_gap() const { return min_gap_; }
  double t(int k) const {
    if (k < first_index() || k > last_index()) throw std::out_of_range("knot index " + std::to_string(k));
    return values_[static_cast<size_t>(k + degree_)];
  }
  const std::vector<double>& values() const { return values_; }

  // spline indices j with support [t_j, t_{j+l+1}] inside the sequence
  bool valid_index(int j, int l) const { return l >= 0 && j >= first_index() && j + l + 1 <= last_index(); }

 private:
  std::vector<double> values_;
  int degree_ = 0;
  double min_gap_ = 0;
};

namespace detail {

inline double bspline_rec(const KnotSequence& ks, int j, int l, double x) {
  if (l == 0) {
    double a = ks.t(j), b = ks.t(j + 1);
    if (x >= a && x < b) return 1.0;
    // close the very last interval so the splines sum to one on the closed span
    if (x == b && j + 1 == ks.last_index()) return 1.0;
    return 0.0;
  }
  double tj = ks.t(j), tjl1 = ks.t(j + l + 1);
  if (x < tj || x > tjl1) return 0.0;
  double left = (x - tj) / (ks.t(j + l) - tj) * bspline_rec(ks, j, l - 1, x);
  double right = (tjl1 - x) / (tjl1 - ks.t(j + 1)) * bspline_rec(ks, j + 1, l - 1, x);
  return left + right;
}

}  // namespace detail

// B_{j,M}(x) via the Cox-de Boor recursion on half-open intervals.
inline double bspline_eval(const KnotSequence& ks, int j, int M, double x) {
  if (!ks.valid_index(j, M))
    throw std::invalid_argument("spline index " + std::to_string(j) + " out of range for degree " + std::to_string(M));
  return detail::bspline_rec(ks, j, M, x);
}

inline json to_json(const KnotSequence& ks) { return {{"degree", ks.degree()}, {"values", ks.values()}}; }
inline KnotSequence knots_from_json(const json& j) {
  return KnotSequence(j.at("values").get<std::vector<double>>(), j.at("degree").get<int>());
}

}  // namespace locdim
