#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace locdim {

// Logistic squashing function and the constants the constructive builders need.
// Derivatives are in closed form in terms of s = sigma(x).
enum class ActivationKind { logistic };

struct Activation {
  ActivationKind kind = ActivationKind::logistic;
  // Evaluation points where the relevant derivative is nonzero.
  double t_id = 0.0;     // sigma'(t_id) != 0
  double t_sq = 1.0;     // sigma''(t_sq) != 0
  double t_sigma = 1.0;  // used by the product gadget

  Activation() = default;
  Activation(double tid, double tsq) : t_id(tid), t_sq(tsq), t_sigma(tsq) {
    if (std::abs(d1(t_id)) <= 1e-12) throw std::invalid_argument("sigma'(t_id) vanishes");
    if (std::abs(d2(t_sq)) <= 1e-12) throw std::invalid_argument("sigma''(t_sq) vanishes");
  }

  static double value(double x) { return 1.0 / (1.0 + std::exp(-x)); }

  static double d1(double x) {
    double s = value(x);
    return s * (1.0 - s);
  }
  static double d2(double x) {
    double s = value(x);
    return s * (1.0 - s) * (1.0 - 2.0 * s);
  }
  static double d3(double x) {
    double s = value(x);
    return s * (1.0 - s) * (1.0 - 6.0 * s + 6.0 * s * s);
  }

  // derivative of order k in 0..3
  static double derivative(int k, double x) {
    switch (k) {
      case 0: return value(x);
      case 1: return d1(x);
      case 2: return d2(x);
      case 3: return d3(x);
      default: throw std::invalid_argument("logistic derivative order must be 0..3");
    }
  }

  // sup norms over the real line
  static double sup_d1() { return 0.25; }
  static double sup_d2() { return 1.0 / (6.0 * std::sqrt(3.0)); }
  static double sup_d3() { return 0.125; }

  // max{|s''|, |s'''|, 1} / min{2|s'(t_id)|, |s''(t_sigma)|, 1}, the factor shared
  // by the ReLU, truncation and B-spline error bounds
  double ratio() const {
    double num = std::max({sup_d2(), sup_d3(), 1.0});
    double den = std::min({2.0 * std::abs(d1(t_id)), std::abs(d2(t_sigma)), 1.0});
    return num / den;
  }
};

inline double activation_eval(const Activation&, double x, int order) { return Activation::derivative(order, x); }

// Checks N-admissibility: derivatives 1..N are nonzero at `probe` and the tails
// approach 0 and 1 at rate 1/|y|. Smoothness and boundedness of the derivatives
// hold for the logistic by construction.
inline bool check_admissible(const Activation&, int N, double probe) {
  if (N < 0 || N > 2) return false;
  for (int k = 1; k <= N; ++k)
    if (!(std::abs(Activation::derivative(k, probe)) > 1e-12)) return false;
  for (double y = 1.0; y <= 1e6; y *= 10.0) {
    if (std::abs(Activation::value(y) - 1.0) > 1.0 / y) return false;
    if (std::abs(Activation::value(-y)) > 1.0 / y) return false;
  }
  return true;
}

}  // namespace locdim
