#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "../bspline.hpp"
#include "../json_io.hpp"
#include "builders.hpp"

namespace locdim::constructive {

// Measured sup-gap of a gadget against its target function next to the proved bound.
struct LemmaCheck {
  std::string lemma;
  double R = 0, a = 1;
  int points = 0;
  double measured = 0;
  double bound = 0;
  double slack = 0;
  bool precondition_met = true;
  int hidden_layers = 0, width = 0;
  bool within() const { return measured <= bound + slack; }
};

inline json to_json(const LemmaCheck& c) {
  return {{"lemma", c.lemma},     {"R", c.R},         {"a", c.a},
          {"points", c.points},   {"measured", c.measured}, {"bound", c.bound},
          {"fp_slack", c.slack},  {"within", c.within()},   {"precondition_met", c.precondition_met},
          {"hidden_layers", c.hidden_layers}, {"width", c.width}};
}

inline std::vector<double> uniform_grid(double lo, double hi, int points) {
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = points == 1 ? lo : lo + (hi - lo) * i / (points - 1);
  return g;
}

namespace detail {

inline double relu_value(double x) { return x > 0 ? x : 0.0; }

inline LemmaCheck check_1d(const std::string& name, const BoundedApproxNet& b, const std::function<double(double)>& f,
                           double value_scale, int points) {
  LemmaCheck c;
  c.lemma = name;
  c.R = b.R;
  c.a = b.a;
  c.points = points;
  c.bound = b.theoretical_bound;
  c.slack = fp_slack(b.scales.empty() ? std::vector<double>{b.R} : b.scales, value_scale);
  c.precondition_met = b.precondition_met;
  c.hidden_layers = b.net.hidden_layers();
  c.width = b.net.width();
  for (double x : uniform_grid(-b.a, b.a, points)) c.measured = std::max(c.measured, std::abs(b(std::vector<double>{x}) - f(x)));
  return c;
}

}  // namespace detail

// identity, square, mult, relu or trunc on `points` inputs in [-a, a] (mult pairs
// the grid with a golden-ratio sequence in the second coordinate).
inline LemmaCheck verify_lemma(const std::string& lemma, double R, double a = 1.0, int points = 2001) {
  if (points < 2) throw std::invalid_argument("need at least two grid points");
  if (lemma == "identity") return detail::check_1d(lemma, build_identity(R, a), [](double x) { return x; }, a, points);
  if (lemma == "square") return detail::check_1d(lemma, build_square(R, a), [](double x) { return x * x; }, a * a, points);
  if (lemma == "relu") return detail::check_1d(lemma, build_relu(R, a), detail::relu_value, a, points);
  if (lemma == "trunc")
    return detail::check_1d(lemma, build_trunc({1.0}, {0.2}, R, a, 1.0), [](double x) { return detail::relu_value(x - 0.2); },
                            a, points);
  if (lemma == "mult") {
    BoundedApproxNet b = build_mult(R, a);
    LemmaCheck c;
    c.lemma = lemma;
    c.R = R;
    c.a = a;
    c.points = points;
    c.bound = b.theoretical_bound;
    c.slack = fp_slack(b.scales.empty() ? std::vector<double>{R} : b.scales, a * a);
    c.hidden_layers = b.net.hidden_layers();
    c.width = b.net.width();
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto xs = uniform_grid(-a, a, points);
    for (int i = 0; i < points; ++i) {
      double frac = std::fmod(i * phi, 1.0);
      double y = -a + 2.0 * a * frac;
      if (i == 0) y = a;  // include a corner
      c.measured = std::max(c.measured, std::abs(b(std::vector<double>{xs[i], y}) - xs[i] * y));
    }
    return c;
  }
  throw std::invalid_argument("unknown lemma '" + lemma + "' (identity, square, mult, relu, trunc)");
}

// B_{j,M} network on uniform knots t_k = start + k * gap against Cox-de Boor.
inline LemmaCheck verify_bspline(int M, int j, const KnotSequence& ks, double R, double a, double n, int points = 2001,
                                 Precondition pre = Precondition::relax) {
  BoundedApproxNet b = build_bspline_net(j, M, ks, R, a, n, pre);
  LemmaCheck c = detail::check_1d("bspline", b, [&](double x) { return bspline_eval(ks, j, M, x); }, 1.0, points);
  // add the knots themselves, where the spline has its kinks
  for (double t : ks.values())
    if (std::abs(t) <= a) c.measured = std::max(c.measured, std::abs(b(std::vector<double>{t}) - bspline_eval(ks, j, M, t)));
  return c;
}

}  // namespace locdim::constructive
