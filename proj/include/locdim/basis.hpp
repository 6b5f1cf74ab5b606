#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "bspline.hpp"
#include "json_io.hpp"

namespace locdim {

struct SplineFactor {
  int coordinate = 0;  // 0-based input coordinate
  int index = 0;       // spline index j
  KnotSequence knots;  // degree of the factor is knots.degree()
};

// (sum_j alpha_j (x_j - gamma_j))_+
struct HingeFactor {
  std::vector<double> alpha;
  std::vector<double> gamma;

  double eval(std::span<const double> x) const {
    if (alpha.size() != x.size() || gamma.size() != x.size())
      throw std::invalid_argument("hinge factor dimension mismatch");
    double s = 0;
    for (size_t j = 0; j < x.size(); ++j) s += alpha[j] * (x[j] - gamma[j]);
    return s > 0 ? s : 0.0;
  }
};

// Product of univariate B-splines in selected coordinates and hinge functions.
struct GeneralizedBasisFunction {
  int dim = 1;
  std::vector<SplineFactor> splines;
  std::vector<HingeFactor> hinges;

  double operator()(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim) throw std::invalid_argument("basis input dimension mismatch");
    double p = 1.0;
    for (const auto& s : splines) p *= bspline_eval(s.knots, s.index, s.knots.degree(), x[s.coordinate]);
    for (const auto& h : hinges) p *= h.eval(x);
    return p;
  }
  double operator()(const std::vector<double>& x) const { return (*this)(std::span<const double>(x)); }

  double max_abs_parameter() const {
    double m = 0;
    for (const auto& s : splines)
      for (double t : s.knots.values()) m = std::max(m, std::abs(t));
    for (const auto& h : hinges) {
      for (double a : h.alpha) m = std::max(m, std::abs(a));
      for (double g : h.gamma) m = std::max(m, std::abs(g));
    }
    return m;
  }

  // parameters must stay below c1 * n^c2
  bool within_parameter_bound(double c1, double c2, double n) const {
    return max_abs_parameter() <= c1 * std::pow(n, c2);
  }

  void validate() const {
    for (const auto& s : splines) {
      if (s.coordinate < 0 || s.coordinate >= dim) throw std::invalid_argument("spline coordinate out of range");
      if (!s.knots.valid_index(s.index, s.knots.degree())) throw std::invalid_argument("spline index out of range");
    }
    for (const auto& h : hinges)
      if (static_cast<int>(h.alpha.size()) != dim || static_cast<int>(h.gamma.size()) != dim)
        throw std::invalid_argument("hinge factor dimension mismatch");
  }
};

inline double basis_eval(const GeneralizedBasisFunction& b, std::span<const double> x) { return b(x); }

struct Halfspace {
  std::vector<double> a;
  double b = 0;
  double delta = 0.1;

  double lhs(std::span<const double> x) const {
    if (a.size() != x.size()) throw std::invalid_argument("halfspace dimension mismatch");
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * x[i];
    return s;
  }
  double norm() const {
    double s = 0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
  }
  void validate() const {
    if (!(delta > 0)) throw std::invalid_argument("halfspace margin must be positive");
    double nrm = norm();
    if (nrm > 1.0 + 1e-12) throw std::invalid_argument("halfspace normal must have norm <= 1");
    if (nrm == 0) throw std::invalid_argument("halfspace normal must be nonzero");
  }
};

// 1 on {a^T x <= b}, 0 on {a^T x >= b + delta}, linear in between.
inline double hinge_squeeze(const Halfspace& h, std::span<const double> x) {
  double v = h.lhs(x);
  double up = (-v + h.b + h.delta) / h.delta;
  double lo = (-v + h.b) / h.delta;
  return (up > 0 ? up : 0.0) - (lo > 0 ? lo : 0.0);
}

struct Polytope {
  std::vector<Halfspace> halfspaces;

  int dim() const { return halfspaces.empty() ? 0 : static_cast<int>(halfspaces[0].a.size()); }
  void validate() const {
    for (const auto& h : halfspaces) {
      h.validate();
      if (static_cast<int>(h.a.size()) != dim()) throw std::invalid_argument("polytope halfspaces differ in dimension");
    }
  }
  bool contains(std::span<const double> x) const {
    for (const auto& h : halfspaces)
      if (h.lhs(x) > h.b) return false;
    return true;
  }
  // P_delta: every facet pulled in by its margin
  bool contains_inner(std::span<const double> x) const {
    for (const auto& h : halfspaces)
      if (h.lhs(x) > h.b - h.delta) return false;
    return true;
  }
  // P^delta: every facet pushed out by its margin
  bool contains_outer(std::span<const double> x) const {
    for (const auto& h : halfspaces)
      if (h.lhs(x) > h.b + h.delta) return false;
    return true;
  }
  double squeeze(std::span<const double> x) const {
    double p = 1.0;
    for (const auto& h : halfspaces) p *= hinge_squeeze(h, x);
    return p;
  }
};

struct SignedExpansion {
  std::vector<GeneralizedBasisFunction> bases;
  std::vector<double> coeffs;

  double operator()(std::span<const double> x) const {
    double s = 0;
    for (size_t i = 0; i < bases.size(); ++i) s += coeffs[i] * bases[i](x);
    return s;
  }
};

// Writes prod_i h_i as a signed sum of 2^K1 products of hinge functions. Each h_i
// is (c_i^T (x - g_i^+))_+ - (c_i^T (x - g_i^-))_+ with c_i = -a_i / delta_i and
// offsets on the normal line: g^+ = (b+delta) a/|a|^2, g^- = b a/|a|^2.
inline SignedExpansion polytope_squeeze_expand(const Polytope& P) {
  const size_t K1 = P.halfspaces.size();
  if (K1 < 1) throw std::invalid_argument("polytope needs at least one halfspace");
  if (K1 > 20) throw std::invalid_argument("refusing to expand more than 20 halfspaces");
  P.validate();
  const int d = P.dim();
  std::vector<HingeFactor> plus(K1), minus(K1);
  for (size_t i = 0; i < K1; ++i) {
    const auto& h = P.halfspaces[i];
    double n2 = h.norm() * h.norm();
    for (int j = 0; j < d; ++j) {
      double c = -h.a[j] / h.delta;
      plus[i].alpha.push_back(c);
      minus[i].alpha.push_back(c);
      plus[i].gamma.push_back((h.b + h.delta) * h.a[j] / n2);
      minus[i].gamma.push_back(h.b * h.a[j] / n2);
    }
  }
  SignedExpansion out;
  for (size_t mask = 0; mask < (size_t{1} << K1); ++mask) {
    GeneralizedBasisFunction b;
    b.dim = d;
    double sign = 1.0;
    for (size_t i = 0; i < K1; ++i) {
      if (mask & (size_t{1} << i)) {
        b.hinges.push_back(minus[i]);
        sign = -sign;
      } else {
        b.hinges.push_back(plus[i]);
      }
    }
    out.bases.push_back(std::move(b));
    out.coeffs.push_back(sign);
  }
  return out;
}

inline json to_json(const GeneralizedBasisFunction& b) {
  json sp = json::array(), hg = json::array();
  for (const auto& s : b.splines)
    sp.push_back({{"coordinate", s.coordinate}, {"index", s.index}, {"knots", to_json(s.knots)}});
  for (const auto& h : b.hinges) hg.push_back({{"alpha", h.alpha}, {"gamma", h.gamma}});
  return {{"dim", b.dim}, {"splines", sp}, {"hinges", hg}};
}

inline GeneralizedBasisFunction basis_from_json(const json& j) {
  GeneralizedBasisFunction b;
  b.dim = j.at("dim").get<int>();
  for (const auto& s : j.value("splines", json::array()))
    b.splines.push_back({s.at("coordinate").get<int>(), s.at("index").get<int>(), knots_from_json(s.at("knots"))});
  for (const auto& h : j.value("hinges", json::array()))
    b.hinges.push_back({h.at("alpha").get<std::vector<double>>(), h.at("gamma").get<std::vector<double>>()});
  b.validate();
  return b;
}

inline json to_json(const Polytope& P) {
  json hs = json::array();
  for (const auto& h : P.halfspaces) hs.push_back({{"a", h.a}, {"b", h.b}, {"delta", h.delta}});
  return {{"halfspaces", hs}};
}

inline Polytope polytope_from_json(const json& j) {
  Polytope P;
  for (const auto& h : j.at("halfspaces"))
    P.halfspaces.push_back({h.at("a").get<std::vector<double>>(), h.at("b").get<double>(), h.at("delta").get<double>()});
  P.validate();
  return P;
}

}  // namespace locdim
