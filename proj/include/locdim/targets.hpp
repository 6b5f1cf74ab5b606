#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "basis.hpp"

namespace locdim {

// A function that is smooth and depends on few coordinates on each of several
// polytopes, blended across facets by hinge squeezes.
struct LocalDimPiece {
  Polytope region;
  std::vector<int> coords;  // the coordinates f depends on
  std::function<double(std::span<const double>)> f;  // receives x restricted to coords

  double value(std::span<const double> x) const {
    double buf[16];
    if (coords.size() > 16) throw std::invalid_argument("too many piece coordinates");
    for (size_t i = 0; i < coords.size(); ++i) buf[i] = x[coords[i]];
    return f(std::span<const double>(buf, coords.size()));
  }
};

struct LocalDimTarget {
  std::vector<LocalDimPiece> pieces;

  // Blend weight of a piece: product over facets of a ramp from 1 at b - delta to
  // 0 at b + delta. Adjacent pieces sharing a facet get weights summing to one.
  static double blend(const Polytope& P, std::span<const double> x) {
    double w = 1.0;
    for (const auto& h : P.halfspaces) w *= hinge_squeeze(Halfspace{h.a, h.b - h.delta, 2.0 * h.delta}, x);
    return w;
  }

  double operator()(std::span<const double> x) const {
    double s = 0;
    for (const auto& p : pieces) {
      double w = blend(p.region, x);
      if (w != 0.0) s += w * p.value(x);
    }
    return s;
  }

  // Lower and upper envelopes built from the inner and outer polytopes. Each
  // piece contributes the interval between f_k 1_{inner} and f_k 1_{outer}, so
  // pieces with negative values are handled termwise.
  std::pair<double, double> squeeze_bounds(std::span<const double> x) const {
    double lo = 0, hi = 0;
    for (const auto& p : pieces) {
      double f = p.value(x);
      double inner = p.region.contains_inner(x) ? f : 0.0;
      double outer = p.region.contains_outer(x) ? f : 0.0;
      lo += std::min(inner, outer);
      hi += std::max(inner, outer);
    }
    return {lo, hi};
  }
};

// Regression function with its sampling box and the list of regions used for
// noise calibration (a point belongs to the first region containing it).
struct Target {
  std::string name;
  int dim = 1;
  std::vector<double> lower, upper;
  std::function<double(std::span<const double>)> f;
  std::function<int(std::span<const double>)> piece_of;  // -1 when no region contains x
  int piece_count = 1;
  std::shared_ptr<std::atomic<long>> clamp_events = std::make_shared<std::atomic<long>>(0);

  double operator()(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim)
      throw std::invalid_argument(name + " expects dimension " + std::to_string(dim));
    return f(x);
  }
  double operator()(const std::vector<double>& x) const { return (*this)(std::span<const double>(x)); }
};

namespace targets {

inline const double kW1[10] = {0.1, 0.4, 0.3, 0.1, 0.2, 0.3, 0.6, 0.02, 0.7, 0.6};

inline double h12_lhs(std::span<const double> x) {
  double s = 0;
  for (int i = 0; i < 10; ++i) s += kW1[i] * x[i];
  return s;
}
inline bool in_H1(std::span<const double> x) { return h12_lhs(x) <= 1.63; }
inline bool in_H2(std::span<const double> x) { return h12_lhs(x) <= 1.6; }
inline bool in_H3(std::span<const double> x) {
  return 4 * x[0] + 2 * x[1] + x[2] + 4 * x[3] + x[4] + x[5] <= 7.5;
}

inline double m1(std::span<const double> x) {
  if (in_H1(x)) return 10.0 / (1.0 + x[0] * x[0]) + 5.0 * std::sin(x[2] * x[3]) + 2.0 * x[4];
  return std::exp(x[0]) + x[1] * x[1] + std::sin(x[2] * x[3]) - 3.0;
}

inline double m2(std::span<const double> x, std::atomic<long>* clamps) {
  double z = x[0] * x[0] + 2.0 * x[1] + std::sin(6.0 * x[3] * x[3] * x[3]) - 3.0;
  double v = std::numbers::pi / (1.0 + std::exp(z));
  constexpr double lo = 1e-8, hi = std::numbers::pi - 1e-8;
  if (v < lo || v > hi) {
    v = std::clamp(v, lo, hi);
    if (clamps) ++*clamps;
  }
  double c = 1.0 / std::tan(v);
  if (in_H1(x)) return c;
  double rad = x[2] + 0.9 * x[3] + 0.1;
  if (rad < 0) throw std::domain_error("m2: negative square root argument outside the sampling box");
  return c + std::exp(3.0 * x[2] + 2.0 * x[3] - 5.0 * x[0] + std::sqrt(rad));
}

inline double m3(std::span<const double> x) {
  bool h2 = in_H2(x), h3 = in_H3(x);
  double s = 0;
  if (h2 || h3) s += 2.0 * std::log(x[0] * x[1] + 4.0 * x[2] + std::abs(std::tan(x[3])));
  if (!h2 || h3) s += std::pow(x[2], 4) * x[4] * x[4] * x[5] - x[3] * x[6];
  if (!h3) s += std::pow(3.0 * x[7] * x[7] + x[8] + 2.0, 0.1 + 4.0 * x[9] * x[9]);
  return s;
}

// Four squares tiling [-2,2]^2, each with a one-variable smooth function.
inline LocalDimTarget fig2_pieces(double delta = 0.1) {
  auto box = [delta](double x0, double x1, double y0, double y1) {
    Polytope P;
    P.halfspaces.push_back({{-1.0, 0.0}, -x0, delta});
    P.halfspaces.push_back({{1.0, 0.0}, x1, delta});
    P.halfspaces.push_back({{0.0, -1.0}, -y0, delta});
    P.halfspaces.push_back({{0.0, 1.0}, y1, delta});
    return P;
  };
  LocalDimTarget t;
  t.pieces.push_back({box(-2, 0, -2, 0), {0}, [](std::span<const double> v) { return std::sin(4.0 * v[0]); }});
  t.pieces.push_back({box(-2, 0, 0, 2), {1}, [](std::span<const double> v) { return std::exp(v[0]); }});
  t.pieces.push_back({box(0, 2, 0, 2), {1}, [](std::span<const double> v) { return std::cos(4.0 * v[0]); }});
  t.pieces.push_back({box(0, 2, -2, 0), {0}, [](std::span<const double> v) { return std::exp(v[0]); }});
  return t;
}

}  // namespace targets

inline Target make_target(const std::string& name) {
  Target t;
  t.name = name;
  if (name == "m1" || name == "m2" || name == "m3") {
    t.dim = 10;
    t.lower.assign(10, 0.0);
    t.upper.assign(10, 1.0);
    if (name == "m1") {
      t.f = targets::m1;
      t.piece_count = 2;
      t.piece_of = [](std::span<const double> x) { return targets::in_H1(x) ? 0 : 1; };
    } else if (name == "m2") {
      auto counter = t.clamp_events;
      t.f = [counter](std::span<const double> x) { return targets::m2(x, counter.get()); };
      t.piece_count = 2;
      t.piece_of = [](std::span<const double> x) { return targets::in_H1(x) ? 0 : 1; };
    } else {
      t.f = targets::m3;
      t.piece_count = 3;
      t.piece_of = [](std::span<const double> x) {
        bool h2 = targets::in_H2(x), h3 = targets::in_H3(x);
        if (h2 || h3) return 0;
        if (!h2 || h3) return 1;
        return 2;  // H3^C is already covered by the first two regions
      };
    }
    return t;
  }
  if (name == "fig2") {
    auto ld = std::make_shared<LocalDimTarget>(targets::fig2_pieces());
    t.dim = 2;
    t.lower.assign(2, -2.0);
    t.upper.assign(2, 2.0);
    t.f = [ld](std::span<const double> x) { return (*ld)(x); };
    t.piece_count = 4;
    t.piece_of = [ld](std::span<const double> x) {
      for (size_t k = 0; k < ld->pieces.size(); ++k)
        if (ld->pieces[k].region.contains(x)) return static_cast<int>(k);
      return -1;
    };
    return t;
  }
  throw std::invalid_argument("unknown target '" + name + "'");
}

inline double target_eval(const std::string& name, std::span<const double> x) { return make_target(name)(x); }

// Constant function, handy for checks of the calibration and error code.
inline Target constant_target(int dim, double c) {
  Target t;
  t.name = "constant";
  t.dim = dim;
  t.lower.assign(dim, 0.0);
  t.upper.assign(dim, 1.0);
  t.f = [c](std::span<const double>) { return c; };
  t.piece_of = [](std::span<const double>) { return 0; };
  return t;
}

}  // namespace locdim
