#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "../basis.hpp"
#include "../bspline.hpp"
#include "assembler.hpp"

namespace locdim::constructive {

// A constructed network together with the proved sup-norm error bound on [-a,a]^d.
struct BoundedApproxNet {
  DenseNetwork net;
  double a = 1;
  double R = 1;
  double theoretical_bound = 0;
  double max_weight = 0;    // realized max |weight|
  double weight_limit = 0;  // c R^2 from the constants table, 0 when the lemma states no such form
  std::vector<double> scales;  // every R used inside (for the rounding allowance)
  bool precondition_met = true;
  std::string kind;

  double operator()(std::span<const double> x) const { return net(x); }
  double operator()(const std::vector<double>& x) const { return net(x); }
};

enum class Precondition { enforce, relax };

// Allowance for rounding in the R^2-scaled differences of sigmoid values.
inline double fp_slack(const std::vector<double>& Rs, double value_scale) {
  double m = 0;
  for (double R : Rs) m = std::max(m, R * R);
  return 8.0 * m * DBL_EPSILON * value_scale;
}
inline double fp_slack(double R, double value_scale) { return fp_slack(std::vector<double>{R}, value_scale); }

// Constants c with max |weight| <= c R^2, read off the gadget formulas.
struct WeightConstants {
  double id, sq, mult, relu;
  explicit WeightConstants(const Activation& act) {
    double sid = Activation::value(act.t_id), did = std::abs(Activation::d1(act.t_id));
    double dsq = std::abs(Activation::d2(act.t_sq)), dsg = std::abs(Activation::d2(act.t_sigma));
    id = (1.0 + sid) / did + std::abs(act.t_id) + 1.0;
    sq = (2.0 + Activation::value(act.t_sq)) / dsq + std::abs(act.t_sq) + 2.0;
    mult = 1.0 / (2.0 * dsg) + std::abs(act.t_sigma) + 2.0;
    relu = std::max(mult, 4.0 * (1.0 + sid) / did + std::abs(act.t_sigma) + 2.0);
  }
};

namespace detail {

inline void require_R(double R) {
  if (!(R >= 1.0)) throw std::invalid_argument("scale R must satisfy R >= 1");
}

inline BoundedApproxNet finish(NetAssembler& as, const Signal& out, int width, double R, double a, double bound,
                               double weight_limit, std::string kind) {
  BoundedApproxNet b;
  b.net = as.build(out, width);
  b.R = R;
  b.a = a;
  b.theoretical_bound = bound;
  b.max_weight = b.net.max_abs_weight();
  b.weight_limit = weight_limit;
  b.scales = {R};
  b.kind = std::move(kind);
  if (weight_limit > 0 && b.max_weight > weight_limit)
    throw std::logic_error(b.kind + ": realized weight " + std::to_string(b.max_weight) + " exceeds c R^2");
  return b;
}

}  // namespace detail

inline double identity_bound(double R, double a, const Activation& act = {}) {
  return Activation::sup_d2() * a * a / (2.0 * std::abs(Activation::d1(act.t_id))) / R;
}
inline double square_bound(double R, double a, const Activation& act = {}) {
  return 5.0 * Activation::sup_d3() * a * a * a / (3.0 * std::abs(Activation::d2(act.t_sq))) / R;
}
inline double mult_bound(double R, double a, const Activation& act = {}) {
  return 20.0 * Activation::sup_d3() * a * a * a / (3.0 * std::abs(Activation::d2(act.t_sigma))) / R;
}
inline double relu_bound(double R, double a, const Activation& act = {}) { return 56.0 * act.ratio() * a * a * a / R; }
inline double trunc_bound(double R, double a, double b, int d, const Activation& act = {}) {
  double dd = d;
  return 448.0 * act.ratio() * dd * dd * dd * a * a * a * b * b * b / R;
}
inline double bspline_bound(double R, double a, int M, double n, const Activation& act = {}) {
  return std::pow(12.0 * M, M - 1) * std::pow(a * n, M + 2) * 4.0 * 448.0 * act.ratio() / R;
}

// Smallest R allowed for the B-spline network. For M = 1 only the first term
// applies (the second has a zero base raised to a negative power).
inline double bspline_min_R(double a, int M, double n, const Activation& act = {}) {
  double an = a * n;
  double first = M * 9.0 * Activation::sup_d2() * an * an / (2.0 * std::abs(Activation::d1(act.t_id)));
  double second = 0;
  if (M >= 2) second = std::pow(12.0 * (M - 1), M - 2) * std::pow(an, M + 1) * 4.0 * 448.0 * act.ratio();
  return std::max({first, second, 1.0});
}

// Single-layer network computing approximately x on [-a, a].
inline BoundedApproxNet build_identity(double R, double a, const Activation& act = {}) {
  detail::require_R(R);
  if (!(a > 0)) throw std::invalid_argument("domain half-width a must be positive");
  NetAssembler as(1);
  Signal out = id_step(as, Signal::input(0), R, act);
  return detail::finish(as, out, 1, R, a, identity_bound(R, a, act), WeightConstants(act).id * R * R, "identity");
}

inline BoundedApproxNet build_square(double R, double a, const Activation& act = {}) {
  detail::require_R(R);
  if (!(a > 0)) throw std::invalid_argument("domain half-width a must be positive");
  NetAssembler as(1);
  Signal out = square(as, Signal::input(0), R, act);
  return detail::finish(as, out, 2, R, a, square_bound(R, a, act), WeightConstants(act).sq * R * R, "square");
}

inline BoundedApproxNet build_mult(double R, double a, const Activation& act = {}) {
  detail::require_R(R);
  if (!(a > 0)) throw std::invalid_argument("domain half-width a must be positive");
  NetAssembler as(2);
  Signal out = multiply(as, Signal::input(0), Signal::input(1), R, act);
  return detail::finish(as, out, 4, R, a, mult_bound(R, a, act), WeightConstants(act).mult * R * R, "mult");
}

inline void check_relu_precondition(double R, double a, const Activation& act) {
  if (!(a >= 1.0)) throw std::invalid_argument("relu network needs a >= 1");
  double need = std::max(Activation::sup_d2() * a / (2.0 * std::abs(Activation::d1(act.t_id))), 1.0);
  if (R < need) {
    std::ostringstream os;
    os << "relu network needs R >= max(|s''| a / (2 |s'(t_id)|), 1) = " << need << ", got R = " << R;
    throw std::invalid_argument(os.str());
  }
}

inline BoundedApproxNet build_relu(double R, double a, const Activation& act = {}) {
  detail::require_R(R);
  check_relu_precondition(R, a, act);
  NetAssembler as(1);
  Signal out = relu(as, Signal::input(0), R, act);
  return detail::finish(as, out, 4, R, a, relu_bound(R, a, act), WeightConstants(act).relu * R * R, "relu");
}

// (sum_k alpha_k (x_k - gamma_k))_+ on [-a, a]^d.
inline BoundedApproxNet build_trunc(const std::vector<double>& alpha, const std::vector<double>& gamma, double R,
                                   double a, double b, const Activation& act = {}) {
  detail::require_R(R);
  const int d = static_cast<int>(alpha.size());
  if (d < 1 || gamma.size() != alpha.size()) throw std::invalid_argument("alpha and gamma must have the same positive length");
  if (!(a >= 1.0) || !(b >= 1.0)) throw std::invalid_argument("truncation network needs a, b >= 1");
  double sag = 0;
  for (int k = 0; k < d; ++k) {
    if (std::abs(gamma[k]) > a) throw std::invalid_argument("offset |gamma_k| exceeds a");
    if (std::abs(alpha[k]) > b) throw std::invalid_argument("coefficient |alpha_k| exceeds b");
    sag += alpha[k] * gamma[k];
  }
  double need = std::max(Activation::sup_d2() * d * a * b / std::abs(Activation::d1(act.t_id)), 1.0);
  if (R < need) {
    std::ostringstream os;
    os << "truncation network needs R >= max(|s''| d a b / |s'(t_id)|, 1) = " << need << ", got R = " << R;
    throw std::invalid_argument(os.str());
  }
  NetAssembler as(d);
  Signal v;
  for (int k = 0; k < d; ++k)
    if (alpha[k] != 0.0) v.terms[k] = alpha[k];
  v.constant = -sag;
  Signal out = relu(as, v, R, act);
  double amax = 1.0;
  for (double x : alpha) amax = std::max(amax, std::abs(x));
  amax = std::max(amax, std::abs(sag));
  return detail::finish(as, out, 4, R, a, trunc_bound(R, a, b, d, act), WeightConstants(act).relu * R * R * amax,
                        "trunc");
}

namespace detail {

inline Signal bspline_signal(NetAssembler& as, const Signal& x, int j, int M, const KnotSequence& ks, double R,
                             const Activation& act) {
  if (M == 1) {
    double t0 = ks.t(j), t1 = ks.t(j + 1), t2 = ks.t(j + 2);
    auto lin = [&](double shift, double gap) { return x.shifted(-shift).scaled(1.0 / gap); };
    Signal r1 = relu(as, lin(t0, t1 - t0), R, act);
    Signal r2 = relu(as, lin(t1, t1 - t0), R, act);
    Signal r3 = relu(as, lin(t1, t2 - t1), R, act);
    Signal r4 = relu(as, lin(t2, t2 - t1), R, act);
    return r1 - r2 - r3 + r4;
  }
  int l = M - 1;
  Signal left = bspline_signal(as, x, j, l, ks, R, act);
  Signal right = bspline_signal(as, x, j + 1, l, ks, R, act);
  double tj = ks.t(j), tjl1 = ks.t(j + l + 1), tj1 = ks.t(j + 1), tjl2 = ks.t(j + l + 2);
  Signal u = id_chain(as, x.shifted(-tj).scaled(1.0 / (tjl1 - tj)), l + 1, R, act);
  Signal w = id_chain(as, x.scaled(-1.0).shifted(tjl2).scaled(1.0 / (tjl2 - tj1)), l + 1, R, act);
  return multiply(as, u, left, R, act) + multiply(as, w, right, R, act);
}

}  // namespace detail

inline int bspline_net_width(int M) {
  int w = (1 << (M - 1)) * 16;
  for (int k = 2; k <= M; ++k) w += 1 << (M - k + 1);
  return w;
}

// Network for B_{j,M} built from relu leaves for degree 1 and the degree
// recursion via multiply and identity chains. input_dim > 1 reads `coordinate`.
inline BoundedApproxNet build_bspline_net(int j, int M, const KnotSequence& ks, double R, double a, double n,
                                          Precondition pre = Precondition::enforce, const Activation& act = {},
                                          int input_dim = 1, int coordinate = 0) {
  detail::require_R(R);
  if (M < 1) throw std::invalid_argument("B-spline network needs degree M >= 1");
  if (!(a >= 1.0)) throw std::invalid_argument("B-spline network needs a >= 1");
  if (!ks.valid_index(j, M)) throw std::invalid_argument("spline index out of range for the knot sequence");
  for (double t : ks.values())
    if (std::abs(t) > a * (1 + 1e-12)) throw std::invalid_argument("knots must lie in [-a, a]");
  if (ks.min_gap() < (1.0 / n) * (1 - 1e-12)) throw std::invalid_argument("knot gaps must be at least 1/n");
  if (coordinate < 0 || coordinate >= input_dim) throw std::invalid_argument("coordinate out of range");
  double need = bspline_min_R(a, M, n, act);
  bool met = R >= need;
  if (!met && pre == Precondition::enforce) {
    std::ostringstream os;
    os << "B-spline network needs R >= " << need << " (both lower bounds), got R = " << R;
    throw std::invalid_argument(os.str());
  }
  NetAssembler as(input_dim);
  Signal out = detail::bspline_signal(as, Signal::input(coordinate), j, M, ks, R, act);
  // first-layer slopes scale with R n and offsets with R a n
  double limit = WeightConstants(act).relu * R * R * 2.0 * (1.0 + a) * n;
  auto b = detail::finish(as, out, bspline_net_width(M), R, a, bspline_bound(R, a, M, n, act), limit, "bspline");
  b.precondition_met = met;
  return b;
}

// Factor of a product network with its accuracy eps and sup bound beta on [-2a, 2a]^d.
struct ProductFactor {
  BoundedApproxNet approx;
  double eps = 0;
  double beta = 1;
};

struct ProductScales {
  double R_id = 1, R_mult = 1;
  double R_id_formula = 1, R_mult_formula = 1;
  double eta = 0;  // glue error in the units of the factor accuracies
};

inline ProductScales product_scales(const std::vector<ProductFactor>& factors, int d, double n, double C, double a,
                                    double R_cap, const Activation& act = {}) {
  const int K = static_cast<int>(factors.size());
  double prod_beta = 1;
  int sumL = 0;
  for (const auto& f : factors) {
    prod_beta *= f.beta;
    sumL += f.approx.net.hidden_layers();
  }
  double K2K = K * std::pow(2.0, K);
  double A = std::max(a, K2K * prod_beta);
  double depth_term = 4.0 * d * C * (sumL + K - 1) * n * n * n * K2K * prod_beta;
  double cid = 2.0 * Activation::sup_d2() * A * A / std::abs(Activation::d1(act.t_id));
  double cmult = 160.0 * Activation::sup_d3() * A * A * A / (3.0 * std::abs(Activation::d2(act.t_sigma)));
  ProductScales s;
  s.R_id_formula = cid * depth_term;
  s.R_mult_formula = cmult * depth_term;
  s.R_id = std::max(1.0, std::min(s.R_id_formula, R_cap));
  s.R_mult = std::max(1.0, std::min(s.R_mult_formula, R_cap));
  double e = std::max(cid / s.R_id, cmult / s.R_mult);
  s.eta = e * 4.0 * d * C * (sumL + K - 1);
  return s;
}

// K 2^K (prod beta) max{eps_1..eps_K, eta}; equals the lemma's
// max{K 2^K (prod beta) max eps, 1/n^3} when the scales reach their formulas.
inline double product_bound(const std::vector<ProductFactor>& factors, double eta) {
  const int K = static_cast<int>(factors.size());
  double prod_beta = 1, me = eta;
  for (const auto& f : factors) {
    prod_beta *= f.beta;
    me = std::max(me, f.eps);
  }
  return K * std::pow(2.0, K) * prod_beta * me;
}

// Multiplies K factor networks (all with input dimension d) in one network of
// depth K-1+sum L_k and width r+d+5: slots 0..d-1 pass the input on, slots
// d..d+r-1 hold the factor networks one after another, slots d+r..d+r+3 hold
// the multiplications and slot d+r+4 carries the running product.
inline BoundedApproxNet build_product_net(const std::vector<ProductFactor>& factors, double n, double C, double a,
                                          double R_cap = 1e5, const Activation& act = {}) {
  const int K = static_cast<int>(factors.size());
  if (K < 1) throw std::invalid_argument("product needs at least one factor");
  if (!(C >= 1.0)) throw std::invalid_argument("Lipschitz constant C must be >= 1");
  const int d = factors[0].approx.net.input_dim();
  int r = 0;
  for (const auto& f : factors) {
    if (f.approx.net.input_dim() != d) throw std::invalid_argument("factors must share the input dimension");
    if (!(f.beta >= 1.0)) throw std::invalid_argument("factor bound beta must be >= 1");
    if (!(f.eps >= 0)) throw std::invalid_argument("factor accuracy must be nonnegative");
    r = std::max(r, f.approx.net.width());
  }
  ProductScales sc = product_scales(factors, d, n, C, a, R_cap, act);
  const int lane_factor = d, lane_mult = d + r, lane_carry = d + r + 4;

  NetAssembler as(d);
  std::vector<Signal> x(d);
  for (int i = 0; i < d; ++i) x[i] = Signal::input(i);

  Signal g = embed(as, factors[0].approx.net, x, lane_factor);
  for (int k = 1; k < K; ++k) {
    // move the input forward to the layer holding g
    for (int i = 0; i < d; ++i) x[i] = id_chain(as, x[i], g.layer - x[i].layer, sc.R_id, act, i);
    Signal fk = embed(as, factors[k].approx.net, x, lane_factor);
    Signal carried = id_chain(as, g, fk.layer - g.layer, sc.R_id, act, lane_carry);
    g = multiply(as, carried, fk, sc.R_mult, act, lane_mult);
  }
  double eta = K > 1 ? sc.eta : 0.0;
  double R = K > 1 ? std::max(sc.R_id, sc.R_mult) : factors[0].approx.R;
  auto b = detail::finish(as, g, r + d + 5, R, a, product_bound(factors, eta), 0, "product");
  b.scales.clear();
  if (K > 1) b.scales = {sc.R_id, sc.R_mult};
  for (const auto& f : factors)
    b.scales.insert(b.scales.end(), f.approx.scales.begin(), f.approx.scales.end());
  for (const auto& f : factors) b.precondition_met = b.precondition_met && f.approx.precondition_met;
  if (K > 1) b.precondition_met = b.precondition_met && sc.R_id >= sc.R_id_formula && sc.R_mult >= sc.R_mult_formula;
  return b;
}

// Same network with d inputs, reading only `coordinate`.
inline DenseNetwork lift_to_coordinate(const DenseNetwork& net, int d, int coordinate) {
  if (net.input_dim() != 1) throw std::invalid_argument("only one-input networks can be lifted");
  if (coordinate < 0 || coordinate >= d) throw std::invalid_argument("coordinate out of range");
  auto layers = net.layers();
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(layers[0].W.rows(), d);
  W.col(coordinate) = layers[0].W.col(0);
  layers[0].W = W;
  return DenseNetwork(std::move(layers), net.weight_bound());
}

struct BasisNetInfo {
  double R_B_formula = 0, R_trunc_formula = 0;
  double R_B = 0, R_trunc = 0;
  double C = 1;
};

// Network for one generalized basis function: B-spline factors and hinge
// factors multiplied by build_product_net. Scales follow the formulas and are
// capped at R_cap; the bound reported is the product bound at the scales used.
inline BoundedApproxNet build_basis_net(const GeneralizedBasisFunction& bf, double n, double a, double R_cap = 1e5,
                                        const Activation& act = {}, BasisNetInfo* info = nullptr) {
  bf.validate();
  if (!(a >= 1.0)) throw std::invalid_argument("basis network needs a >= 1");
  const int d = bf.dim;
  const int J = static_cast<int>(bf.splines.size());
  const int K1 = static_cast<int>(bf.hinges.size());
  if (J + K1 == 0) throw std::invalid_argument("basis function has no factors");
  int M = J ? bf.splines[0].knots.degree() : 0;
  for (const auto& s : bf.splines)
    if (s.knots.degree() != M) throw std::invalid_argument("all spline factors must share the degree");
  double amax = 1.0, amax_raw = 0.0;
  for (const auto& h : bf.hinges)
    for (double v : h.alpha) {
      amax = std::max(amax, std::abs(v));
      amax_raw = std::max(amax_raw, std::abs(v));
    }
  for (const auto& h : bf.hinges)
    for (double g : h.gamma)
      if (std::abs(g) > a * (1 + 1e-12)) throw std::invalid_argument("hinge offsets must lie in [-a, a]");
  for (const auto& s : bf.splines)
    for (double t : s.knots.values())
      if (std::abs(t) > a * (1 + 1e-12)) throw std::invalid_argument("knots must lie in [-a, a]");

  const double ratio = act.ratio();
  const double hinge_beta = 3.0 * d * amax * a;
  const double shared = (J + K1) * std::pow(2.0, J + K1) * std::pow(hinge_beta, K1) * n * n * n;
  BasisNetInfo inf;
  inf.C = std::max(d * amax_raw, n);
  if (J) inf.R_B_formula = bspline_bound(1.0, 2.0 * a, M, n, act) * shared;
  if (K1) inf.R_trunc_formula = 448.0 * ratio * std::pow(d, 3) * 8.0 * std::pow(a, 3) * std::pow(amax, 3) * shared;
  inf.R_B = std::max(1.0, std::min(inf.R_B_formula, R_cap));
  inf.R_trunc = std::max(1.0, std::min(inf.R_trunc_formula, R_cap));

  std::vector<ProductFactor> factors;
  for (const auto& s : bf.splines) {
    auto sp = build_bspline_net(s.index, M, s.knots, inf.R_B, 2.0 * a, n, Precondition::relax, act);
    sp.net = lift_to_coordinate(sp.net, d, s.coordinate);
    factors.push_back({sp, sp.theoretical_bound, 1.0});
  }
  for (const auto& h : bf.hinges) {
    auto tr = build_trunc(h.alpha, h.gamma, inf.R_trunc, 2.0 * a, amax, act);
    factors.push_back({tr, tr.theoretical_bound, hinge_beta});
  }
  auto b = build_product_net(factors, n, inf.C, a, R_cap, act);
  b.kind = "basis";
  if (info) *info = inf;
  return b;
}

struct LcbNet {
  SparseAdditiveNetwork net;
  double theoretical_bound = 0;  // I max|w| times the largest basis bound
  std::vector<double> scales;
};

// Linear combination sum_i w_i B_i as a sparse additive network with mu = w.
inline LcbNet build_lcb_net(const std::vector<double>& w, const std::vector<GeneralizedBasisFunction>& bases,
                            double n, double a, double R_cap = 1e5, const Activation& act = {}) {
  if (w.empty()) throw std::invalid_argument("need at least one basis function");
  if (w.size() != bases.size()) throw std::invalid_argument("one weight per basis function");
  std::vector<BoundedApproxNet> nets;
  for (const auto& b : bases) nets.push_back(build_basis_net(b, n, a, R_cap, act));
  const int L = nets[0].net.hidden_layers();
  int r = 0;
  for (const auto& bn : nets) {
    if (bn.net.hidden_layers() != L) throw std::invalid_argument("basis networks differ in depth; use a common structure");
    r = std::max(r, bn.net.width());
  }
  LcbNet out;
  double alpha = 1.0, wmax = 0, bmax = 0;
  std::vector<DenseNetwork> subs;
  for (auto& bn : nets) {
    // pad to the common width with zero neurons
    auto layers = bn.net.layers();
    for (size_t l = 0; l < layers.size(); ++l) {
      Eigen::MatrixXd W = Eigen::MatrixXd::Zero(l + 1 == layers.size() ? 1 : r, l == 0 ? layers[l].W.cols() : r);
      W.topLeftCorner(layers[l].W.rows(), layers[l].W.cols()) = layers[l].W;
      Eigen::VectorXd bb = Eigen::VectorXd::Zero(W.rows());
      bb.head(layers[l].b.size()) = layers[l].b;
      layers[l] = {W, bb};
    }
    subs.emplace_back(std::move(layers), bn.net.weight_bound());
    alpha = std::max(alpha, bn.max_weight);
    bmax = std::max(bmax, bn.theoretical_bound);
    out.scales.insert(out.scales.end(), bn.scales.begin(), bn.scales.end());
  }
  for (double v : w) {
    wmax = std::max(wmax, std::abs(v));
    alpha = std::max(alpha, std::abs(v));
  }
  out.net = SparseAdditiveNetwork(std::move(subs), w, alpha);
  out.theoretical_bound = static_cast<double>(w.size()) * wmax * bmax;
  return out;
}

}  // namespace locdim::constructive
