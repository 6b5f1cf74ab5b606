#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "../basis.hpp"
#include "predictor.hpp"

namespace locdim {

// (s (x_j - a))_+
struct MarsHinge {
  int coordinate = 0;
  int sign = 1;
  double knot = 0;
  double eval(std::span<const double> x) const {
    double v = sign * (x[coordinate] - knot);
    return v > 0 ? v : 0.0;
  }
};

// Empty product = intercept.
struct MarsTerm {
  std::vector<MarsHinge> factors;
  double eval(std::span<const double> x) const {
    double p = 1.0;
    for (const auto& h : factors) p *= h.eval(x);
    return p;
  }
  bool uses(int j) const {
    for (const auto& h : factors)
      if (h.coordinate == j) return true;
    return false;
  }
};

class MarsModel : public Predictor {
 public:
  MarsModel() = default;
  MarsModel(int d, std::vector<MarsTerm> terms, Eigen::VectorXd coef, double gcv)
      : d_(d), terms_(std::move(terms)), coef_(std::move(coef)), gcv_(gcv) {}

  std::string name() const override { return "mars"; }
  int dim() const { return d_; }
  const std::vector<MarsTerm>& terms() const { return terms_; }
  const Eigen::VectorXd& coefficients() const { return coef_; }
  double gcv() const { return gcv_; }
  std::vector<std::string> warnings;
  double forward_rss = 0;
  std::vector<double> forward_rss_trace;  // after each forward step, starting with the intercept
  std::vector<double> backward_gcv_trace;

  double predict(std::span<const double> x) const override {
    if (static_cast<int>(x.size()) != d_) throw std::invalid_argument("input dimension mismatch");
    double s = 0;
    for (size_t m = 0; m < terms_.size(); ++m) s += coef_(m) * terms_[m].eval(x);
    return s;
  }

  // Each term as a hinge-only generalized basis function.
  std::vector<GeneralizedBasisFunction> export_basis() const {
    std::vector<GeneralizedBasisFunction> out;
    for (const auto& t : terms_) {
      GeneralizedBasisFunction b;
      b.dim = d_;
      for (const auto& h : t.factors) {
        HingeFactor hf;
        hf.alpha.assign(d_, 0.0);
        hf.gamma.assign(d_, 0.0);
        hf.alpha[h.coordinate] = h.sign;
        hf.gamma[h.coordinate] = h.knot;
        b.hinges.push_back(hf);
      }
      out.push_back(std::move(b));
    }
    return out;
  }

  json to_json() const override {
    json terms = json::array();
    for (const auto& t : terms_) {
      json fs = json::array();
      for (const auto& h : t.factors) fs.push_back({{"coordinate", h.coordinate}, {"sign", h.sign}, {"knot", h.knot}});
      terms.push_back(fs);
    }
    return {{"kind", "mars"}, {"d", d_}, {"terms", terms},
            {"coefficients", std::vector<double>(coef_.data(), coef_.data() + coef_.size())}, {"gcv", gcv_}};
  }

 private:
  int d_ = 1;
  std::vector<MarsTerm> terms_;
  Eigen::VectorXd coef_;
  double gcv_ = 0;
};

struct MarsOptions {
  int max_basis = 21;
  double gcv_penalty = 3.0;
  int max_degree = -1;  // interaction cap, -1 means d
};

namespace detail {

inline Eigen::VectorXd term_column(const MarsTerm& t, const Eigen::MatrixXd& X) {
  Eigen::VectorXd c(X.rows());
  std::vector<double> row(X.cols());
  for (long i = 0; i < X.rows(); ++i) {
    for (long j = 0; j < X.cols(); ++j) row[j] = X(i, j);
    c(i) = t.eval(row);
  }
  return c;
}

inline double lsq_rss(const Eigen::MatrixXd& B, const Eigen::VectorXd& y, Eigen::VectorXd* coef = nullptr) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
  Eigen::VectorXd c = qr.solve(y);
  if (coef) *coef = c;
  return (y - B * c).squaredNorm();
}

inline double mars_gcv(double rss, long n, int m, double penalty) {
  double C = m + penalty * (m - 1);
  double denom = 1.0 - C / double(n);
  if (denom <= 0) return std::numeric_limits<double>::infinity();
  return rss / double(n) / (denom * denom);
}

// c minus its projection onto the orthonormal columns of Q
inline Eigen::VectorXd residualize(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c) {
  if (Q.cols() == 0) return c;
  Eigen::VectorXd r = c - Q * (Q.transpose() * c);
  // one reorthogonalization pass for stability
  return r - Q * (Q.transpose() * r);
}

}  // namespace detail

// Forward/backward stepwise fit of products of single-coordinate hinges with
// knots at observed coordinate values.
inline MarsModel fit_mars(const Dataset& data, const MarsOptions& opt = {}) {
  data.validate();
  if (opt.max_basis < 1) throw std::invalid_argument("max_basis must be >= 1");
  const long n = data.n();
  const int d = data.d();
  const int max_degree = opt.max_degree < 0 ? d : std::min(opt.max_degree, d);
  const double tss = (data.Y.array() - data.Y.mean()).square().sum();
  const double tiny = 1e-12 * std::max(tss, 1e-300);
  std::vector<std::string> warnings;

  std::vector<MarsTerm> terms{MarsTerm{}};
  Eigen::MatrixXd Q(n, 1);
  Q.col(0) = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
  Eigen::VectorXd resid = data.Y - Q * (Q.transpose() * data.Y);
  std::vector<double> rss_trace{resid.squaredNorm()};

  // candidate knots per coordinate: distinct observed values
  std::vector<std::vector<double>> knots(d);
  for (int j = 0; j < d; ++j) {
    std::vector<double> v(data.X.col(j).data(), data.X.col(j).data() + n);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    knots[j] = v;
  }
  std::vector<Eigen::VectorXd> term_cols{Eigen::VectorXd::Ones(n)};

  while (static_cast<int>(terms.size()) < opt.max_basis) {
    const bool pair_fits = static_cast<int>(terms.size()) + 2 <= opt.max_basis;
    double best_gain = tiny;
    MarsTerm best_a, best_b;
    int best_cols = 0;  // 1: only a, 2: both
    Eigen::VectorXd best_ra, best_rb;

    for (size_t m = 0; m < terms.size(); ++m) {
      if (static_cast<int>(terms[m].factors.size()) >= max_degree) continue;
      const Eigen::VectorXd& parent = term_cols[m];
      for (int j = 0; j < d; ++j) {
        if (terms[m].uses(j)) continue;
        for (double a : knots[j]) {
          Eigen::VectorXd cp(n), cm(n);
          for (long i = 0; i < n; ++i) {
            double t = data.X(i, j) - a;
            cp(i) = parent(i) * (t > 0 ? t : 0.0);
            cm(i) = parent(i) * (t < 0 ? -t : 0.0);
          }
          Eigen::VectorXd rp = detail::residualize(Q, cp), rm = detail::residualize(Q, cm);
          double np = rp.squaredNorm(), nm = rm.squaredNorm();
          bool okp = np > 1e-10 * std::max(cp.squaredNorm(), 1e-300);
          bool okm = nm > 1e-10 * std::max(cm.squaredNorm(), 1e-300);
          // single-column gains
          double gp = okp ? std::pow(rp.dot(resid), 2) / np : 0.0;
          double gm = okm ? std::pow(rm.dot(resid), 2) / nm : 0.0;
          auto consider = [&](double gain, const MarsTerm& ta, const MarsTerm& tb, int cols,
                              const Eigen::VectorXd& ra, const Eigen::VectorXd& rb) {
            if (gain > best_gain) {
              best_gain = gain;
              best_a = ta;
              best_b = tb;
              best_cols = cols;
              best_ra = ra;
              best_rb = rb;
            }
          };
          MarsTerm tp = terms[m], tm = terms[m];
          tp.factors.push_back({j, +1, a});
          tm.factors.push_back({j, -1, a});
          if (pair_fits && okp && okm) {
            // joint gain of both columns via the 2 x 2 normal equations
            double g11 = np, g22 = nm, g12 = rp.dot(rm);
            double b1 = rp.dot(resid), b2 = rm.dot(resid);
            double det = g11 * g22 - g12 * g12;
            if (det > 1e-12 * g11 * g22) {
              double gain = (g22 * b1 * b1 - 2 * g12 * b1 * b2 + g11 * b2 * b2) / det;
              consider(gain, tp, tm, 2, rp, rm);
              continue;
            }
          }
          if (gp >= gm && okp) consider(gp, tp, tp, 1, rp, rp);
          else if (okm) consider(gm, tm, tm, 1, rm, rm);
        }
      }
    }
    if (best_cols == 0) break;  // nothing reduces the residual

    auto append = [&](const MarsTerm& t, const Eigen::VectorXd& r) {
      Eigen::VectorXd q = detail::residualize(Q, r);
      double nq = q.norm();
      if (!(nq > 1e-12)) {
        warnings.push_back("collinear forward term dropped");
        return;
      }
      Q.conservativeResize(Eigen::NoChange, Q.cols() + 1);
      Q.col(Q.cols() - 1) = q / nq;
      terms.push_back(t);
      term_cols.push_back(detail::term_column(t, data.X));
    };
    append(best_a, best_ra);
    if (best_cols == 2) append(best_b, best_rb);
    resid = data.Y - Q * (Q.transpose() * data.Y);
    rss_trace.push_back(resid.squaredNorm());
  }

  auto design = [&](const std::vector<int>& keep) {
    Eigen::MatrixXd B(n, keep.size());
    for (size_t c = 0; c < keep.size(); ++c) B.col(c) = term_cols[keep[c]];
    return B;
  };

  std::vector<int> keep(terms.size());
  for (size_t i = 0; i < terms.size(); ++i) keep[i] = static_cast<int>(i);
  double rss = detail::lsq_rss(design(keep), data.Y);
  double gcv = detail::mars_gcv(rss, n, static_cast<int>(keep.size()), opt.gcv_penalty);
  std::vector<double> gcv_trace{gcv};

  // Backward pass: drop the term whose removal gives the lowest GCV, while that
  // does not raise GCV. The intercept stays.
  while (keep.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    size_t drop = 0;
    for (size_t c = 1; c < keep.size(); ++c) {
      std::vector<int> trial = keep;
      trial.erase(trial.begin() + c);
      double r = detail::lsq_rss(design(trial), data.Y);
      double g = detail::mars_gcv(r, n, static_cast<int>(trial.size()), opt.gcv_penalty);
      if (g < best) {
        best = g;
        drop = c;
      }
    }
    if (!(best <= gcv)) break;
    keep.erase(keep.begin() + drop);
    gcv = best;
    gcv_trace.push_back(gcv);
  }

  Eigen::VectorXd coef;
  Eigen::MatrixXd B = design(keep);
  rss = detail::lsq_rss(B, data.Y, &coef);
  std::vector<MarsTerm> final_terms;
  for (int k : keep) final_terms.push_back(terms[k]);
  MarsModel model(d, std::move(final_terms), coef, detail::mars_gcv(rss, n, static_cast<int>(keep.size()), opt.gcv_penalty));
  model.warnings = std::move(warnings);
  model.forward_rss = rss_trace.back();
  model.forward_rss_trace = std::move(rss_trace);
  model.backward_gcv_trace = std::move(gcv_trace);
  return model;
}

inline MarsModel fit_mars(const Dataset& data, int max_basis, double gcv_penalty = 3.0) {
  MarsOptions o;
  o.max_basis = max_basis;
  o.gcv_penalty = gcv_penalty;
  return fit_mars(data, o);
}

}  // namespace locdim
