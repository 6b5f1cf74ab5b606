#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace locdim {

struct BfgsOptions {
  int max_iters = 500;
  double tol = 1e-8;        // stop when the projected gradient's max-norm drops below this
  double armijo_c = 1e-4;
  int max_halvings = 60;
  double box = 0;           // clamp iterates into [-box, box] when > 0
};

struct BfgsResult {
  Eigen::VectorXd x;
  double f = 0;
  int iterations = 0;
  bool finite = true;
  bool converged = false;
  std::vector<double> trace;  // objective after every accepted step, starting with f(x0)
};

// f(x, grad) returns the objective and fills grad.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

namespace detail {

inline void clamp_box(Eigen::VectorXd& x, double box) {
  if (box > 0) x = x.cwiseMax(-box).cwiseMin(box);
}

// zero the gradient components that push against an active bound
inline double projected_grad_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g, double box) {
  double m = 0;
  for (long i = 0; i < x.size(); ++i) {
    double gi = g(i);
    if (box > 0 && ((x(i) >= box && gi < 0) || (x(i) <= -box && gi > 0))) gi = 0;
    m = std::max(m, std::abs(gi));
  }
  return m;
}

}  // namespace detail

// Projected BFGS on the inverse Hessian with Armijo backtracking. A step is only
// accepted when it strictly satisfies the sufficient-decrease test measured along
// the projected displacement, so the trace is non-increasing.
inline BfgsResult bfgs_minimize(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& opt) {
  BfgsResult res;
  const long n = x0.size();
  detail::clamp_box(x0, opt.box);
  Eigen::VectorXd g(n), g_new(n);
  double fx = f(x0, g);
  res.x = x0;
  res.f = fx;
  if (!std::isfinite(fx) || !g.allFinite()) {
    res.finite = false;
    return res;
  }
  res.trace.push_back(fx);
  if (opt.max_iters <= 0) return res;

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;
  Eigen::VectorXd x = x0;
  for (int it = 0; it < opt.max_iters; ++it) {
    if (detail::projected_grad_norm(x, g, opt.box) <= opt.tol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd p = -(H * g);
    if (!(g.dot(p) < 0)) {
      H.setIdentity();
      fresh = true;
      p = -g;
    }

    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new(n);
    double f_new = 0;
    for (int h = 0; h < opt.max_halvings; ++h, t *= 0.5) {
      x_new = x + t * p;
      detail::clamp_box(x_new, opt.box);
      double slope = g.dot(x_new - x);
      if (!(slope < 0)) continue;
      f_new = f(x_new, g_new);
      if (!std::isfinite(f_new) || !g_new.allFinite()) {
        res.finite = false;
        res.x = x;
        res.f = fx;
        return res;
      }
      if (f_new <= fx + opt.armijo_c * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // a failed search on a steepest-descent step means no further progress
      if (fresh) break;
      H.setIdentity();
      fresh = true;
      continue;
    }

    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd y = g_new - g;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) H *= sy / y.squaredNorm();
      double rho = 1.0 / sy;
      Eigen::VectorXd Hy = H * y;
      double yHy = y.dot(Hy);
      H.noalias() -= rho * (Hy * s.transpose() + s * Hy.transpose());
      H.noalias() += (rho * rho * yHy + rho) * (s * s.transpose());
      fresh = false;
    }
    x = x_new;
    g = g_new;
    fx = f_new;
    res.trace.push_back(fx);
    res.iterations = it + 1;
  }
  res.x = x;
  res.f = fx;
  return res;
}

}  // namespace locdim
