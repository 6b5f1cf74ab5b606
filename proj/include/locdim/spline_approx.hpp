#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "bspline.hpp"

namespace locdim {

// Tensor-product spline sum_j b_j prod_v B_{j_v,M}(x_v) on [-A, A]^dstar with
// uniform knots of spacing 2A/K, so the span [t_0, t_K] is exactly [-A, A].
struct TensorSplineApprox {
  int dstar = 1, M = 1, K = 1;
  double A = 1;
  KnotSequence knots;
  std::vector<double> coeffs;  // multi-index (j_1..j_dstar), j_v in [-M, K-1], first coordinate fastest

  int per_dim() const { return K + M; }

  double coefficient(const std::vector<int>& j) const {
    size_t flat = 0, stride = 1;
    for (int v = 0; v < dstar; ++v) {
      flat += static_cast<size_t>(j[v] + M) * stride;
      stride *= per_dim();
    }
    return coeffs.at(flat);
  }

  // values of all univariate splines at one coordinate
  std::vector<double> univariate(double x) const {
    std::vector<double> out(per_dim());
    for (int j = -M; j < K; ++j) out[j + M] = bspline_eval(knots, j, M, x);
    return out;
  }

  double operator()(std::span<const double> x) const {
    std::vector<std::vector<double>> vals;
    for (int v = 0; v < dstar; ++v) vals.push_back(univariate(x[v]));
    double s = 0;
    size_t total = coeffs.size();
    for (size_t flat = 0; flat < total; ++flat) {
      size_t rem = flat;
      double p = coeffs[flat];
      for (int v = 0; v < dstar && p != 0.0; ++v) {
        p *= vals[v][rem % per_dim()];
        rem /= per_dim();
      }
      s += p;
    }
    return s;
  }
};

// Least-squares fit of the tensor spline coefficients on a dense grid.
inline TensorSplineApprox tensor_bspline_approx(const std::function<double(std::span<const double>)>& f,
                                                int dstar, double A, int M, int K) {
  if (M < 1 || K < 1 || dstar < 1) throw std::invalid_argument("need M, K, dstar >= 1");
  TensorSplineApprox ap;
  ap.dstar = dstar;
  ap.M = M;
  ap.K = K;
  ap.A = A;
  ap.knots = KnotSequence::uniform(-A, 2.0 * A / K, K, M);
  const int nb = ap.per_dim();
  const int G = dstar == 1 ? std::max(8 * nb, 64) : 4 * nb + 1;
  size_t rows = 1, cols = 1;
  for (int v = 0; v < dstar; ++v) {
    rows *= G;
    cols *= nb;
  }
  std::vector<std::vector<double>> grid_vals(G);
  std::vector<double> grid(G);
  for (int g = 0; g < G; ++g) {
    grid[g] = -A + 2.0 * A * g / (G - 1);
    grid_vals[g] = ap.univariate(grid[g]);
  }
  Eigen::MatrixXd D(rows, cols);
  Eigen::VectorXd y(rows);
  std::vector<double> x(dstar);
  std::vector<int> gi(dstar);
  for (size_t r = 0; r < rows; ++r) {
    size_t rem = r;
    for (int v = 0; v < dstar; ++v) {
      gi[v] = static_cast<int>(rem % G);
      rem /= G;
      x[v] = grid[gi[v]];
    }
    y(r) = f(std::span<const double>(x));
    for (size_t c = 0; c < cols; ++c) {
      size_t crem = c;
      double p = 1;
      for (int v = 0; v < dstar; ++v) {
        p *= grid_vals[gi[v]][crem % nb];
        crem /= nb;
      }
      D(r, c) = p;
    }
  }
  Eigen::VectorXd b = D.colPivHouseholderQr().solve(y);
  ap.coeffs.assign(b.data(), b.data() + b.size());
  return ap;
}

}  // namespace locdim
