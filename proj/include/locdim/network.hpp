#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "activation.hpp"

namespace locdim {

struct Layer {
  Eigen::MatrixXd W;  // rows = neurons of this layer, cols = neurons of the previous one
  Eigen::VectorXd b;
};

// Fully connected feedforward net with L hidden layers of width r, logistic
// hidden units and an affine output unit. Layer L+1 (the last entry) is 1 x r.
class DenseNetwork {
 public:
  DenseNetwork() = default;

  DenseNetwork(int d, int L, int r, double alpha) : d_(d), L_(L), r_(r), alpha_(alpha) {
    if (d < 1 || L < 1 || r < 1) throw std::invalid_argument("network needs d, L, r >= 1");
    if (!(alpha > 0)) throw std::invalid_argument("weight bound must be positive");
    layers_.reserve(L + 1);
    layers_.push_back({Eigen::MatrixXd::Zero(r, d), Eigen::VectorXd::Zero(r)});
    for (int l = 1; l < L; ++l) layers_.push_back({Eigen::MatrixXd::Zero(r, r), Eigen::VectorXd::Zero(r)});
    layers_.push_back({Eigen::MatrixXd::Zero(1, r), Eigen::VectorXd::Zero(1)});
  }

  // Takes explicit layers and validates shapes and the weight bound.
  DenseNetwork(std::vector<Layer> layers, double alpha) : alpha_(alpha), layers_(std::move(layers)) {
    if (layers_.size() < 2) throw std::invalid_argument("network needs at least one hidden layer");
    d_ = static_cast<int>(layers_[0].W.cols());
    r_ = static_cast<int>(layers_[0].W.rows());
    L_ = static_cast<int>(layers_.size()) - 1;
    if (d_ < 1 || r_ < 1) throw std::invalid_argument("empty layer");
    for (int l = 0; l <= L_; ++l) {
      const auto& ly = layers_[l];
      long rows = l == L_ ? 1 : r_;
      long cols = l == 0 ? d_ : r_;
      if (ly.W.rows() != rows || ly.W.cols() != cols || ly.b.size() != rows)
        throw std::invalid_argument("layer " + std::to_string(l) + " has inconsistent shape");
    }
    if (!(alpha > 0)) throw std::invalid_argument("weight bound must be positive");
    if (max_abs_weight() > alpha_) throw std::invalid_argument("stored weight exceeds the weight bound");
  }

  int input_dim() const { return d_; }
  int hidden_layers() const { return L_; }
  int width() const { return r_; }
  double weight_bound() const { return alpha_; }
  void set_weight_bound(double a) { alpha_ = a; }

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  double operator()(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != d_) throw std::invalid_argument("input dimension mismatch");
    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(), d_);
    for (int l = 0; l < L_; ++l) {
      Eigen::VectorXd z = layers_[l].W * a + layers_[l].b;
      a = z.unaryExpr([](double v) { return Activation::value(v); });
    }
    return (layers_[L_].W * a)(0) + layers_[L_].b(0);
  }
  double operator()(const std::vector<double>& x) const { return (*this)(std::span<const double>(x)); }

  // Evaluates all rows of X (n x d) at once.
  Eigen::VectorXd predict_batch(const Eigen::MatrixXd& X) const {
    if (X.cols() != d_) throw std::invalid_argument("input dimension mismatch");
    Eigen::MatrixXd a = X.transpose();
    for (int l = 0; l < L_; ++l) {
      Eigen::MatrixXd z = layers_[l].W * a;
      z.colwise() += layers_[l].b;
      a = z.unaryExpr([](double v) { return Activation::value(v); });
    }
    Eigen::RowVectorXd out = layers_[L_].W * a;
    out.array() += layers_[L_].b(0);
    return out.transpose();
  }

  double max_abs_weight() const {
    double m = 0;
    for (const auto& ly : layers_) {
      if (ly.W.size()) m = std::max(m, ly.W.cwiseAbs().maxCoeff());
      if (ly.b.size()) m = std::max(m, ly.b.cwiseAbs().maxCoeff());
    }
    return m;
  }

  // Visits every parameter: per layer, W row-major then b.
  template <class F>
  void for_each_parameter(F&& f) {
    for (auto& ly : layers_) {
      for (long i = 0; i < ly.W.rows(); ++i)
        for (long j = 0; j < ly.W.cols(); ++j) f(ly.W(i, j));
      for (long i = 0; i < ly.b.size(); ++i) f(ly.b(i));
    }
  }
  template <class F>
  void for_each_parameter(F&& f) const {
    const_cast<DenseNetwork*>(this)->for_each_parameter([&](double& v) { f(static_cast<const double&>(v)); });
  }

  static long parameter_count(int d, int L, int r) {
    return static_cast<long>(d + 1) * r + static_cast<long>(L - 1) * (r + 1) * r + (r + 1);
  }
  long parameter_count() const { return parameter_count(d_, L_, r_); }

 private:
  int d_ = 0, L_ = 0, r_ = 0;
  double alpha_ = 1.0;
  std::vector<Layer> layers_;
};

// Sum of M* dense subnetworks sharing (d, L, r, alpha), each scaled by an outer
// weight mu_i with |mu_i| <= alpha. No outer intercept.
class SparseAdditiveNetwork {
 public:
  SparseAdditiveNetwork() = default;

  SparseAdditiveNetwork(int d, int L, int r, int Mstar, double alpha) : alpha_(alpha) {
    if (Mstar < 1) throw std::invalid_argument("need at least one subnetwork");
    for (int i = 0; i < Mstar; ++i) subnets_.emplace_back(d, L, r, alpha);
    mu_.assign(Mstar, 0.0);
  }

  SparseAdditiveNetwork(std::vector<DenseNetwork> subnets, std::vector<double> mu, double alpha)
      : alpha_(alpha), subnets_(std::move(subnets)), mu_(std::move(mu)) {
    if (subnets_.empty()) throw std::invalid_argument("need at least one subnetwork");
    if (subnets_.size() != mu_.size()) throw std::invalid_argument("one outer weight per subnetwork");
    const auto& s0 = subnets_[0];
    for (auto& s : subnets_) {
      if (s.input_dim() != s0.input_dim() || s.hidden_layers() != s0.hidden_layers() || s.width() != s0.width())
        throw std::invalid_argument("subnetworks must share d, L and r");
      if (s.max_abs_weight() > alpha_) throw std::invalid_argument("stored weight exceeds the weight bound");
      s.set_weight_bound(alpha_);
    }
    for (double m : mu_)
      if (std::abs(m) > alpha_) throw std::invalid_argument("outer weight exceeds the weight bound");
  }

  int input_dim() const { return subnets_.at(0).input_dim(); }
  int hidden_layers() const { return subnets_.at(0).hidden_layers(); }
  int width() const { return subnets_.at(0).width(); }
  int subnet_count() const { return static_cast<int>(subnets_.size()); }
  double weight_bound() const { return alpha_; }
  void set_weight_bound(double a) {
    alpha_ = a;
    for (auto& s : subnets_) s.set_weight_bound(a);
  }

  const std::vector<DenseNetwork>& subnets() const { return subnets_; }
  std::vector<DenseNetwork>& subnets() { return subnets_; }
  const std::vector<double>& mu() const { return mu_; }
  std::vector<double>& mu() { return mu_; }

  double operator()(std::span<const double> x) const {
    double s = 0;
    for (size_t i = 0; i < subnets_.size(); ++i) s += mu_[i] * subnets_[i](x);
    return s;
  }
  double operator()(const std::vector<double>& x) const { return (*this)(std::span<const double>(x)); }

  Eigen::VectorXd predict_batch(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
    for (size_t i = 0; i < subnets_.size(); ++i) out += mu_[i] * subnets_[i].predict_batch(X);
    return out;
  }

  double max_abs_weight() const {
    double m = 0;
    for (const auto& s : subnets_) m = std::max(m, s.max_abs_weight());
    for (double v : mu_) m = std::max(m, std::abs(v));
    return m;
  }

  // Per subnetwork: its parameters in dense order, then its outer weight.
  template <class F>
  void for_each_parameter(F&& f) {
    for (size_t i = 0; i < subnets_.size(); ++i) {
      subnets_[i].for_each_parameter(f);
      f(mu_[i]);
    }
  }
  template <class F>
  void for_each_parameter(F&& f) const {
    const_cast<SparseAdditiveNetwork*>(this)->for_each_parameter([&](double& v) { f(static_cast<const double&>(v)); });
  }

  static long parameter_count(int d, int L, int r, int Mstar) {
    return static_cast<long>(Mstar) * (DenseNetwork::parameter_count(d, L, r) + 1);
  }
  long parameter_count() const { return parameter_count(input_dim(), hidden_layers(), width(), subnet_count()); }

 private:
  double alpha_ = 1.0;
  std::vector<DenseNetwork> subnets_;
  std::vector<double> mu_;
};

template <class Net>
Eigen::VectorXd get_parameters(const Net& net) {
  Eigen::VectorXd theta(net.parameter_count());
  long k = 0;
  net.for_each_parameter([&](const double& v) { theta(k++) = v; });
  return theta;
}

template <class Net>
void set_parameters(Net& net, const Eigen::VectorXd& theta) {
  if (theta.size() != net.parameter_count()) throw std::invalid_argument("parameter vector has wrong length");
  long k = 0;
  net.for_each_parameter([&](double& v) { v = theta(k++); });
}

// Clamps every weight (and outer weight) into [-alpha, alpha]; returns how many moved.
template <class Net>
long project_weights(Net& net, double alpha) {
  if (!(alpha > 0)) throw std::invalid_argument("weight bound must be positive");
  long moved = 0;
  net.for_each_parameter([&](double& v) {
    double c = std::clamp(v, -alpha, alpha);
    if (c != v) ++moved;
    v = c;
  });
  net.set_weight_bound(alpha);
  return moved;
}

inline long project_vector(Eigen::VectorXd& theta, double alpha) {
  long moved = 0;
  for (long i = 0; i < theta.size(); ++i) {
    double c = std::clamp(theta(i), -alpha, alpha);
    if (c != theta(i)) ++moved;
    theta(i) = c;
  }
  return moved;
}

}  // namespace locdim
