#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "../fit.hpp"
#include "../json_io.hpp"
#include "../network_io.hpp"

namespace locdim {

// The surface the harness sees: point and batch prediction plus JSON.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string name() const = 0;
  virtual double predict(std::span<const double> x) const = 0;
  virtual Eigen::VectorXd predict_batch(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd out(X.rows());
    std::vector<double> row(X.cols());
    for (long i = 0; i < X.rows(); ++i) {
      for (long j = 0; j < X.cols(); ++j) row[j] = X(i, j);
      out(i) = predict(row);
    }
    return out;
  }
  virtual json to_json() const = 0;

  double predict(const std::vector<double>& x) const { return predict(std::span<const double>(x)); }
};

using PredictorPtr = std::shared_ptr<const Predictor>;

class ConstantPredictor : public Predictor {
 public:
  explicit ConstantPredictor(double c) : c_(c) {}
  std::string name() const override { return "mean"; }
  double predict(std::span<const double>) const override { return c_; }
  Eigen::VectorXd predict_batch(const Eigen::MatrixXd& X) const override {
    return Eigen::VectorXd::Constant(X.rows(), c_);
  }
  json to_json() const override { return {{"kind", "constant"}, {"value", c_}}; }
  double value() const { return c_; }

 private:
  double c_;
};

inline PredictorPtr fit_mean(const Dataset& data) {
  data.validate();
  return std::make_shared<ConstantPredictor>(data.Y.mean());
}

// Network output clamped to [-beta, beta].
template <class Net>
class NetPredictor : public Predictor {
 public:
  NetPredictor(std::string name, Net net, double beta, json selection = json::object())
      : name_(std::move(name)), net_(std::move(net)), beta_(beta), selection_(std::move(selection)) {}
  std::string name() const override { return name_; }
  double predict(std::span<const double> x) const override { return truncate_predict(net_, beta_, x); }
  Eigen::VectorXd predict_batch(const Eigen::MatrixXd& X) const override {
    return truncate_predict_batch(net_, beta_, X);
  }
  json to_json() const override {
    return {{"kind", name_}, {"beta", beta_}, {"selection", selection_}, {"network", locdim::to_json(net_)}};
  }
  const Net& net() const { return net_; }
  double beta() const { return beta_; }

 private:
  std::string name_;
  Net net_;
  double beta_;
  json selection_;
};

// Index of the smallest risk; ties go to the earlier entry.
inline int argmin_first(const std::vector<double>& risks) {
  int best = -1;
  for (size_t i = 0; i < risks.size(); ++i)
    if (std::isfinite(risks[i]) && (best < 0 || risks[i] < risks[best])) best = static_cast<int>(i);
  return best;
}

inline double holdout_risk(const Predictor& p, const Dataset& test) {
  return (test.Y - p.predict_batch(test.X)).squaredNorm() / double(test.n());
}

}  // namespace locdim
