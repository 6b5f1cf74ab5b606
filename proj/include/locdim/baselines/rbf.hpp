#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "predictor.hpp"

namespace locdim {

// Wendland's compactly supported function (1 - r)^6_+ (35 r^2 + 18 r + 3)
inline double wendland(double r) {
  if (r >= 1.0) return 0.0;
  double t = 1.0 - r;
  double t2 = t * t, t6 = t2 * t2 * t2;
  return t6 * (35.0 * r * r + 18.0 * r + 3.0);
}

class RbfPredictor : public Predictor {
 public:
  RbfPredictor(Eigen::MatrixXd centers, Eigen::VectorXd weights, double radius, double ridge)
      : C_(std::move(centers)), w_(std::move(weights)), radius_(radius), ridge_(ridge) {}
  std::string name() const override { return "rbf"; }
  double radius() const { return radius_; }
  double ridge() const { return ridge_; }
  const Eigen::VectorXd& weights() const { return w_; }

  double predict(std::span<const double> x) const override {
    if (static_cast<long>(x.size()) != C_.cols()) throw std::invalid_argument("input dimension mismatch");
    double s = 0;
    for (long i = 0; i < C_.rows(); ++i) {
      double d2 = 0;
      for (long j = 0; j < C_.cols(); ++j) {
        double t = C_(i, j) - x[j];
        d2 += t * t;
      }
      s += w_(i) * wendland(std::sqrt(d2) / radius_);
    }
    return s;
  }

  json to_json() const override {
    return {{"kind", "rbf"}, {"radius", radius_}, {"ridge", ridge_}, {"n_centers", C_.rows()},
            {"weights", std::vector<double>(w_.data(), w_.data() + w_.size())}};
  }

 private:
  Eigen::MatrixXd C_;
  Eigen::VectorXd w_;
  double radius_, ridge_;
};

inline Eigen::MatrixXd wendland_gram(const Eigen::MatrixXd& X, double radius) {
  const long n = X.rows();
  Eigen::MatrixXd Phi(n, n);
  for (long i = 0; i < n; ++i) {
    Phi(i, i) = wendland(0.0);
    for (long j = i + 1; j < n; ++j) Phi(i, j) = Phi(j, i) = wendland((X.row(i) - X.row(j)).norm() / radius);
  }
  return Phi;
}

// Solves (Phi + ridge I) w = Y. Returns false when the factorization breaks down
// or the solve leaves a large residual.
inline bool solve_rbf_system(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& Y, double ridge, Eigen::VectorXd& w) {
  Eigen::MatrixXd A = Phi;
  A.diagonal().array() += ridge;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success) return false;
  w = ldlt.solve(Y);
  if (!w.allFinite()) return false;
  double res = (A * w - Y).norm();
  return res <= 1e-6 * std::max(1.0, Y.norm());
}

inline std::vector<double> default_radius_candidates() { return {0.1, 0.5, 1, 5, 30, 60, 100}; }

struct RbfFit {
  std::shared_ptr<const RbfPredictor> predictor;
  std::vector<double> radii;
  std::vector<double> test_risks;  // infinity for skipped radii
  std::vector<std::string> warnings;
};

inline RbfFit fit_rbf_detailed(const Dataset& data, const std::vector<double>& radius_candidates,
                               double split_fraction = 0.8, double ridge = 1e-10) {
  if (radius_candidates.empty()) throw std::invalid_argument("radius candidate list is empty");
  data.validate();
  auto [learn, test] = split_sample(data, split_fraction);
  RbfFit out;
  out.radii = radius_candidates;
  std::vector<std::shared_ptr<const RbfPredictor>> fits;
  for (double rad : radius_candidates) {
    if (!(rad > 0)) throw std::invalid_argument("radius must be positive");
    Eigen::VectorXd w;
    if (!solve_rbf_system(wendland_gram(learn.X, rad), learn.Y, ridge, w)) {
      out.warnings.push_back("radius " + std::to_string(rad) + " skipped: singular system");
      out.test_risks.push_back(std::numeric_limits<double>::infinity());
      fits.push_back(nullptr);
      continue;
    }
    auto p = std::make_shared<RbfPredictor>(learn.X, w, rad, ridge);
    double risk = holdout_risk(*p, test);
    out.test_risks.push_back(std::isfinite(risk) ? risk : std::numeric_limits<double>::infinity());
    fits.push_back(p);
  }
  int best = argmin_first(out.test_risks);
  if (best < 0) throw std::runtime_error("every RBF radius produced a singular system");
  out.predictor = fits[best];
  return out;
}

inline PredictorPtr fit_rbf(const Dataset& data, const std::vector<double>& radius_candidates,
                            double split_fraction = 0.8) {
  return fit_rbf_detailed(data, radius_candidates, split_fraction).predictor;
}

}  // namespace locdim
