#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "predictor.hpp"

namespace locdim {

// Mean response of the k Euclidean-nearest training points; equal distances go
// to the smaller training index.
class KnnPredictor : public Predictor {
 public:
  KnnPredictor(Eigen::MatrixXd X, Eigen::VectorXd Y, int k) : X_(std::move(X)), Y_(std::move(Y)), k_(k) {
    if (k_ < 1 || k_ > X_.rows()) throw std::invalid_argument("k must lie in [1, n]");
  }
  std::string name() const override { return "knn"; }
  int k() const { return k_; }

  std::vector<long> neighbors(std::span<const double> x) const {
    const long n = X_.rows();
    std::vector<double> dist(n);
    for (long i = 0; i < n; ++i) {
      double s = 0;
      for (long j = 0; j < X_.cols(); ++j) {
        double t = X_(i, j) - x[j];
        s += t * t;
      }
      dist[i] = s;
    }
    std::vector<long> idx(n);
    std::iota(idx.begin(), idx.end(), 0L);
    std::partial_sort(idx.begin(), idx.begin() + k_, idx.end(),
                      [&](long a, long b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });
    idx.resize(k_);
    return idx;
  }

  double predict(std::span<const double> x) const override {
    if (static_cast<long>(x.size()) != X_.cols()) throw std::invalid_argument("input dimension mismatch");
    double s = 0;
    for (long i : neighbors(x)) s += Y_(i);
    return s / k_;
  }

  json to_json() const override {
    return {{"kind", "knn"}, {"k", k_}, {"n_train", X_.rows()}, {"d", X_.cols()}};
  }

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd Y_;
  int k_;
};

// {1, 2, 3} u {4, 8, ..., 4 ceil(n_train / 4)}, dropping values above n_train
inline std::vector<int> default_k_candidates(long n_train) {
  std::vector<int> ks;
  for (int k : {1, 2, 3})
    if (k <= n_train) ks.push_back(k);
  long top = 4 * ((n_train + 3) / 4);
  for (long k = 4; k <= top; k += 4)
    if (k <= n_train) ks.push_back(static_cast<int>(k));
  return ks;
}

struct KnnFit {
  std::shared_ptr<const KnnPredictor> predictor;
  std::vector<int> candidates;
  std::vector<double> test_risks;
};

// k chosen by risk on the testing split; the returned predictor keeps the
// learning split as its reference set.
inline KnnFit fit_knn_detailed(const Dataset& data, const std::vector<int>& k_candidates, double split_fraction = 0.8) {
  data.validate();
  auto [learn, test] = split_sample(data, split_fraction);
  if (k_candidates.empty()) throw std::invalid_argument("k candidate list is empty");
  for (int k : k_candidates)
    if (k < 1 || k > learn.n()) throw std::invalid_argument("k candidate exceeds the learning sample size");
  KnnFit out;
  out.candidates = k_candidates;
  std::vector<std::shared_ptr<const KnnPredictor>> fits;
  for (int k : k_candidates) {
    auto p = std::make_shared<KnnPredictor>(learn.X, learn.Y, k);
    out.test_risks.push_back(holdout_risk(*p, test));
    fits.push_back(p);
  }
  int best = argmin_first(out.test_risks);
  out.predictor = fits.at(best < 0 ? 0 : best);
  return out;
}

inline PredictorPtr fit_knn(const Dataset& data, const std::vector<int>& k_candidates, double split_fraction = 0.8) {
  return fit_knn_detailed(data, k_candidates, split_fraction).predictor;
}

}  // namespace locdim
