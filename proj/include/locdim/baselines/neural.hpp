#pragma once

#include <limits>
#include <vector>

#include "predictor.hpp"

namespace locdim {

struct NeuralFit {
  PredictorPtr predictor;
  std::vector<json> candidates;
  std::vector<double> test_risks;
  int chosen = -1;
};

// Fully connected nets over the (L, r) grid, chosen by truncated holdout risk.
inline NeuralFit fit_fcnn_detailed(const Dataset& data, const std::vector<int>& L_candidates,
                                   const std::vector<int>& r_candidates, const FitConfig& cfg,
                                   double split_fraction = 0.8) {
  if (L_candidates.empty() || r_candidates.empty()) throw std::invalid_argument("fcnn grids must be nonempty");
  data.validate();
  auto [learn, test] = split_sample(data, split_fraction);
  NeuralFit out;
  DenseNetwork best_net;
  double best = std::numeric_limits<double>::infinity();
  for (int L : L_candidates)
    for (int r : r_candidates) {
      FitConfig cc = cfg;
      cc.L = L;
      cc.r = r;
      cc.seed = derive_seed(cfg.seed, {0xfcULL, static_cast<std::uint64_t>(L), static_cast<std::uint64_t>(r)});
      DenseNetwork net(data.d(), L, r, cfg.alpha);
      train(net, learn, cc);
      double risk = truncated_risk(net, cfg.beta, test);
      if (!std::isfinite(risk)) risk = std::numeric_limits<double>::infinity();
      out.candidates.push_back({{"L", L}, {"r", r}});
      out.test_risks.push_back(risk);
      if (out.chosen < 0 || risk < best) {
        best = risk;
        out.chosen = static_cast<int>(out.test_risks.size()) - 1;
        best_net = net;
      }
    }
  out.predictor = std::make_shared<NetPredictor<DenseNetwork>>("neural-fc", best_net, cfg.beta, out.candidates[out.chosen]);
  return out;
}

inline PredictorPtr fit_fcnn(const Dataset& data, const std::vector<int>& L_candidates,
                             const std::vector<int>& r_candidates, const FitConfig& cfg, double split_fraction = 0.8) {
  return fit_fcnn_detailed(data, L_candidates, r_candidates, cfg, split_fraction).predictor;
}

// Sparse additive nets over the (L, r, M*) grid.
inline NeuralFit fit_neural_sc_detailed(const Dataset& data, const std::vector<int>& L_candidates,
                                        const std::vector<int>& r_candidates, const std::vector<int>& mstar_candidates,
                                        const FitConfig& cfg, double split_fraction = 0.8) {
  if (L_candidates.empty() || r_candidates.empty() || mstar_candidates.empty())
    throw std::invalid_argument("neural-sc grids must be nonempty");
  std::vector<SparseCandidate> grid;
  for (int L : L_candidates)
    for (int r : r_candidates)
      for (int m : mstar_candidates) grid.push_back({L, r, m});
  SparseSelection sel = select_sparse(data, grid, cfg, split_fraction);
  NeuralFit out;
  for (const auto& g : grid) out.candidates.push_back({{"L", g.L}, {"r", g.r}, {"Mstar", g.Mstar}});
  out.test_risks = sel.test_risks;
  out.chosen = sel.chosen;
  out.predictor = std::make_shared<NetPredictor<SparseAdditiveNetwork>>("neural-sc", sel.net, sel.beta,
                                                                         out.candidates[out.chosen]);
  return out;
}

}  // namespace locdim
