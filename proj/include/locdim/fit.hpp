#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json_io.hpp"
#include "network.hpp"
#include "optimizer.hpp"
#include "rng.hpp"

namespace locdim {

struct Dataset {
  Eigen::MatrixXd X;  // n x d
  Eigen::VectorXd Y;

  long n() const { return X.rows(); }
  int d() const { return static_cast<int>(X.cols()); }

  void validate() const {
    if (X.rows() < 1) throw std::invalid_argument("dataset is empty");
    if (X.rows() != Y.size()) throw std::invalid_argument("X and Y disagree on the sample count");
    if (!X.allFinite() || !Y.allFinite()) throw std::invalid_argument("dataset has non-finite entries");
  }

  // rows [begin, end)
  Dataset slice(long begin, long end) const {
    return {X.middleRows(begin, end - begin), Y.segment(begin, end - begin)};
  }
};

// alpha_n = c1 * n^c2 and beta_n = c3 * log n
inline double default_alpha(long n, double c1 = 1e3, double c2 = 2.0) { return c1 * std::pow(double(n), c2); }
inline double default_beta(long n, double c3 = 10.0) { return c3 * std::log(double(std::max<long>(n, 2))); }

struct FitConfig {
  int L = 1;
  int r = 3;
  double alpha = 1e3;
  double beta = 50.0;
  int restarts = 1;
  int max_iters = 500;
  double tol = 1e-8;
  std::uint64_t seed = 0;

  void validate() const {
    if (L < 1 || r < 1) throw std::invalid_argument("L and r must be >= 1");
    if (!(alpha > 0)) throw std::invalid_argument("alpha must be positive");
    if (!(beta > 0)) throw std::invalid_argument("beta must be positive");
    if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
    if (max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  }
};

inline json to_json(const FitConfig& c) {
  return {{"L", c.L}, {"r", c.r}, {"alpha", c.alpha}, {"beta", c.beta}, {"restarts", c.restarts},
          {"max_iters", c.max_iters}, {"tol", c.tol}, {"seed", c.seed}};
}
inline FitConfig fit_config_from_json(const json& j) {
  FitConfig c;
  c.L = j.value("L", c.L);
  c.r = j.value("r", c.r);
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.restarts = j.value("restarts", c.restarts);
  c.max_iters = j.value("max_iters", c.max_iters);
  c.tol = j.value("tol", c.tol);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

struct FitReport {
  double final_risk = 0;
  int iterations = 0;
  long clamp_events = 0;
  int abandoned_restarts = 0;
  int best_restart = -1;
  std::vector<double> risk_trace;  // accepted-step risks of the best restart
};

inline json to_json(const FitReport& r) {
  return {{"final_risk", r.final_risk},       {"iterations", r.iterations},
          {"clamp_events", r.clamp_events},   {"abandoned_restarts", r.abandoned_restarts},
          {"best_restart", r.best_restart},   {"risk_trace", r.risk_trace}};
}

template <class Net>
double empirical_risk(const Net& net, const Dataset& data) {
  if (data.n() < 1) throw std::invalid_argument("empirical risk of empty data");
  if (data.d() != net.input_dim()) throw std::invalid_argument("dataset dimension does not match the network");
  return (data.Y - net.predict_batch(data.X)).squaredNorm() / double(data.n());
}

namespace detail {

// net(X) for X given column-wise; keeps the hidden activations for the backward pass
inline Eigen::RowVectorXd dense_forward(const DenseNetwork& net, const Eigen::MatrixXd& Xt,
                                        std::vector<Eigen::MatrixXd>& acts) {
  const auto& ls = net.layers();
  const int L = net.hidden_layers();
  acts.resize(L + 1);
  acts[0] = Xt;
  for (int l = 0; l < L; ++l) {
    Eigen::MatrixXd z = ls[l].W * acts[l];
    z.colwise() += ls[l].b;
    acts[l + 1] = z.unaryExpr([](double v) { return Activation::value(v); });
  }
  Eigen::RowVectorXd out = ls[L].W * acts[L];
  out.array() += ls[L].b(0);
  return out;
}

// Gradient of sum_k u_k * net(x_k) with respect to the dense parameters, written
// into out[offset ...] in the for_each_parameter order.
inline void dense_backward(const DenseNetwork& net, const std::vector<Eigen::MatrixXd>& acts,
                           const Eigen::RowVectorXd& u, Eigen::VectorXd& out, long offset) {
  const auto& ls = net.layers();
  const int L = net.hidden_layers();
  // parameter offsets per layer
  std::vector<long> off(L + 1);
  long k = offset;
  for (int l = 0; l <= L; ++l) {
    off[l] = k;
    k += ls[l].W.size() + ls[l].b.size();
  }
  auto store = [&](int l, const Eigen::MatrixXd& dW, const Eigen::VectorXd& db) {
    long p = off[l];
    for (long i = 0; i < dW.rows(); ++i)
      for (long j = 0; j < dW.cols(); ++j) out(p++) = dW(i, j);
    for (long i = 0; i < db.size(); ++i) out(p++) = db(i);
  };

  Eigen::MatrixXd delta = u;  // 1 x n, upstream for the output layer
  store(L, delta * acts[L].transpose(), delta.rowwise().sum());
  for (int l = L - 1; l >= 0; --l) {
    Eigen::MatrixXd back = ls[l + 1].W.transpose() * delta;
    // sigma' = a (1 - a) for the logistic
    const auto& a = acts[l + 1];
    delta = back.array() * (a.array() * (1.0 - a.array()));
    store(l, delta * acts[l].transpose(), delta.rowwise().sum());
  }
}

}  // namespace detail

// Risk and its exact gradient in for_each_parameter order.
inline double risk_and_gradient(const DenseNetwork& net, const Dataset& data, Eigen::VectorXd& grad) {
  const double n = double(data.n());
  std::vector<Eigen::MatrixXd> acts;
  Eigen::RowVectorXd pred = detail::dense_forward(net, data.X.transpose(), acts);
  Eigen::RowVectorXd e = pred - data.Y.transpose();
  grad.resize(net.parameter_count());
  detail::dense_backward(net, acts, (2.0 / n) * e, grad, 0);
  return e.squaredNorm() / n;
}

inline double risk_and_gradient(const SparseAdditiveNetwork& net, const Dataset& data, Eigen::VectorXd& grad) {
  const double n = double(data.n());
  const Eigen::MatrixXd Xt = data.X.transpose();
  const int M = net.subnet_count();
  std::vector<std::vector<Eigen::MatrixXd>> acts(M);
  std::vector<Eigen::RowVectorXd> outs(M);
  Eigen::RowVectorXd pred = Eigen::RowVectorXd::Zero(data.n());
  for (int i = 0; i < M; ++i) {
    outs[i] = detail::dense_forward(net.subnets()[i], Xt, acts[i]);
    pred += net.mu()[i] * outs[i];
  }
  Eigen::RowVectorXd e = pred - data.Y.transpose();
  Eigen::RowVectorXd u = (2.0 / n) * e;
  grad.resize(net.parameter_count());
  long offset = 0;
  for (int i = 0; i < M; ++i) {
    const auto& sub = net.subnets()[i];
    detail::dense_backward(sub, acts[i], net.mu()[i] * u, grad, offset);
    offset += sub.parameter_count();
    grad(offset++) = u.dot(outs[i]);
  }
  return e.squaredNorm() / n;
}

template <class Net>
Eigen::VectorXd gradient(const Net& net, const Dataset& data) {
  if (data.d() != net.input_dim()) throw std::invalid_argument("dataset dimension does not match the network");
  Eigen::VectorXd g;
  risk_and_gradient(net, data, g);
  return g;
}

// Least-squares training: projected BFGS from cfg.restarts random starts (weights
// uniform in [-0.5, 0.5]), best restart kept. The net's architecture is taken as
// given; its weights are overwritten unless max_iters == 0.
template <class Net>
FitReport train(Net& net, const Dataset& data, const FitConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.d() != net.input_dim()) throw std::invalid_argument("dataset dimension does not match the network");
  FitReport rep;
  if (cfg.max_iters == 0) {
    rep.final_risk = empirical_risk(net, data);
    rep.risk_trace = {rep.final_risk};
    return rep;
  }

  Net work = net;
  BfgsOptions opt;
  opt.max_iters = cfg.max_iters;
  opt.tol = cfg.tol;
  opt.box = cfg.alpha;
  Objective obj = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& g) {
    set_parameters(work, theta);
    return risk_and_gradient(work, data, g);
  };

  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta;
  const long P = net.parameter_count();
  for (int rs = 0; rs < cfg.restarts; ++rs) {
    auto rng = make_rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(rs)}));
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    Eigen::VectorXd theta0(P);
    for (long i = 0; i < P; ++i) theta0(i) = unif(rng);
    rep.clamp_events += project_vector(theta0, cfg.alpha);
    BfgsResult r = bfgs_minimize(obj, theta0, opt);
    if (!r.finite) {
      ++rep.abandoned_restarts;
      continue;
    }
    if (r.f < best) {
      best = r.f;
      best_theta = r.x;
      rep.iterations = r.iterations;
      rep.best_restart = rs;
      rep.risk_trace = r.trace;
    }
  }
  if (rep.best_restart < 0) throw std::runtime_error("every restart produced a non-finite risk");
  set_parameters(net, best_theta);
  rep.clamp_events += project_weights(net, cfg.alpha);
  rep.final_risk = empirical_risk(net, data);
  return rep;
}

// T_beta applied to a prediction
inline double truncate(double z, double beta) { return std::max(std::min(z, beta), -beta); }

template <class Net>
double truncate_predict(const Net& net, double beta, std::span<const double> x) {
  if (!(beta > 0)) throw std::invalid_argument("truncation level must be positive");
  return truncate(net(x), beta);
}

template <class Net>
Eigen::VectorXd truncate_predict_batch(const Net& net, double beta, const Eigen::MatrixXd& X) {
  if (!(beta > 0)) throw std::invalid_argument("truncation level must be positive");
  Eigen::VectorXd p = net.predict_batch(X);
  for (long i = 0; i < p.size(); ++i) p(i) = truncate(p(i), beta);
  return p;
}

template <class Net>
double truncated_risk(const Net& net, double beta, const Dataset& data) {
  return (data.Y - truncate_predict_batch(net, beta, data.X)).squaredNorm() / double(data.n());
}

// Learning/testing split: the first ceil(f n) rows learn, the rest test.
inline std::pair<Dataset, Dataset> split_sample(const Dataset& data, double fraction) {
  if (!(fraction > 0 && fraction < 1)) throw std::invalid_argument("split fraction must be in (0, 1)");
  long n_learn = static_cast<long>(std::ceil(fraction * double(data.n()) - 1e-9));
  if (n_learn < 1) throw std::invalid_argument("split leaves an empty learning set");
  if (n_learn >= data.n()) throw std::invalid_argument("split leaves an empty test set");
  return {data.slice(0, n_learn), data.slice(n_learn, data.n())};
}

// P_n = {2^l : l = 1..ceil(log2 n)}
inline std::vector<int> default_mstar_candidates(long n) {
  std::vector<int> out;
  int top = static_cast<int>(std::ceil(std::log2(double(std::max<long>(n, 2)))));
  for (int l = 1; l <= top; ++l) out.push_back(1 << l);
  return out;
}

struct SparseCandidate {
  int L = 1, r = 1, Mstar = 1;
};

struct SparseSelection {
  int chosen = -1;
  SparseCandidate params;
  SparseAdditiveNetwork net;
  double beta = 1;
  std::vector<SparseCandidate> candidates;
  std::vector<double> test_risks;
  std::vector<FitReport> reports;
};

// Trains one sparse net per candidate on the learning split and keeps the one
// with the smallest truncated test risk. Ties go to the earlier candidate, so
// callers list candidates in increasing complexity.
inline SparseSelection select_sparse(const Dataset& data, const std::vector<SparseCandidate>& grid,
                                     const FitConfig& cfg, double split_fraction) {
  if (grid.empty()) throw std::invalid_argument("candidate list is empty");
  data.validate();
  auto [learn, test] = split_sample(data, split_fraction);
  SparseSelection sel;
  sel.beta = cfg.beta;
  sel.candidates = grid;
  double best = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < grid.size(); ++c) {
    const auto& g = grid[c];
    FitConfig cc = cfg;
    cc.L = g.L;
    cc.r = g.r;
    cc.seed = derive_seed(cfg.seed, {0x5e1ec7ULL, static_cast<std::uint64_t>(g.L), static_cast<std::uint64_t>(g.r),
                                     static_cast<std::uint64_t>(g.Mstar)});
    SparseAdditiveNetwork net(data.d(), g.L, g.r, g.Mstar, cfg.alpha);
    sel.reports.push_back(train(net, learn, cc));
    double risk = truncated_risk(net, cfg.beta, test);
    if (!std::isfinite(risk)) risk = std::numeric_limits<double>::infinity();
    sel.test_risks.push_back(risk);
    if (risk < best || sel.chosen < 0) {
      best = risk;
      sel.chosen = static_cast<int>(c);
      sel.params = g;
      sel.net = std::move(net);
    }
  }
  return sel;
}

// Chooses M* among the candidates at the (L, r) fixed in cfg.
inline SparseSelection select_model(const Dataset& data, std::vector<int> candidate_mstars, const FitConfig& cfg,
                                    double split_fraction = 0.8) {
  if (candidate_mstars.empty()) throw std::invalid_argument("candidate list is empty");
  std::sort(candidate_mstars.begin(), candidate_mstars.end());
  std::vector<SparseCandidate> grid;
  for (int m : candidate_mstars) {
    if (m < 1) throw std::invalid_argument("M* must be >= 1");
    grid.push_back({cfg.L, cfg.r, m});
  }
  return select_sparse(data, grid, cfg, split_fraction);
}

}  // namespace locdim
