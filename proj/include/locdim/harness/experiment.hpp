#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "../baselines/knn.hpp"
#include "../baselines/mars.hpp"
#include "../baselines/neural.hpp"
#include "../baselines/rbf.hpp"
#include "../fit.hpp"
#include "../json_io.hpp"
#include "../rng.hpp"
#include "../targets.hpp"
#include "stats.hpp"

namespace locdim {

inline constexpr const char* kResultsSchema = "locdim-results";
inline constexpr int kResultsVersion = 1;

// Runs fn(i) for i in [0, count) on up to `threads` workers. Results must be
// written by index so the outcome does not depend on scheduling.
inline void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min(threads, count); ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

inline int default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

inline void draw_uniform_box(const Target& t, std::mt19937_64& rng, double* row) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int j = 0; j < t.dim; ++j) row[j] = t.lower[j] + (t.upper[j] - t.lower[j]) * u(rng);
}

inline Eigen::MatrixXd sample_inputs(const Target& t, long n, std::mt19937_64& rng) {
  // row-major fill keeps the draw order independent of Eigen's storage order
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> X(n, t.dim);
  for (long i = 0; i < n; ++i) draw_uniform_box(t, rng, X.row(i).data());
  return X;
}

inline Eigen::VectorXd evaluate_target(const Target& t, const Eigen::MatrixXd& X) {
  Eigen::VectorXd m(X.rows());
  std::vector<double> row(X.cols());
  for (long i = 0; i < X.rows(); ++i) {
    for (long j = 0; j < X.cols(); ++j) row[j] = X(i, j);
    m(i) = t(row);
  }
  return m;
}

struct LambdaCalibration {
  double lambda = 0;
  std::vector<double> piece_iqr;   // median over repeats, NaN when the piece was excluded
  std::vector<long> piece_samples; // total samples over all repeats
  std::vector<std::string> warnings;
};

// Per region: IQR of m(X) over the uniform draws falling in it, stabilized by
// the median over repeats; lambda is the average over the regions kept.
inline LambdaCalibration calibrate_lambda_detailed(const Target& t, long mc_samples, int mc_repeats,
                                                   std::uint64_t seed, int threads = 1) {
  if (mc_samples < 1000) throw std::invalid_argument("lambda calibration needs at least 1000 samples");
  if (mc_repeats < 1) throw std::invalid_argument("lambda calibration needs at least one repeat");
  const int P = t.piece_count;
  // iqrs[rep][piece], NaN when the piece got fewer than 30 samples in that repeat
  std::vector<std::vector<double>> iqrs(mc_repeats, std::vector<double>(P, std::nan("")));
  std::vector<std::vector<long>> counts(mc_repeats, std::vector<long>(P, 0));
  parallel_for(mc_repeats, threads, [&](int rep) {
    auto rng = make_rng(derive_seed(seed, {0x1a4bdaULL, static_cast<std::uint64_t>(rep)}));
    std::vector<std::vector<double>> vals(P);
    std::vector<double> x(t.dim);
    for (long s = 0; s < mc_samples; ++s) {
      draw_uniform_box(t, rng, x.data());
      int p = t.piece_of(x);
      if (p < 0 || p >= P) continue;
      vals[p].push_back(t(x));
    }
    for (int p = 0; p < P; ++p) {
      counts[rep][p] = static_cast<long>(vals[p].size());
      if (vals[p].size() >= 30) iqrs[rep][p] = iqr(vals[p]);
    }
  });

  LambdaCalibration out;
  std::vector<double> kept;
  for (int p = 0; p < P; ++p) {
    std::vector<double> v;
    long total = 0;
    for (int rep = 0; rep < mc_repeats; ++rep) {
      total += counts[rep][p];
      if (!std::isnan(iqrs[rep][p])) v.push_back(iqrs[rep][p]);
    }
    out.piece_samples.push_back(total);
    if (v.empty()) {
      out.warnings.push_back("region " + std::to_string(p) + " excluded: fewer than 30 samples");
      out.piece_iqr.push_back(std::nan(""));
      continue;
    }
    double med = median(v);
    out.piece_iqr.push_back(med);
    kept.push_back(med);
  }
  if (kept.empty()) throw std::runtime_error("no region received enough samples for lambda calibration");
  out.lambda = mean(kept);
  return out;
}

inline double calibrate_lambda(const Target& t, long mc_samples, int mc_repeats, std::uint64_t seed) {
  return calibrate_lambda_detailed(t, mc_samples, mc_repeats, seed, default_threads()).lambda;
}

// Y = m(X) + sigma * lambda * eps with X uniform on the target's box.
inline Dataset generate(const Target& t, long n, double sigma, double lambda, std::uint64_t seed) {
  if (!(sigma >= 0)) throw std::invalid_argument("noise level must be >= 0");
  if (n < 1) throw std::invalid_argument("sample size must be >= 1");
  auto rng = make_rng(seed);
  Dataset D;
  D.X = sample_inputs(t, n, rng);
  D.Y = evaluate_target(t, D.X);
  std::normal_distribution<double> eps(0.0, 1.0);
  const double sd = sigma * lambda;
  for (long i = 0; i < n; ++i) {
    double e = eps(rng);
    if (sd > 0) D.Y(i) += sd * e;
  }
  return D;
}

struct EvalSet {
  Eigen::MatrixXd X;
  Eigen::VectorXd m;
};

inline EvalSet make_eval_set(const Target& t, long N, std::uint64_t seed) {
  auto rng = make_rng(seed);
  EvalSet e;
  e.X = sample_inputs(t, N, rng);
  e.m = evaluate_target(t, e.X);
  return e;
}

// (1/N) sum (m_n(X_k) - m(X_k))^2 over the evaluation inputs
inline double l2_error(const Predictor& p, const EvalSet& e) {
  return (p.predict_batch(e.X) - e.m).squaredNorm() / double(e.X.rows());
}

// Median over `realizations` of the error of the constant predictor equal to
// the mean of n fresh noisy observations.
inline double average_normalizer(const Target& t, long n, double noise_sd, const EvalSet& e, std::uint64_t seed,
                                 int realizations = 50) {
  std::vector<double> errs;
  for (int k = 0; k < realizations; ++k) {
    auto rng = make_rng(derive_seed(seed, {0xa7eULL, static_cast<std::uint64_t>(k)}));
    Eigen::MatrixXd X = sample_inputs(t, n, rng);
    Eigen::VectorXd Y = evaluate_target(t, X);
    std::normal_distribution<double> eps(0.0, 1.0);
    for (long i = 0; i < n; ++i) {
      double z = eps(rng);
      if (noise_sd > 0) Y(i) += noise_sd * z;
    }
    ConstantPredictor c(Y.mean());
    errs.push_back(l2_error(c, e));
  }
  return median(errs);
}

struct NormalizedError {
  double ratio = 0, error = 0, normalizer = 0;
};

inline NormalizedError normalized_error(const Predictor& p, const Target& t, long n_train_used, long N_eval,
                                        std::uint64_t seed, double noise_sd = 0.0) {
  if (N_eval < 1000) throw std::invalid_argument("N_eval must be >= 1000");
  EvalSet e = make_eval_set(t, N_eval, derive_seed(seed, {0xe7a1ULL}));
  NormalizedError r;
  r.error = l2_error(p, e);
  r.normalizer = average_normalizer(t, n_train_used, noise_sd, e, derive_seed(seed, {0xde9ULL}));
  r.ratio = r.error / r.normalizer;
  return r;
}

struct EstimatorGrids {
  std::vector<int> sc_L{1, 3}, sc_r{3, 6}, sc_mstar{1, 2, 4};
  std::vector<int> fc_L{1, 2, 4}, fc_r{2, 4, 6};
  std::vector<double> rbf_radii = default_radius_candidates();
  int mars_max_basis = 21;
  double mars_penalty = 3.0;
  int restarts = 1;
  int max_iters = 500;

  static EstimatorGrids full_scale() {
    EstimatorGrids g;
    g.sc_L = {1, 3, 6};
    g.sc_r = {3, 6, 10};
    g.sc_mstar = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    g.fc_L = {1, 2, 4, 6, 8, 10, 12};
    g.fc_r = {1, 2, 3, 4, 5, 6, 8, 10};
    return g;
  }
};

inline json to_json(const EstimatorGrids& g) {
  return {{"sc_L", g.sc_L},       {"sc_r", g.sc_r},         {"sc_mstar", g.sc_mstar},
          {"fc_L", g.fc_L},       {"fc_r", g.fc_r},         {"rbf_radii", g.rbf_radii},
          {"mars_max_basis", g.mars_max_basis}, {"mars_penalty", g.mars_penalty},
          {"restarts", g.restarts}, {"max_iters", g.max_iters}};
}

inline void grids_from_json(const json& j, EstimatorGrids& g) {
  g.sc_L = j.value("sc_L", g.sc_L);
  g.sc_r = j.value("sc_r", g.sc_r);
  g.sc_mstar = j.value("sc_mstar", g.sc_mstar);
  g.fc_L = j.value("fc_L", g.fc_L);
  g.fc_r = j.value("fc_r", g.fc_r);
  g.rbf_radii = j.value("rbf_radii", g.rbf_radii);
  g.mars_max_basis = j.value("mars_max_basis", g.mars_max_basis);
  g.mars_penalty = j.value("mars_penalty", g.mars_penalty);
  g.restarts = j.value("restarts", g.restarts);
  g.max_iters = j.value("max_iters", g.max_iters);
}

struct ExperimentConfig {
  std::string target = "m1";
  long n = 100;
  double noise_sigma = 0.05;
  int repetitions = 5;
  long N_eval = 10000;
  std::vector<std::string> estimators{"neural-sc", "knn"};
  std::uint64_t seed = 1;
  long lambda_mc_samples = 10000;
  int lambda_mc_repeats = 10;
  double lambda = -1;  // < 0: calibrate
  double split_fraction = 0.8;
  int normalizer_realizations = 50;
  int threads = 0;  // 0: hardware concurrency; does not affect results
  EstimatorGrids grids;

  void validate() const {
    if (n < 10) throw std::invalid_argument("n must be >= 10");
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (N_eval < 1000) throw std::invalid_argument("N_eval must be >= 1000");
    if (!(noise_sigma >= 0)) throw std::invalid_argument("noise_sigma must be >= 0");
    if (estimators.empty()) throw std::invalid_argument("no estimators configured");
    for (const auto& e : estimators)
      if (e != "neural-sc" && e != "neural-fc" && e != "knn" && e != "rbf" && e != "mars" && e != "mean")
        throw std::invalid_argument("unknown estimator '" + e + "'");
  }

  // paper-size evaluation grid, repetitions, calibration and parameter grids
  void apply_full_scale() {
    N_eval = 100000;
    repetitions = 50;
    lambda_mc_samples = 100000;
    lambda_mc_repeats = 100;
    grids = EstimatorGrids::full_scale();
  }
};

inline json to_json(const ExperimentConfig& c) {
  return {{"target", c.target},
          {"n", c.n},
          {"noise_sigma", c.noise_sigma},
          {"repetitions", c.repetitions},
          {"N_eval", c.N_eval},
          {"estimators", c.estimators},
          {"seed", c.seed},
          {"lambda_mc_samples", c.lambda_mc_samples},
          {"lambda_mc_repeats", c.lambda_mc_repeats},
          {"lambda", c.lambda},
          {"split_fraction", c.split_fraction},
          {"normalizer_realizations", c.normalizer_realizations},
          {"grids", to_json(c.grids)}};
}

inline ExperimentConfig experiment_config_from_json(const json& j, bool full_scale = false) {
  ExperimentConfig c;
  if (full_scale) c.apply_full_scale();
  c.target = j.value("target", c.target);
  c.n = j.value("n", c.n);
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.repetitions = j.value("repetitions", c.repetitions);
  c.N_eval = j.value("N_eval", c.N_eval);
  c.estimators = j.value("estimators", c.estimators);
  c.seed = j.value("seed", c.seed);
  c.lambda_mc_samples = j.value("lambda_mc_samples", c.lambda_mc_samples);
  c.lambda_mc_repeats = j.value("lambda_mc_repeats", c.lambda_mc_repeats);
  c.lambda = j.value("lambda", c.lambda);
  c.split_fraction = j.value("split_fraction", c.split_fraction);
  c.normalizer_realizations = j.value("normalizer_realizations", c.normalizer_realizations);
  c.threads = j.value("threads", c.threads);
  if (j.contains("grids")) grids_from_json(j.at("grids"), c.grids);
  c.validate();
  return c;
}

struct EstimatorResult {
  std::string name;
  std::vector<double> errors;  // NaN marks a failed repetition
  double median = std::nan("");
  double iqr = std::nan("");
  int missing = 0;
  std::vector<json> selections;
};

struct ResultTable {
  ExperimentConfig config;
  double lambda = 0;
  double normalizer = 0;
  long clamp_events = 0;
  std::vector<EstimatorResult> estimators;
  std::vector<std::string> warnings;
};

inline json to_json(const ResultTable& t) {
  json ests = json::array();
  for (const auto& e : t.estimators) {
    json errs = json::array();
    for (double v : e.errors) errs.push_back(std::isnan(v) ? json(nullptr) : json(v));
    ests.push_back({{"name", e.name}, {"errors", errs},   {"median", e.median},
                    {"iqr", e.iqr},   {"missing", e.missing}, {"selections", e.selections}});
  }
  return {{"schema", kResultsSchema}, {"version", kResultsVersion}, {"config", to_json(t.config)},
          {"lambda", t.lambda},       {"normalizer", t.normalizer}, {"clamp_events", t.clamp_events},
          {"estimators", ests},       {"warnings", t.warnings}};
}

inline ResultTable result_table_from_json(const json& j) {
  if (j.value("schema", "") != kResultsSchema) throw std::invalid_argument("not a results file");
  if (j.value("version", 0) != kResultsVersion) throw std::invalid_argument("unsupported results version");
  ResultTable t;
  t.config = experiment_config_from_json(j.at("config"));
  t.lambda = j.at("lambda").get<double>();
  t.normalizer = j.at("normalizer").get<double>();
  t.clamp_events = j.value("clamp_events", 0L);
  for (const auto& e : j.at("estimators")) {
    EstimatorResult r;
    r.name = e.at("name").get<std::string>();
    for (const auto& v : e.at("errors")) r.errors.push_back(v.is_null() ? std::nan("") : v.get<double>());
    r.median = e.at("median").is_null() ? std::nan("") : e.at("median").get<double>();
    r.iqr = e.at("iqr").is_null() ? std::nan("") : e.at("iqr").get<double>();
    r.missing = e.value("missing", 0);
    t.estimators.push_back(std::move(r));
  }
  t.warnings = j.value("warnings", std::vector<std::string>{});
  return t;
}

struct FittedEstimator {
  PredictorPtr predictor;
  json selection;
};

// Fits one named estimator with its parameter grid.
inline FittedEstimator fit_estimator(const std::string& name, const Dataset& data, const EstimatorGrids& g,
                                     double split_fraction, std::uint64_t seed) {
  FitConfig cfg;
  cfg.alpha = default_alpha(data.n());
  cfg.beta = default_beta(data.n());
  cfg.restarts = g.restarts;
  cfg.max_iters = g.max_iters;
  cfg.seed = seed;
  FittedEstimator out;
  if (name == "mean") {
    out.predictor = fit_mean(data);
  } else if (name == "knn") {
    long n_learn = static_cast<long>(std::ceil(split_fraction * double(data.n()) - 1e-9));
    auto f = fit_knn_detailed(data, default_k_candidates(n_learn), split_fraction);
    out.predictor = f.predictor;
    out.selection = {{"k", f.predictor->k()}};
  } else if (name == "rbf") {
    auto f = fit_rbf_detailed(data, g.rbf_radii, split_fraction);
    out.predictor = f.predictor;
    out.selection = {{"radius", f.predictor->radius()}};
  } else if (name == "mars") {
    MarsOptions o;
    o.max_basis = g.mars_max_basis;
    o.gcv_penalty = g.mars_penalty;
    auto m = std::make_shared<MarsModel>(fit_mars(data, o));
    out.selection = {{"terms", m->terms().size()}, {"gcv", m->gcv()}};
    out.predictor = m;
  } else if (name == "neural-fc") {
    auto f = fit_fcnn_detailed(data, g.fc_L, g.fc_r, cfg, split_fraction);
    out.predictor = f.predictor;
    out.selection = f.candidates.at(f.chosen);
  } else if (name == "neural-sc") {
    auto f = fit_neural_sc_detailed(data, g.sc_L, g.sc_r, g.sc_mstar, cfg, split_fraction);
    out.predictor = f.predictor;
    out.selection = f.candidates.at(f.chosen);
  } else {
    throw std::invalid_argument("unknown estimator '" + name + "'");
  }
  return out;
}

inline ResultTable run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  Target t = make_target(cfg.target);
  ResultTable table;
  table.config = cfg;
  const int threads = cfg.threads > 0 ? cfg.threads : default_threads();

  if (cfg.lambda >= 0) {
    table.lambda = cfg.lambda;
  } else {
    auto cal = calibrate_lambda_detailed(t, cfg.lambda_mc_samples, cfg.lambda_mc_repeats,
                                         derive_seed(cfg.seed, {0xca1ULL}), threads);
    table.lambda = cal.lambda;
    for (auto& w : cal.warnings) table.warnings.push_back(w);
  }
  const double noise_sd = cfg.noise_sigma * table.lambda;
  EvalSet eval = make_eval_set(t, cfg.N_eval, derive_seed(cfg.seed, {0xe7a1ULL}));
  table.normalizer =
      average_normalizer(t, cfg.n, noise_sd, eval, derive_seed(cfg.seed, {0xde9ULL}), cfg.normalizer_realizations);

  const int E = static_cast<int>(cfg.estimators.size());
  const int R = cfg.repetitions;
  std::vector<std::vector<double>> errs(E, std::vector<double>(R, std::nan("")));
  std::vector<std::vector<json>> sels(E, std::vector<json>(R));
  std::vector<std::vector<std::string>> fails(R);
  parallel_for(R, threads, [&](int rep) {
    Dataset D = generate(t, cfg.n, cfg.noise_sigma, table.lambda, derive_seed(cfg.seed, {0xda7aULL, std::uint64_t(rep)}));
    for (int e = 0; e < E; ++e) {
      try {
        auto fe = fit_estimator(cfg.estimators[e], D, cfg.grids, cfg.split_fraction,
                                derive_seed(cfg.seed, {0xf17ULL, std::uint64_t(rep), std::uint64_t(e)}));
        double err = l2_error(*fe.predictor, eval) / table.normalizer;
        if (std::isfinite(err)) errs[e][rep] = err;
        sels[e][rep] = fe.selection;
      } catch (const std::exception& ex) {
        fails[rep].push_back(cfg.estimators[e] + " failed in repetition " + std::to_string(rep) + ": " + ex.what());
      }
    }
  });

  for (int e = 0; e < E; ++e) {
    EstimatorResult r;
    r.name = cfg.estimators[e];
    r.errors = errs[e];
    r.selections = sels[e];
    std::vector<double> ok;
    for (double v : errs[e])
      if (std::isnan(v)) ++r.missing;
      else ok.push_back(v);
    if (!ok.empty()) {
      r.median = median(ok);
      r.iqr = iqr(ok);
    }
    table.estimators.push_back(std::move(r));
  }
  for (auto& f : fails)
    for (auto& w : f) table.warnings.push_back(w);
  table.clamp_events = t.clamp_events->load();
  return table;
}

}  // namespace locdim
