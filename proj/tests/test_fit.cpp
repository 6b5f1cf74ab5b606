#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "locdim/fit.hpp"

using namespace locdim;

namespace {

template <class Net>
void randomize(Net& net, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  net.for_each_parameter([&](double& v) { v = u(rng); });
}

Dataset noisy_data(int n, int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset D{Eigen::MatrixXd(n, d), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) D.X(i, j) = u(rng);
    D.Y(i) = 2.0 * u(rng) - 1.0;
  }
  return D;
}

template <class Net>
Eigen::VectorXd central_differences(const Net& net, const Dataset& D, double h) {
  Net probe = net;
  Eigen::VectorXd theta = get_parameters(net);
  Eigen::VectorXd fd(theta.size());
  for (long i = 0; i < theta.size(); ++i) {
    Eigen::VectorXd tp = theta, tm = theta;
    tp(i) += h;
    tm(i) -= h;
    set_parameters(probe, tp);
    double fp = empirical_risk(probe, D);
    set_parameters(probe, tm);
    double fm = empirical_risk(probe, D);
    fd(i) = (fp - fm) / (2 * h);
  }
  return fd;
}

double max_rel_dev(const Eigen::VectorXd& g, const Eigen::VectorXd& fd) {
  double m = 0;
  for (long i = 0; i < g.size(); ++i) m = std::max(m, std::abs(g(i) - fd(i)) / std::max(std::abs(fd(i)), 1e-4));
  return m;
}

}  // namespace

TEST(EmpiricalRisk, ZeroNetAgainstOnes) {
  DenseNetwork net(1, 1, 2, 10.0);
  Dataset D{Eigen::MatrixXd::Zero(2, 1), Eigen::VectorXd::Ones(2)};
  EXPECT_DOUBLE_EQ(empirical_risk(net, D), 1.0);
}

TEST(EmpiricalRisk, InterpolatingNetHasZeroRisk) {
  DenseNetwork net(2, 1, 3, 10.0);
  net.layers().back().b(0) = 0.75;
  Dataset D{Eigen::MatrixXd::Random(4, 2), Eigen::VectorXd::Constant(4, 0.75)};
  EXPECT_EQ(empirical_risk(net, D), 0.0);
}

TEST(EmpiricalRisk, MatchesHandLoop) {
  std::mt19937_64 rng(3);
  DenseNetwork net(2, 2, 3, 10.0);
  randomize(net, rng, 1.0);
  Dataset D = noisy_data(3, 2, rng);
  double s = 0;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> x{D.X(i, 0), D.X(i, 1)};
    double e = D.Y(i) - net(x);
    s += e * e;
  }
  EXPECT_NEAR(empirical_risk(net, D), s / 3.0, 1e-12);
  EXPECT_THROW(empirical_risk(net, Dataset{Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)}), std::invalid_argument);
}

TEST(Gradient, DenseMatchesCentralDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dd(1, 3), ll(1, 2), rr(1, 4);
  for (int trial = 0; trial < 20; ++trial) {
    DenseNetwork net(dd(rng), ll(rng), rr(rng), 10.0);
    randomize(net, rng, 1.5);
    Dataset D = noisy_data(7, net.input_dim(), rng);
    Eigen::VectorXd g = gradient(net, D);
    ASSERT_EQ(g.size(), net.parameter_count());
    EXPECT_LE(max_rel_dev(g, central_differences(net, D, 1e-6)), 1e-5) << "trial " << trial;
  }
}

TEST(Gradient, SparseMatchesCentralDifferences) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> dd(1, 3), ll(1, 2), rr(1, 4), mm(1, 3);
  for (int trial = 0; trial < 20; ++trial) {
    SparseAdditiveNetwork net(dd(rng), ll(rng), rr(rng), mm(rng), 10.0);
    randomize(net, rng, 1.5);
    Dataset D = noisy_data(6, net.input_dim(), rng);
    Eigen::VectorXd g = gradient(net, D);
    ASSERT_EQ(g.size(), net.parameter_count());
    EXPECT_LE(max_rel_dev(g, central_differences(net, D, 1e-6)), 1e-5) << "trial " << trial;
  }
}

TEST(Gradient, ZeroWeightsSingleSample) {
  DenseNetwork net(2, 2, 3, 10.0);
  Dataset D{Eigen::MatrixXd(1, 2), Eigen::VectorXd::Zero(1)};
  D.X << 0.3, -0.7;
  Eigen::VectorXd g = gradient(net, D);
  // the output is 0 = y, so the residual and every component vanish
  EXPECT_EQ(g.cwiseAbs().maxCoeff(), 0.0);
  D.Y(0) = 1.0;
  g = gradient(net, D);
  EXPECT_LE(max_rel_dev(g, central_differences(net, D, 1e-6)), 1e-5);
  // output bias gradient is 2 (f - y) = -2; output weights see a = 1/2
  long P = g.size();
  EXPECT_NEAR(g(P - 1), -2.0, 1e-12);
  EXPECT_NEAR(g(P - 2), -1.0, 1e-12);
}

TEST(Gradient, DuplicatedSampleEqualsSingle) {
  std::mt19937_64 rng(5);
  SparseAdditiveNetwork net(2, 2, 3, 2, 10.0);
  randomize(net, rng, 1.0);
  Dataset one = noisy_data(1, 2, rng);
  Dataset two{Eigen::MatrixXd(2, 2), Eigen::VectorXd(2)};
  two.X << one.X, one.X;
  two.Y << one.Y, one.Y;
  Eigen::VectorXd g1 = gradient(net, one), g2 = gradient(net, two);
  for (long i = 0; i < g1.size(); ++i) EXPECT_EQ(g1(i), g2(i)) << i;
}

TEST(Gradient, ScalesWithTargetsForZeroNet) {
  std::mt19937_64 rng(6);
  DenseNetwork net(2, 1, 3, 10.0);
  Dataset D = noisy_data(5, 2, rng);
  Dataset D2 = D;
  D2.Y *= 2.0;
  Eigen::VectorXd g = gradient(net, D), g2 = gradient(net, D2);
  for (long i = 0; i < g.size(); ++i) EXPECT_DOUBLE_EQ(g2(i), 2.0 * g(i));
}

TEST(Train, RealizableTargetReachesTinyRisk) {
  std::mt19937_64 rng(21);
  DenseNetwork teacher(1, 1, 3, 10.0);
  randomize(teacher, rng, 2.0);
  Dataset D{Eigen::MatrixXd(50, 1), Eigen::VectorXd(50)};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    D.X(i, 0) = u(rng);
    D.Y(i) = teacher(std::vector<double>{D.X(i, 0)});
  }
  FitConfig cfg;
  cfg.L = 1;
  cfg.r = 3;
  cfg.alpha = default_alpha(50);
  cfg.restarts = 5;
  cfg.seed = 7;
  DenseNetwork student(1, 1, 3, cfg.alpha);
  FitReport rep = train(student, D, cfg);
  EXPECT_LE(rep.final_risk, 1e-6);
  for (size_t i = 1; i < rep.risk_trace.size(); ++i) EXPECT_LE(rep.risk_trace[i], rep.risk_trace[i - 1]);
}

TEST(Train, ConstantTargetsAreFitByTheBias) {
  std::mt19937_64 rng(22);
  Dataset D = noisy_data(30, 2, rng);
  D.Y.setConstant(1.7);
  FitConfig cfg;
  cfg.L = 1;
  cfg.r = 2;
  cfg.seed = 1;
  SparseAdditiveNetwork net(2, 1, 2, 2, cfg.alpha);
  FitReport rep = train(net, D, cfg);
  EXPECT_LE(rep.final_risk, 1e-8);
}

TEST(Train, ZeroIterationsLeavesNetUnchanged) {
  std::mt19937_64 rng(23);
  DenseNetwork net(2, 1, 3, 10.0);
  randomize(net, rng, 1.0);
  Eigen::VectorXd before = get_parameters(net);
  Dataset D = noisy_data(10, 2, rng);
  FitConfig cfg;
  cfg.max_iters = 0;
  FitReport rep = train(net, D, cfg);
  EXPECT_EQ(get_parameters(net), before);
  EXPECT_EQ(rep.final_risk, empirical_risk(net, D));
}

TEST(Train, RespectsWeightBoundAndReportsTrueRisk) {
  std::mt19937_64 rng(24);
  Dataset D = noisy_data(40, 2, rng);
  D.Y *= 20.0;  // large targets push weights toward the bound
  for (double alpha : {0.3, 2.0, 1e3}) {
    FitConfig cfg;
    cfg.alpha = alpha;
    cfg.r = 3;
    cfg.restarts = 2;
    cfg.max_iters = 200;
    SparseAdditiveNetwork net(2, 1, 3, 2, alpha);
    FitReport rep = train(net, D, cfg);
    EXPECT_LE(net.max_abs_weight(), alpha);
    EXPECT_NEAR(rep.final_risk, empirical_risk(net, D), 1e-10);
    for (size_t i = 1; i < rep.risk_trace.size(); ++i) EXPECT_LE(rep.risk_trace[i], rep.risk_trace[i - 1]);
  }
}

TEST(Train, DeterministicUnderSeed) {
  std::mt19937_64 rng(25);
  Dataset D = noisy_data(25, 2, rng);
  FitConfig cfg;
  cfg.restarts = 2;
  cfg.max_iters = 50;
  cfg.seed = 99;
  DenseNetwork a(2, 1, 3, cfg.alpha), b(2, 1, 3, cfg.alpha);
  train(a, D, cfg);
  train(b, D, cfg);
  EXPECT_EQ(get_parameters(a), get_parameters(b));
}

TEST(Truncate, ClampsToBeta) {
  DenseNetwork net(1, 1, 1, 10.0);
  std::vector<double> x{0.0};
  net.layers().back().b(0) = 5.0;
  EXPECT_EQ(truncate_predict(net, 3.0, x), 3.0);
  net.layers().back().b(0) = -5.0;
  EXPECT_EQ(truncate_predict(net, 3.0, x), -3.0);
  net.layers().back().b(0) = 1.25;
  EXPECT_EQ(truncate_predict(net, 3.0, x), 1.25);
  EXPECT_THROW(truncate_predict(net, 0.0, x), std::invalid_argument);
}

TEST(SelectModel, SingleCandidate) {
  std::mt19937_64 rng(31);
  Dataset D = noisy_data(20, 2, rng);
  FitConfig cfg;
  cfg.max_iters = 30;
  auto sel = select_model(D, {3}, cfg, 0.8);
  EXPECT_EQ(sel.params.Mstar, 3);
  EXPECT_EQ(sel.chosen, 0);
  EXPECT_EQ(sel.net.subnet_count(), 3);
}

TEST(SelectModel, ChoiceIsArgminOfTestRisks) {
  std::mt19937_64 rng(32);
  // target realized by a single subnet; noise free
  DenseNetwork teacher(2, 1, 2, 10.0);
  randomize(teacher, rng, 2.0);
  Dataset D = noisy_data(60, 2, rng);
  for (int i = 0; i < 60; ++i) D.Y(i) = teacher(std::vector<double>{D.X(i, 0), D.X(i, 1)});
  FitConfig cfg;
  cfg.r = 2;
  cfg.restarts = 2;
  cfg.max_iters = 200;
  auto sel = select_model(D, {4, 1}, cfg, 0.8);
  ASSERT_EQ(sel.test_risks.size(), 2u);
  EXPECT_EQ(sel.candidates[0].Mstar, 1);
  size_t arg = 0;
  for (size_t i = 1; i < sel.test_risks.size(); ++i)
    if (sel.test_risks[i] < sel.test_risks[arg]) arg = i;
  EXPECT_EQ(static_cast<size_t>(sel.chosen), arg);
  for (double r : sel.test_risks) EXPECT_LE(sel.test_risks[sel.chosen], r);
}

TEST(SelectModel, DeterministicGivenSeed) {
  std::mt19937_64 rng(33);
  Dataset D = noisy_data(30, 2, rng);
  FitConfig cfg;
  cfg.max_iters = 40;
  cfg.seed = 4;
  auto a = select_model(D, {1, 2}, cfg, 0.8);
  auto b = select_model(D, {1, 2}, cfg, 0.8);
  EXPECT_EQ(a.params.Mstar, b.params.Mstar);
  EXPECT_EQ(get_parameters(a.net), get_parameters(b.net));
}

TEST(SelectModel, ArgumentErrors) {
  std::mt19937_64 rng(34);
  Dataset D = noisy_data(3, 1, rng);
  FitConfig cfg;
  EXPECT_THROW(select_model(D, {}, cfg, 0.8), std::invalid_argument);
  // ceil(0.8 * 3) = 3 leaves nothing to test on
  EXPECT_THROW(select_model(D, {1}, cfg, 0.8), std::invalid_argument);
  EXPECT_THROW(select_model(D, {1}, cfg, 1.0), std::invalid_argument);
}

TEST(SelectModel, DefaultCandidatesArePowersOfTwo) {
  EXPECT_EQ(default_mstar_candidates(100), (std::vector<int>{2, 4, 8, 16, 32, 64, 128}));
  EXPECT_EQ(default_mstar_candidates(8), (std::vector<int>{2, 4, 8}));
}

TEST(FitReport, SerializesToJson) {
  FitReport r;
  r.final_risk = 0.5;
  r.iterations = 3;
  r.risk_trace = {1.0, 0.5};
  json j = to_json(r);
  EXPECT_EQ(j["iterations"], 3);
  EXPECT_EQ(j["risk_trace"].size(), 2u);
  FitConfig c = fit_config_from_json(json{{"L", 2}, {"r", 4}, {"restarts", 3}});
  EXPECT_EQ(c.L, 2);
  EXPECT_EQ(c.restarts, 3);
  EXPECT_THROW(fit_config_from_json(json{{"beta", -1.0}}), std::invalid_argument);
}
