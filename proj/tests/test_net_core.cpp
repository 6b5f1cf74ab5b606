#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "locdim/activation.hpp"
#include "locdim/constructive/builders.hpp"
#include "locdim/network.hpp"
#include "locdim/network_io.hpp"

using namespace locdim;

namespace {

DenseNetwork random_dense(int d, int L, int r, std::mt19937_64& rng, double scale = 1.0) {
  DenseNetwork net(d, L, r, 10.0);
  std::uniform_real_distribution<double> u(-scale, scale);
  net.for_each_parameter([&](double& v) { v = u(rng); });
  return net;
}

// plain loops, independent of the Eigen path
double reference_forward(const DenseNetwork& net, const std::vector<double>& x) {
  std::vector<double> a = x;
  const auto& ls = net.layers();
  for (int l = 0; l < net.hidden_layers(); ++l) {
    std::vector<double> z(ls[l].W.rows());
    for (long i = 0; i < ls[l].W.rows(); ++i) {
      double s = ls[l].b(i);
      for (long j = 0; j < ls[l].W.cols(); ++j) s += ls[l].W(i, j) * a[j];
      z[i] = 1.0 / (1.0 + std::exp(-s));
    }
    a = z;
  }
  double s = ls.back().b(0);
  for (size_t j = 0; j < a.size(); ++j) s += ls.back().W(0, j) * a[j];
  return s;
}

}  // namespace

TEST(Activation, ClosedFormValuesAtZero) {
  Activation act;
  EXPECT_DOUBLE_EQ(activation_eval(act, 0.0, 0), 0.5);
  EXPECT_DOUBLE_EQ(activation_eval(act, 0.0, 1), 0.25);
  EXPECT_DOUBLE_EQ(activation_eval(act, 0.0, 2), 0.0);
  EXPECT_THROW(activation_eval(act, 0.0, 4), std::invalid_argument);
  EXPECT_THROW(activation_eval(act, 0.0, -1), std::invalid_argument);
}

TEST(Activation, SecondDerivativeAtOneMatchesCentralDifference) {
  double h = 1e-4;
  double fd = (Activation::d1(1.0 + h) - Activation::d1(1.0 - h)) / (2 * h);
  EXPECT_NEAR(Activation::d2(1.0), fd, 1e-6);
  EXPECT_NEAR(Activation::d2(1.0), -0.0908577476, 1e-9);
}

TEST(Activation, DerivativesMatchFiniteDifferencesOnGrid) {
  double h = 1e-4;
  for (double x = -5.0; x <= 5.0; x += 0.01) {
    for (int k = 1; k <= 3; ++k) {
      double fd = (Activation::derivative(k - 1, x + h) - Activation::derivative(k - 1, x - h)) / (2 * h);
      EXPECT_NEAR(Activation::derivative(k, x), fd, 1e-6) << "order " << k << " at " << x;
    }
  }
}

TEST(Activation, OutputInUnitInterval) {
  for (double x : {-1e300, -800.0, -30.0, 0.0, 30.0, 800.0, 1e300}) {
    double s = Activation::value(x);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(Activation, SupNormsMatchGridMaximum) {
  double m1 = 0, m2 = 0, m3 = 0;
  for (double x = -20.0; x <= 20.0; x += 1e-4) {
    m1 = std::max(m1, std::abs(Activation::d1(x)));
    m2 = std::max(m2, std::abs(Activation::d2(x)));
    m3 = std::max(m3, std::abs(Activation::d3(x)));
  }
  EXPECT_NEAR(m1, Activation::sup_d1(), 1e-6);
  EXPECT_NEAR(m2, Activation::sup_d2(), 1e-6);
  EXPECT_NEAR(m3, Activation::sup_d3(), 1e-6);
}

TEST(Activation, ConstructionRejectsVanishingDerivatives) {
  EXPECT_NO_THROW(Activation(0.0, 1.0));
  EXPECT_THROW(Activation(0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(Activation(1e6, 1.0), std::invalid_argument);
}

TEST(Activation, Admissibility) {
  Activation act;
  EXPECT_TRUE(check_admissible(act, 2, 1.0));
  EXPECT_FALSE(check_admissible(act, 2, 0.0));
  EXPECT_TRUE(check_admissible(act, 0, 0.0));
  EXPECT_TRUE(check_admissible(act, 1, 0.0));
}

TEST(DenseForward, ZeroWeightsGiveZero) {
  DenseNetwork net(3, 2, 4, 1.0);
  EXPECT_EQ(net(std::vector<double>{0.3, -2.0, 7.0}), 0.0);
}

TEST(DenseForward, SingleHiddenUnitWithZeroInputWeights) {
  DenseNetwork net(1, 1, 1, 5.0);
  net.layers()[1].W(0, 0) = 2.0;
  net.layers()[1].b(0) = -1.0;
  EXPECT_DOUBLE_EQ(net(std::vector<double>{1.7}), 0.0);
}

TEST(DenseForward, IdentityNetworkExample) {
  auto id = constructive::build_identity(100.0, 1.0);
  double y = id(std::vector<double>{0.3});
  EXPECT_NEAR(y, 0.3, 0.00481);
  EXPECT_NEAR(y, 0.3, id.theoretical_bound);
}

TEST(DenseForward, DimensionMismatchThrows) {
  DenseNetwork net(2, 1, 3, 1.0);
  EXPECT_THROW(net(std::vector<double>{1.0}), std::invalid_argument);
}

TEST(DenseForward, MatchesLoopReferenceAndIsRepeatable) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    auto net = random_dense(1 + t % 4, 1 + t % 3, 2 + t % 5, rng);
    std::uniform_real_distribution<double> u(-2, 2);
    std::vector<double> x(net.input_dim());
    for (auto& v : x) v = u(rng);
    double y1 = net(x), y2 = net(x);
    EXPECT_EQ(y1, y2);
    EXPECT_NEAR(y1, reference_forward(net, x), 1e-12);
    Eigen::MatrixXd X(1, net.input_dim());
    for (int j = 0; j < net.input_dim(); ++j) X(0, j) = x[j];
    EXPECT_NEAR(net.predict_batch(X)(0), y1, 1e-12);
  }
}

TEST(DenseNetwork, ConstructorChecksShapesAndBound) {
  std::vector<Layer> ls{{Eigen::MatrixXd::Zero(2, 1), Eigen::VectorXd::Zero(2)},
                        {Eigen::MatrixXd::Zero(1, 3), Eigen::VectorXd::Zero(1)}};
  EXPECT_THROW(DenseNetwork(ls, 1.0), std::invalid_argument);
  std::vector<Layer> ok{{Eigen::MatrixXd::Constant(2, 1, 3.0), Eigen::VectorXd::Zero(2)},
                        {Eigen::MatrixXd::Zero(1, 2), Eigen::VectorXd::Zero(1)}};
  EXPECT_THROW(DenseNetwork(ok, 1.0), std::invalid_argument);
  EXPECT_NO_THROW(DenseNetwork(ok, 3.0));
}

TEST(SparseForward, ZeroOuterWeights) {
  std::mt19937_64 rng(1);
  std::vector<DenseNetwork> subs{random_dense(2, 1, 3, rng), random_dense(2, 1, 3, rng), random_dense(2, 1, 3, rng)};
  SparseAdditiveNetwork net(subs, {0.0, 0.0, 0.0}, 10.0);
  EXPECT_EQ(net(std::vector<double>{0.2, 0.9}), 0.0);
}

TEST(SparseForward, SingleSubnetEqualsDense) {
  std::mt19937_64 rng(2);
  auto f = random_dense(3, 2, 4, rng);
  SparseAdditiveNetwork net({f}, {1.0}, 10.0);
  std::vector<double> x{0.1, -0.4, 0.8};
  EXPECT_EQ(net(x), f(x));
}

TEST(SparseForward, WeightedSumOfTwo) {
  std::mt19937_64 rng(3);
  auto f = random_dense(2, 2, 3, rng), g = random_dense(2, 2, 3, rng);
  SparseAdditiveNetwork net({f, g}, {2.0, -1.0}, 10.0);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x{u(rng), u(rng)};
    EXPECT_NEAR(net(x), 2.0 * f(x) - g(x), 1e-12);
  }
}

TEST(SparseForward, LinearInOuterWeights) {
  std::mt19937_64 rng(4);
  auto f = random_dense(2, 1, 3, rng), g = random_dense(2, 1, 3, rng);
  std::vector<double> mu1{0.7, -1.3}, mu2{2.1, 0.4}, mus{2.8, -0.9};
  SparseAdditiveNetwork a({f, g}, mu1, 10.0), b({f, g}, mu2, 10.0), c({f, g}, mus, 10.0);
  std::vector<double> x{0.3, 0.6};
  EXPECT_NEAR(c(x), a(x) + b(x), 1e-12 * std::max(1.0, std::abs(c(x))));
}

TEST(SparseNetwork, RejectsEmptyAndMismatchedSubnets) {
  EXPECT_THROW(SparseAdditiveNetwork({}, {}, 1.0), std::invalid_argument);
  DenseNetwork a(2, 1, 3, 1.0), b(2, 1, 4, 1.0);
  EXPECT_THROW(SparseAdditiveNetwork({a, b}, {0.0, 0.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(SparseAdditiveNetwork({a}, {2.0}, 1.0), std::invalid_argument);
}

TEST(ParameterCount, HandCountedValues) {
  EXPECT_EQ(SparseAdditiveNetwork::parameter_count(2, 1, 3, 1), 14);
  EXPECT_EQ(SparseAdditiveNetwork::parameter_count(1, 1, 1, 1), 5);
  for (int k = 1; k <= 5; ++k)
    EXPECT_EQ(SparseAdditiveNetwork::parameter_count(4, 3, 5, k), k * SparseAdditiveNetwork::parameter_count(4, 3, 5, 1));
}

TEST(ParameterCount, AgreesWithParameterWalk) {
  for (int d : {1, 3})
    for (int L : {1, 2, 4})
      for (int r : {1, 5})
        for (int M : {1, 3}) {
          SparseAdditiveNetwork net(d, L, r, M, 1.0);
          long walked = 0;
          net.for_each_parameter([&](double&) { ++walked; });
          EXPECT_EQ(walked, SparseAdditiveNetwork::parameter_count(d, L, r, M));
          EXPECT_EQ(get_parameters(net).size(), walked);
        }
}

TEST(ProjectWeights, Clamping) {
  std::mt19937_64 rng(5);
  auto net = random_dense(2, 2, 3, rng, 0.5);
  auto before = get_parameters(net);
  EXPECT_EQ(project_weights(net, 1.0), 0);
  EXPECT_EQ(get_parameters(net), before);

  net.layers()[1].W(0, 1) = 2.0;
  EXPECT_EQ(project_weights(net, 1.0), 1);
  EXPECT_EQ(net.layers()[1].W(0, 1), 1.0);

  auto big = random_dense(3, 2, 4, rng, 100.0);
  EXPECT_EQ(project_weights(big, 1e308), 0);

  SparseAdditiveNetwork s(2, 1, 2, 2, 5.0);
  s.mu() = {4.0, -3.0};
  EXPECT_EQ(project_weights(s, 2.0), 2);
  EXPECT_EQ(s.mu()[0], 2.0);
  EXPECT_EQ(s.mu()[1], -2.0);
}

TEST(NetworkJson, RoundTripIsExact) {
  std::mt19937_64 rng(6);
  std::vector<DenseNetwork> subs{random_dense(3, 2, 4, rng), random_dense(3, 2, 4, rng)};
  SparseAdditiveNetwork net(subs, {0.123456789012345678, -2.5}, 10.0);
  std::string text = dump_json(to_json(net));
  auto back = sparse_from_json(json::parse(text));
  EXPECT_EQ(get_parameters(back), get_parameters(net));
  EXPECT_EQ(dump_json(to_json(back)), text);

  auto d = subs[0];
  auto dback = dense_from_json(json::parse(dump_json(to_json(d))));
  EXPECT_EQ(get_parameters(dback), get_parameters(d));
}

TEST(NetworkJson, RejectsWrongKind) {
  DenseNetwork d(1, 1, 1, 1.0);
  EXPECT_THROW(sparse_from_json(to_json(d)), std::runtime_error);
}
