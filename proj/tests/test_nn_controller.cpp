#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "roacert/json_io.hpp"
#include "roacert/network.hpp"

using namespace roacert;

namespace {

NeuralNetwork scalar_net(double w1, double b1, double w2, double b2, Activation act = Activation::tanh()) {
  return NeuralNetwork({{MatrixXd::Constant(1, 1, w1), VectorXd::Constant(1, b1), act}}, MatrixXd::Constant(1, 1, w2),
                       VectorXd::Constant(1, b2));
}

MatrixXd randn(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  MatrixXd M(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) M(i, j) = N(rng);
  return M;
}

VectorXd randv(int n, std::mt19937_64& rng) { return randn(n, 1, rng); }

Activation random_activation(std::mt19937_64& rng) {
  switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
    case 0: return Activation::tanh();
    case 1: return Activation::sigmoid();
    case 2: return Activation::relu();
    default: return Activation::leaky_relu(0.1);
  }
}

NeuralNetwork random_net(std::mt19937_64& rng, int max_layers, int max_width, bool mixed) {
  std::uniform_int_distribution<int> L(1, max_layers), W(1, max_width);
  const int nx = W(rng), nu = W(rng);
  const Activation shared = random_activation(rng);
  std::vector<Layer> layers;
  int prev = nx;
  for (int i = 0, n = L(rng); i < n; ++i) {
    const int w = W(rng);
    layers.push_back({randn(w, prev, rng), randv(w, rng), mixed ? random_activation(rng) : shared});
    prev = w;
  }
  return NeuralNetwork(std::move(layers), randn(nu, prev, rng), randv(nu, rng));
}

}  // namespace

TEST(Activation, ValuesAtZero) {
  EXPECT_EQ(Activation::tanh()(0.0), 0.0);
  EXPECT_EQ(Activation::relu()(0.0), 0.0);
  EXPECT_EQ(Activation::leaky_relu(0.2)(0.0), 0.0);
  EXPECT_EQ(Activation::sigmoid()(0.0), 0.5);
  EXPECT_THROW(Activation::leaky_relu(1.5), ParameterError);
  EXPECT_THROW(Activation::parse("swish"), ConfigError);
}

TEST(Activation, MonotoneAndGloballySectorBounded) {
  for (const Activation& a : {Activation::tanh(), Activation::sigmoid(), Activation::relu(), Activation::leaky_relu(0.3)}) {
    const double f0 = a(0.0);
    double prev = a(-10.0);
    for (double v = -10.0; v <= 10.0; v += 0.01) {
      EXPECT_GE(a(v), prev - 1e-15);
      prev = a(v);
      if (v != 0.0) {
        const double q = (a(v) - f0) / v;
        EXPECT_GE(q, a.global_slope_floor() - 1e-12);
        EXPECT_LE(q, 1.0 + 1e-12);
      }
    }
  }
}

TEST(Network, ScalarEvalExamples) {
  EXPECT_NEAR(scalar_net(1, 0, 2, 0).eval(VectorXd::Constant(1, 0.5))(0), 2.0 * std::tanh(0.5), 1e-15);
  EXPECT_NEAR(scalar_net(1, 0, 2, 0).eval(VectorXd::Constant(1, 0.5))(0), 0.92424, 1e-5);
  EXPECT_EQ(scalar_net(-1, 0, 1, 0, Activation::relu()).eval(VectorXd::Constant(1, 0.3))(0), 0.0);
  EXPECT_EQ(scalar_net(0.7, 0, -3, 0).eval(VectorXd::Zero(1))(0), 0.0);
}

TEST(Network, DimensionErrorsNameTheLayer) {
  std::mt19937_64 rng(3);
  try {
    NeuralNetwork({{randn(4, 2, rng), randv(4, rng), Activation::tanh()}, {randn(3, 5, rng), randv(3, rng), Activation::tanh()}},
                  randn(1, 3, rng), randv(1, rng));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 2"), std::string::npos) << e.what();
  }
  const NeuralNetwork nn = scalar_net(1, 0, 1, 0);
  EXPECT_THROW(nn.eval(VectorXd::Zero(2)), DimensionError);
}

TEST(Lft, ScalarBlockPartition) {
  const NeuralNetwork nn = scalar_net(0.3, -0.2, 1.7, 0.4);
  MatrixXd expected(2, 3);
  expected << 0, 1.7, 0.4, 0.3, 0, -0.2;
  EXPECT_EQ(build_lft(nn).full(), expected);
}

TEST(Lft, TwoLayerStructure) {
  std::mt19937_64 rng(5);
  const MatrixXd W1 = randn(3, 2, rng), W2 = randn(4, 3, rng), W3 = randn(1, 4, rng);
  const NeuralNetwork nn({{W1, VectorXd::Zero(3), Activation::tanh()}, {W2, VectorXd::Zero(4), Activation::tanh()}}, W3,
                         VectorXd::Zero(1));
  const NnLft lft = build_lft(nn);
  EXPECT_EQ(lft.full().rows(), 1 + 7);
  EXPECT_EQ(lft.full().cols(), 2 + 7 + 1);
  EXPECT_EQ(MatrixXd(lft.vw.block(3, 0, 4, 3)), W2);
  EXPECT_EQ(lft.vw.topRows(3).cwiseAbs().sum(), 0.0);
  EXPECT_EQ(lft.vw.bottomRightCorner(4, 4).cwiseAbs().sum(), 0.0);
  EXPECT_EQ(lft.ux.cwiseAbs().sum(), 0.0);
  EXPECT_EQ(MatrixXd(lft.uw.rightCols(4)), W3);
  EXPECT_EQ(lft.uw.leftCols(3).cwiseAbs().sum(), 0.0);
  EXPECT_EQ(MatrixXd(lft.vx.topRows(3)), W1);
}

TEST(Lft, OutputFeedbackUsesWC) {
  std::mt19937_64 rng(9);
  const MatrixXd C = randn(2, 3, rng), W1 = randn(4, 2, rng);
  const NeuralNetwork nn({{W1, randv(4, rng), Activation::tanh()}}, randn(1, 4, rng), randv(1, rng), C);
  EXPECT_EQ(nn.input_dim(), 3);
  const NnLft lft = build_lft(nn);
  EXPECT_LT((lft.vx - W1 * C).norm(), 1e-15);
  const VectorXd x = randv(3, rng);
  EXPECT_NEAR((nn.eval(x) - eval_lft(nn, lft, x)).norm(), 0.0, 1e-12);
}

TEST(Lft, DirectAndLftEvaluationAgree) {
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const NeuralNetwork nn = random_net(rng, 3, 8, t % 2 == 0);
    const NnLft lft = build_lft(nn);
    const VectorXd x = randv(nn.input_dim(), rng);
    worst = std::max(worst, (nn.eval(x) - eval_lft(nn, lft, x)).lpNorm<Eigen::Infinity>());
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Equilibrium, PropagationExamples) {
  const Equilibrium e0 = propagate_equilibrium(scalar_net(1.3, 0, -2, 0), VectorXd::Zero(1));
  EXPECT_TRUE(e0.is_origin());

  const Equilibrium e = propagate_equilibrium(scalar_net(1, 0, 2, 0), VectorXd::Constant(1, 0.5));
  EXPECT_DOUBLE_EQ(e.v(0), 0.5);
  EXPECT_NEAR(e.w(0), 0.46212, 1e-5);
  EXPECT_NEAR(e.u(0), 0.92424, 1e-5);

  const NeuralNetwork sig({{MatrixXd::Zero(3, 2), VectorXd::Zero(3), Activation::sigmoid()}}, MatrixXd::Ones(1, 3),
                          VectorXd::Zero(1));
  for (const VectorXd& xs : {VectorXd(VectorXd::Zero(2)), VectorXd(VectorXd::Constant(2, 4.0))})
    EXPECT_EQ(propagate_equilibrium(sig, xs).w, VectorXd::Constant(3, 0.5));
}

TEST(Equilibrium, PropagationConsistency) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 200; ++t) {
    const NeuralNetwork nn = random_net(rng, 3, 8, true);
    const Equilibrium eq = propagate_equilibrium(nn, randv(nn.input_dim(), rng));
    for (int j = 0; j < nn.num_neurons(); ++j) EXPECT_EQ(eq.w(j), nn.activation_of(j)(eq.v(j)));
    const NnLft lft = build_lft(nn);
    VectorXd z(eq.x.size() + eq.w.size() + 1);
    z << eq.x, eq.w, 1.0;
    VectorXd uv(eq.u.size() + eq.v.size());
    uv << eq.u, eq.v;
    EXPECT_LE((uv - lft.full() * z).lpNorm<Eigen::Infinity>(), 1e-12 * std::max(1.0, uv.lpNorm<Eigen::Infinity>()));
  }
}

TEST(Equilibrium, VerificationAndSearch) {
  MatrixXd A(2, 2), B(2, 1);
  A << 0.9, 0.1, 0.0, 0.8;
  B << 0.0, 1.0;
  const LtiPlant plant = LtiPlant::nominal(A, B);
  std::mt19937_64 rng(17);
  const NeuralNetwork zero_bias({{randn(5, 2, rng), VectorXd::Zero(5), Activation::tanh()}}, 0.1 * randn(1, 5, rng),
                                VectorXd::Zero(1));
  const Equilibrium origin = propagate_equilibrium(zero_bias, VectorXd::Zero(2));
  const EquilibriumResidual r0 = verify_equilibrium(plant, zero_bias, origin, 1e-12);
  EXPECT_TRUE(r0.pass);
  EXPECT_EQ(r0.max(), 0.0);

  const NeuralNetwork biased({{randn(5, 2, rng), 0.5 * randv(5, rng), Activation::tanh()}}, 0.1 * randn(1, 5, rng),
                             VectorXd::Constant(1, 0.05));
  const auto found = solve_equilibrium(plant, biased, VectorXd::Zero(2));
  ASSERT_TRUE(found.has_value());
  EXPECT_TRUE(verify_equilibrium(plant, biased, *found, 1e-9).pass);
  EXPECT_GT(found->x.norm(), 1e-3);

  Equilibrium off = *found;
  off.x.array() += 0.1;
  const EquilibriumResidual bad = verify_equilibrium(plant, biased, propagate_equilibrium(biased, off.x), 1e-9);
  EXPECT_FALSE(bad.pass);
  EXPECT_GT(bad.state, 0.0);
}

TEST(WeightFile, RoundTripAndErrors) {
  std::mt19937_64 rng(19);
  const NeuralNetwork nn({{randn(3, 2, rng), randv(3, rng), Activation::leaky_relu(0.2)},
                          {randn(2, 3, rng), randv(2, rng), Activation::leaky_relu(0.2)}},
                         randn(1, 2, rng), randv(1, rng));
  const NeuralNetwork back = network_from_json(network_to_json(nn));
  const VectorXd x = randv(2, rng);
  EXPECT_EQ(nn.eval(x), back.eval(x));
  EXPECT_EQ(back.layers()[1].activation, Activation::leaky_relu(0.2));

  json j = network_to_json(nn);
  j["layers"][1]["W"] = json::array({json::array({1.0, 2.0})});
  EXPECT_THROW(network_from_json(j), DimensionError);
  json k = network_to_json(nn);
  k["activation"] = "softplus";
  EXPECT_THROW(network_from_json(k), ConfigError);
}
