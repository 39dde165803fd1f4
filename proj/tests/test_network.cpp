#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "softlogic/logicgen.hpp"
#include "softlogic/network.hpp"

using namespace softlogic;

namespace {

std::size_t total_params(int gamma, Activation act, int arity) {
  const int reach = act == Activation::nary ? arity : 2;
  return zero_network(make_layer_specs(32, size_architecture(gamma, reach), act, arity))
      .parameter_count();
}

// Largest relative gap between analytic and central-difference gradients.
double worst_gradient_error(Network net, const Split& s, double h = 1e-6) {
  const auto lg = network_loss_and_gradient(net, s.inputs, s.targets);
  double worst = 0.0;
  for (std::size_t l = 0; l < net.layers.size(); ++l)
    for (int which = 0; which < 2; ++which) {
      if (which == 1 && !net.params[l].theta) continue;
      auto flat = which ? net.params[l].theta->entries.flat() : net.params[l].weights.flat();
      auto g = which ? lg.grads.theta[l].flat() : lg.grads.weights[l].flat();
      for (std::size_t i = 0; i < flat.size(); ++i) {
        const double old = flat[i];
        flat[i] = old + h;
        const double lp = network_loss_and_gradient(net, s.inputs, s.targets, false).metrics.loss;
        flat[i] = old - h;
        const double lm = network_loss_and_gradient(net, s.inputs, s.targets, false).metrics.loss;
        flat[i] = old;
        const double fd = (lp - lm) / (2 * h);
        worst = std::max(worst, std::abs(fd - g[i]) / std::max({1e-3, std::abs(fd), std::abs(g[i])}));
      }
    }
  return worst;
}

Split random_split(std::size_t rows, std::size_t in, std::size_t out, std::uint64_t seed) {
  Rng rng(seed, Stream::data);
  Split s{Matrix(rows, in), Matrix(rows, out)};
  for (double& v : s.inputs.flat()) v = rng.uniform(-2.5, 2.5);
  for (double& v : s.targets.flat()) v = rng.coin() ? kDataLogit : -kDataLogit;
  return s;
}

}  // namespace

TEST(ParameterCount, PerLayerAt32) {
  const std::size_t expected[] = {1088, 2176, 3328, 4608, 6144, 8192};
  for (int n = 1; n <= 6; ++n)
    EXPECT_EQ((LayerSpec{32, 32, Activation::nary, n}.parameter_count()), expected[n - 1]);
}

TEST(ParameterCount, SizedNetworks) {
  EXPECT_EQ(total_params(2, Activation::relu, 1), 1024u);
  EXPECT_EQ(total_params(5, Activation::relu, 1), 11264u);
  EXPECT_EQ(total_params(3, Activation::nary, 2), 8576u);
  EXPECT_EQ(total_params(4, Activation::nary, 3), 13056u);
}

TEST(LayerSpec, Validation) {
  EXPECT_THROW((LayerSpec{0, 4, Activation::nary, 2}.validate()), std::invalid_argument);
  EXPECT_THROW((LayerSpec{4, 4, Activation::nary, 9}.validate()), std::invalid_argument);
  EXPECT_THROW((LayerSpec{4, 3, Activation::maxmin, 1}.validate()), std::invalid_argument);
  EXPECT_EQ(parse_activation("maxail"), Activation::maxail);
  EXPECT_THROW(parse_activation("gelu"), std::invalid_argument);
}

TEST(Loss, SoftTargetCrossEntropy) {
  const std::vector<double> hit{kDataLogit}, miss{-kDataLogit}, target{kDataLogit};
  EXPECT_NEAR(loss_bce_logits(hit, target), 0.007884894550024427, 1e-12);
  EXPECT_NEAR(loss_bce_logits(miss, target), 6.904109626184021, 1e-12);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int s = 0; s < 500; ++s) {
    const std::vector<double> z{u(gen), u(gen)}, t{u(gen) > 0 ? 6.91 : -6.91, -6.91};
    EXPECT_NEAR(loss_bce_logits(z, t), oracle::bce(z, t), 1e-10);
  }
  EXPECT_THROW(loss_bce_logits(hit, std::vector<double>{}), std::invalid_argument);
}

TEST(Network, ZeroTablesGiveZeroOutput) {
  const Network net = zero_network(make_layer_specs(4, {3}, Activation::nary, 2));
  const auto z = network_forward(net, std::vector<double>{1, -2, 3, 4});
  for (double v : z) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(network_forward(net, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST(Network, InitializationIsSeeded) {
  const auto specs = make_layer_specs(8, {6, 4}, Activation::nary, 3);
  const Network a = initialize_network(specs, 4), b = initialize_network(specs, 4),
                c = initialize_network(specs, 5);
  EXPECT_EQ(a.params[1].weights, b.params[1].weights);
  EXPECT_EQ(a.params[1].theta->entries, b.params[1].theta->entries);
  EXPECT_NE(a.params[0].weights, c.params[0].weights);
}

TEST(Network, PassThroughTableCopiesAntecedent) {
  Network net = zero_network(make_layer_specs(2, {1}, Activation::nary, 2));
  net.params[0].weights(0, 0) = 1.0;  // antecedent 1 <- x1
  net.params[0].weights(1, 1) = 1.0;  // antecedent 2 <- x2
  // arg_1 at scale 10 passes antecedent 1 through unchanged inside [-10, 10]
  net.params[0].theta = catalog_params(*find_catalog("arg_1"), 10.0);
  for (double x : {-7.0, -1.0, 0.5, 6.91})
    EXPECT_NEAR(network_forward(net, std::vector<double>{x, 3.0})[0], x, 1e-12);
}

TEST(Gradients, TwoLayerNaryMatchesFiniteDifferences) {
  Network net = initialize_network(make_layer_specs(8, {8, 8}, Activation::nary, 3), 3);
  for (auto& p : net.params)
    for (double& t : p.theta->entries.flat()) t *= 20.0;
  EXPECT_LE(worst_gradient_error(net, random_split(20, 8, 8, 6)), 1e-5);
}

TEST(Gradients, FixedActivationsMatchFiniteDifferences) {
  for (Activation act : {Activation::relu, Activation::maxmin, Activation::maxail}) {
    const Network net = initialize_network(make_layer_specs(6, {4, 2}, act, 2), 8);
    EXPECT_LE(worst_gradient_error(net, random_split(15, 6, 2, 9)), 1e-5) << to_string(act);
  }
}

TEST(Metrics, AccuracyUsesStrictSign) {
  const Network net = zero_network(make_layer_specs(2, {2}, Activation::nary, 1));
  Split s{Matrix(3, 2), Matrix(3, 2)};
  for (double& t : s.targets.flat()) t = kDataLogit;
  const SplitMetrics m = evaluate(net, s);
  EXPECT_EQ(m.accuracy, 0.0);  // z = 0 never counts as a match
  EXPECT_NEAR(m.loss, std::log(2.0), 1e-15);
}
