#pragma once

// Minibatch ADAM training with optional L1/L2 penalties on the linear weights.
// The checkpoint kept is the epoch with the lowest validation loss.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "softlogic/logicgen.hpp"
#include "softlogic/network.hpp"
#include "softlogic/optim.hpp"

namespace softlogic {

struct L1Mode {
  enum class Kind { off, adaptive, fixed };
  Kind kind = Kind::adaptive;
  double quantile = kL1Quantile;
  double fraction = kL1Fraction;
  double weight = 0.0;  // used by Kind::fixed
};

inline std::string_view to_string(L1Mode::Kind k) {
  switch (k) {
    case L1Mode::Kind::off: return "off";
    case L1Mode::Kind::adaptive: return "adaptive";
    case L1Mode::Kind::fixed: return "fixed";
  }
  return "unknown";
}

inline L1Mode::Kind parse_l1_kind(std::string_view s) {
  if (s == "off") return L1Mode::Kind::off;
  if (s == "adaptive") return L1Mode::Kind::adaptive;
  if (s == "fixed") return L1Mode::Kind::fixed;
  throw std::invalid_argument("unknown l1 mode '" + std::string(s) + "'");
}

struct TrainConfig {
  int epochs = 10;
  std::size_t batch_size = 64;
  AdamConfig adam;
  L1Mode l1;
  double l2_weight = 0.0;  // penalty (l2/2) * ||M||^2
  std::uint64_t seed = 1;

  void validate() const {
    if (epochs <= 0) throw std::invalid_argument("TrainConfig: epochs must be positive");
    if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be positive");
    if (!(adam.learning_rate > 0.0) || !(adam.eps > 0.0))
      throw std::invalid_argument("TrainConfig: learning rate and eps must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
      throw std::invalid_argument("TrainConfig: ADAM betas must lie in [0, 1)");
    if (l1.weight < 0.0 || l2_weight < 0.0)
      throw std::invalid_argument("TrainConfig: penalty weights must be non-negative");
  }
};

struct EpochMetrics {
  int epoch = 0;
  SplitMetrics train;
  SplitMetrics val;
  SplitMetrics test;

  friend bool operator==(const EpochMetrics& a, const EpochMetrics& b) {
    auto same = [](const SplitMetrics& x, const SplitMetrics& y) {
      return x.loss == y.loss && x.accuracy == y.accuracy;
    };
    return a.epoch == b.epoch && same(a.train, b.train) && same(a.val, b.val) &&
           same(a.test, b.test);
  }
};

struct TrainReport {
  std::vector<EpochMetrics> epochs;
  int best_epoch = 0;  // 1-based
  Network best;

  const EpochMetrics& best_metrics() const {
    return epochs.at(static_cast<std::size_t>(best_epoch - 1));
  }
  double test_accuracy() const { return best_metrics().test.accuracy; }
};

namespace detail {

inline void add_penalties(std::span<double> grad, std::span<const double> weights,
                          double l1_weight, double l2_weight) {
  for (std::size_t i = 0; i < grad.size(); ++i)
    grad[i] += l1_weight * sign(weights[i]) + l2_weight * weights[i];
}

}  // namespace detail

/// Trains `net` in place for config.epochs epochs and returns the per-epoch
/// metrics together with the validation-optimal parameters.
inline TrainReport train(Network net, const Dataset& data, const TrainConfig& config) {
  config.validate();
  net.validate();
  if (data.train.size() == 0 || data.val.size() == 0 || data.test.size() == 0)
    throw std::invalid_argument("train: every split must be non-empty");

  std::vector<AdamState> weight_states, theta_states;
  for (const auto& p : net.params) {
    weight_states.emplace_back(p.weights.size());
    theta_states.emplace_back(p.theta ? p.theta->entries.size() : 0);
  }

  Rng shuffler(config.seed, Stream::shuffle);
  std::vector<std::size_t> order = detail::all_rows(data.train.size());

  TrainReport report;
  double best_val = std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order, shuffler);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, stop - start);
      LossAndGradient lg =
          network_loss_and_gradient(net, data.train.inputs, data.train.targets, batch);

      for (std::size_t l = 0; l < net.params.size(); ++l) {
        auto weights = net.params[l].weights.flat();
        auto grad = lg.grads.weights[l].flat();
        double l1 = 0.0;
        switch (config.l1.kind) {
          case L1Mode::Kind::off: break;
          case L1Mode::Kind::fixed: l1 = config.l1.weight; break;
          case L1Mode::Kind::adaptive:
            l1 = adaptive_l1_weight(weight_states[l].average_gradient_magnitudes(config.adam),
                                    config.l1.quantile, config.l1.fraction);
            break;
        }
        detail::add_penalties(grad, weights, l1, config.l2_weight);
        adam_step(weights, grad, weight_states[l], config.adam);
        if (net.params[l].theta)
          adam_step(net.params[l].theta->entries.flat(), lg.grads.theta[l].flat(),
                    theta_states[l], config.adam);
      }
    }

    EpochMetrics m{epoch, evaluate(net, data.train), evaluate(net, data.val),
                   evaluate(net, data.test)};
    report.epochs.push_back(m);
    if (m.val.loss < best_val) {
      best_val = m.val.loss;
      report.best_epoch = epoch;
      report.best = net;
    }
  }
  if (report.best_epoch == 0) {
    // Every validation loss was NaN; keep the final parameters.
    report.best_epoch = config.epochs;
    report.best = net;
  }
  return report;
}

inline TrainReport train(const std::vector<LayerSpec>& specs, const Dataset& data,
                         const TrainConfig& config) {
  return train(initialize_network(specs, config.seed), data, config);
}

}  // namespace softlogic
