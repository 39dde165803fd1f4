#pragma once

// Dense logic networks: each layer is a linear map y = M x followed by an
// activation. n-ary layers read their antecedents from the row-major
// matricization of y (channel k, argument i at y[k*n + i]).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "softlogic/belief_table.hpp"
#include "softlogic/logicgen.hpp"
#include "softlogic/logit.hpp"
#include "softlogic/matrix.hpp"
#include "softlogic/nary.hpp"

namespace softlogic {

enum class Activation { nary, relu, maxmin, maxail };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::nary: return "nary";
    case Activation::relu: return "relu";
    case Activation::maxmin: return "maxmin";
    case Activation::maxail: return "maxail";
  }
  return "unknown";
}

inline Activation parse_activation(std::string_view name) {
  if (name == "nary") return Activation::nary;
  if (name == "relu") return Activation::relu;
  if (name == "maxmin") return Activation::maxmin;
  if (name == "maxail") return Activation::maxail;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

struct LayerSpec {
  std::size_t in_width = 0;
  std::size_t out_width = 0;
  Activation activation = Activation::nary;
  int arity = 1;

  // Rows of M. MaxMin emits max and min of each pair, so it keeps the width;
  // MaxAIL reduces each pair to one output.
  std::size_t linear_width() const {
    switch (activation) {
      case Activation::nary: return out_width * static_cast<std::size_t>(arity);
      case Activation::maxail: return 2 * out_width;
      case Activation::relu:
      case Activation::maxmin: return out_width;
    }
    return out_width;
  }

  std::size_t parameter_count() const {
    std::size_t count = linear_width() * in_width;
    if (activation == Activation::nary) count += out_width * vertex_count(arity);
    return count;
  }

  void validate() const {
    if (in_width == 0 || out_width == 0)
      throw std::invalid_argument("LayerSpec: widths must be positive");
    if (activation == Activation::nary && (arity < 1 || arity > kMaxActivationArity))
      throw std::invalid_argument("LayerSpec: n-ary arity must lie in [1, 8]");
    if (activation == Activation::maxmin && out_width % 2 != 0)
      throw std::invalid_argument("LayerSpec: maxmin needs an even output width");
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct LayerParams {
  Matrix weights;                  // linear_width x in_width
  std::optional<ParamTable> theta; // n-ary layers only
};

struct Network {
  std::vector<LayerSpec> layers;
  std::vector<LayerParams> params;

  std::size_t input_width() const { return layers.front().in_width; }
  std::size_t output_width() const { return layers.back().out_width; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.parameter_count();
    return n;
  }

  void validate() const {
    if (layers.empty()) throw std::invalid_argument("Network: no layers");
    if (params.size() != layers.size()) throw std::invalid_argument("Network: params/layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const LayerSpec& s = layers[l];
      s.validate();
      if (l > 0 && s.in_width != layers[l - 1].out_width)
        throw std::invalid_argument("Network: layer " + std::to_string(l) +
                                    " input width does not match previous output width");
      const LayerParams& p = params[l];
      if (p.weights.rows() != s.linear_width() || p.weights.cols() != s.in_width)
        throw std::invalid_argument("Network: weight shape of layer " + std::to_string(l));
      if ((s.activation == Activation::nary) != p.theta.has_value())
        throw std::invalid_argument("Network: theta presence of layer " + std::to_string(l));
      if (p.theta && (p.theta->arity != s.arity || p.theta->channels() != s.out_width))
        throw std::invalid_argument("Network: theta shape of layer " + std::to_string(l));
    }
  }
};

/// Chains layer specs through the given widths.
inline std::vector<LayerSpec> make_layer_specs(std::size_t in_width,
                                               const std::vector<std::size_t>& widths,
                                               Activation activation, int arity) {
  std::vector<LayerSpec> specs;
  std::size_t prev = in_width;
  for (std::size_t w : widths) {
    specs.push_back({prev, w, activation, arity});
    prev = w;
  }
  return specs;
}

/// Zero-initialized parameters.
inline Network zero_network(std::vector<LayerSpec> specs) {
  Network net{std::move(specs), {}};
  for (const auto& s : net.layers) {
    s.validate();
    LayerParams p{Matrix(s.linear_width(), s.in_width), std::nullopt};
    if (s.activation == Activation::nary) p.theta = ParamTable(s.arity, s.out_width);
    net.params.push_back(std::move(p));
  }
  net.validate();
  return net;
}

/// Linear weights uniform in +-sqrt(3 / fan_in); theta uniform in +-0.1.
inline Network initialize_network(std::vector<LayerSpec> specs, std::uint64_t seed) {
  Network net = zero_network(std::move(specs));
  Rng rng(seed, Stream::weights);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const double bound = std::sqrt(3.0 / static_cast<double>(net.layers[l].in_width));
    for (double& w : net.params[l].weights.flat()) w = rng.uniform(-bound, bound);
    if (net.params[l].theta)
      for (double& t : net.params[l].theta->entries.flat()) t = rng.uniform(-0.1, 0.1);
  }
  return net;
}

/// Gradient buffers shaped like a network's parameters. For n-ary layers
/// `theta` holds parameter-space gradients.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Matrix> theta;

  static Gradients zeros_like(const Network& net) {
    Gradients g;
    for (const auto& p : net.params) {
      g.weights.emplace_back(p.weights.rows(), p.weights.cols());
      g.theta.push_back(p.theta ? Matrix(p.theta->entries.rows(), p.theta->entries.cols())
                                : Matrix());
    }
    return g;
  }
};

struct LayerCache {
  std::vector<double> input;
  std::vector<double> linear;
  std::vector<double> output;
  NaryState nary;
};

/// A layer with its belief tables expanded once, for repeated evaluation.
class LayerEvaluator {
public:
  LayerEvaluator(const LayerSpec& spec, const LayerParams& params)
      : spec_(&spec), params_(&params) {
    if (params.theta) table_ = params_to_table(*params.theta);
  }

  const LayerSpec& spec() const noexcept { return *spec_; }

  LayerCache forward(std::span<const double> x) const {
    const LayerSpec& s = *spec_;
    if (x.size() != s.in_width)
      throw std::invalid_argument("layer_forward: input length " + std::to_string(x.size()) +
                                  " differs from in_width " + std::to_string(s.in_width));
    LayerCache c;
    c.input.assign(x.begin(), x.end());
    c.linear.assign(s.linear_width(), 0.0);
    const Matrix& m = params_->weights;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      double acc = 0.0;
      const auto row = m.row(r);
      for (std::size_t i = 0; i < x.size(); ++i) acc += row[i] * x[i];
      c.linear[r] = acc;
    }

    c.output.assign(s.out_width, 0.0);
    switch (s.activation) {
      case Activation::nary: {
        const auto n = static_cast<std::size_t>(s.arity);
        Matrix y(s.out_width, n);
        std::copy(c.linear.begin(), c.linear.end(), y.flat().begin());
        NaryResult r = nary_forward(y, table_);
        c.output = std::move(r.z);
        c.nary = std::move(r.state);
        break;
      }
      case Activation::relu:
        for (std::size_t k = 0; k < s.out_width; ++k) c.output[k] = std::max(0.0, c.linear[k]);
        break;
      case Activation::maxmin:
        for (std::size_t k = 0; k + 1 < s.out_width; k += 2) {
          c.output[k] = std::max(c.linear[k], c.linear[k + 1]);
          c.output[k + 1] = std::min(c.linear[k], c.linear[k + 1]);
        }
        break;
      case Activation::maxail:
        for (std::size_t k = 0; k < s.out_width; ++k)
          c.output[k] = ail(AilKind::or_, c.linear[2 * k], c.linear[2 * k + 1]);
        break;
    }
    return c;
  }

  /// Accumulates dJ/dM into grad_weights and, for n-ary layers, dJ/dA (table
  /// space) into grad_table. Returns dJ/dx.
  std::vector<double> backward(const LayerCache& c, std::span<const double> grad_out,
                               Matrix& grad_weights, Matrix* grad_table) const {
    const LayerSpec& s = *spec_;
    std::vector<double> grad_linear(s.linear_width(), 0.0);
    switch (s.activation) {
      case Activation::nary: {
        NaryGrad g = nary_table_backward(c.nary, grad_out);
        std::copy(g.antecedents.flat().begin(), g.antecedents.flat().end(), grad_linear.begin());
        if (grad_table)
          for (std::size_t i = 0; i < g.params.size(); ++i) grad_table->flat()[i] += g.params.flat()[i];
        break;
      }
      case Activation::relu:
        for (std::size_t k = 0; k < s.out_width; ++k)
          grad_linear[k] = c.linear[k] > 0.0 ? grad_out[k] : 0.0;
        break;
      case Activation::maxmin:
        for (std::size_t k = 0; k + 1 < s.out_width; k += 2) {
          const bool first_is_max = !(c.linear[k] < c.linear[k + 1]);
          grad_linear[first_is_max ? k : k + 1] += grad_out[k];
          grad_linear[first_is_max ? k + 1 : k] += grad_out[k + 1];
        }
        break;
      case Activation::maxail:
        for (std::size_t k = 0; k < s.out_width; ++k) {
          const double a = c.linear[2 * k], b = c.linear[2 * k + 1];
          const double best = std::max({a, b, a + b});
          if (best == a) {
            grad_linear[2 * k] = grad_out[k];
          } else if (best == b) {
            grad_linear[2 * k + 1] = grad_out[k];
          } else {
            grad_linear[2 * k] = grad_out[k];
            grad_linear[2 * k + 1] = grad_out[k];
          }
        }
        break;
    }

    const Matrix& m = params_->weights;
    std::vector<double> grad_x(s.in_width, 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const double g = grad_linear[r];
      if (g == 0.0) continue;
      auto gw = grad_weights.row(r);
      const auto row = m.row(r);
      for (std::size_t i = 0; i < s.in_width; ++i) {
        gw[i] += g * c.input[i];
        grad_x[i] += g * row[i];
      }
    }
    return grad_x;
  }

private:
  const LayerSpec* spec_;
  const LayerParams* params_;
  BeliefTable table_;
};

inline LayerCache layer_forward(std::span<const double> x, const LayerSpec& spec,
                                const LayerParams& params) {
  return LayerEvaluator(spec, params).forward(x);
}

/// Mean binary cross-entropy between logits z and soft targets
/// t = sigmoid(target_logit): -t log s(z) - (1-t) log s(-z).
inline double loss_bce_logits(std::span<const double> z, std::span<const double> target_logits) {
  if (z.size() != target_logits.size() || z.empty())
    throw std::invalid_argument("loss_bce_logits: lengths must match and be non-empty");
  double acc = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double t = logit_to_prob(target_logits[k]);
    acc += t * softplus(-z[k]) + (1.0 - t) * softplus(z[k]);
  }
  return acc / static_cast<double>(z.size());
}

inline std::vector<double> network_forward(const Network& net, std::span<const double> x) {
  std::vector<double> cur(x.begin(), x.end());
  for (std::size_t l = 0; l < net.layers.size(); ++l)
    cur = LayerEvaluator(net.layers[l], net.params[l]).forward(cur).output;
  return cur;
}

struct SplitMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct LossAndGradient {
  SplitMetrics metrics;
  Gradients grads;
};

namespace detail {

inline std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

inline bool sign_matches(double z, double target) { return sign(z) != 0.0 && sign(z) == sign(target); }

}  // namespace detail

/// Mean loss over the selected rows (and over outputs) with its full
/// reverse-mode gradient. `loss_scale` multiplies the loss before
/// differentiation; the reported loss is unscaled.
inline LossAndGradient network_loss_and_gradient(const Network& net, const Matrix& inputs,
                                                 const Matrix& targets,
                                                 std::span<const std::size_t> rows,
                                                 bool want_grads = true, double loss_scale = 1.0) {
  if (inputs.cols() != net.input_width() || targets.cols() != net.output_width() ||
      inputs.rows() != targets.rows())
    throw std::invalid_argument("network: data shape " + shape_string(inputs) + " / " +
                                shape_string(targets) + " does not match the network");
  if (rows.empty()) throw std::invalid_argument("network: empty batch");

  std::vector<LayerEvaluator> layers;
  layers.reserve(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) layers.emplace_back(net.layers[l], net.params[l]);

  LossAndGradient out;
  if (want_grads) out.grads = Gradients::zeros_like(net);
  // Table-space accumulators; mapped to parameter space once per batch.
  std::vector<Matrix> table_grads;
  for (const auto& p : net.params)
    table_grads.push_back(p.theta ? Matrix(p.theta->channels(), vertex_count(p.theta->arity))
                                  : Matrix());

  const double n_out = static_cast<double>(net.output_width());
  const double per_sample = loss_scale / (static_cast<double>(rows.size()) * n_out);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::vector<LayerCache> caches(layers.size());

  for (std::size_t r : rows) {
    std::span<const double> x = inputs.row(r);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      caches[l] = layers[l].forward(x);
      x = caches[l].output;
    }
    const auto t = targets.row(r);
    const auto& z = caches.back().output;
    loss_sum += loss_bce_logits(z, t);
    for (std::size_t k = 0; k < z.size(); ++k)
      if (detail::sign_matches(z[k], t[k])) ++correct;

    if (!want_grads) continue;
    std::vector<double> g(z.size());
    for (std::size_t k = 0; k < z.size(); ++k)
      g[k] = per_sample * (logit_to_prob(z[k]) - logit_to_prob(t[k]));
    for (std::size_t l = layers.size(); l-- > 0;) {
      Matrix* tg = table_grads[l].empty() ? nullptr : &table_grads[l];
      g = layers[l].backward(caches[l], g, out.grads.weights[l], tg);
    }
  }

  if (want_grads)
    for (std::size_t l = 0; l < net.params.size(); ++l) {
      if (!net.params[l].theta) continue;
      const int n = net.params[l].theta->arity;
      for (std::size_t k = 0; k < table_grads[l].rows(); ++k)
        detail::apply_basis_transpose(table_grads[l].row(k), out.grads.theta[l].row(k), n);
    }

  out.metrics.loss = loss_sum / static_cast<double>(rows.size());
  out.metrics.accuracy =
      static_cast<double>(correct) / (static_cast<double>(rows.size()) * n_out);
  return out;
}

inline LossAndGradient network_loss_and_gradient(const Network& net, const Matrix& inputs,
                                                 const Matrix& targets, bool want_grads = true,
                                                 double loss_scale = 1.0) {
  const auto rows = detail::all_rows(inputs.rows());
  return network_loss_and_gradient(net, inputs, targets, rows, want_grads, loss_scale);
}

inline SplitMetrics evaluate(const Network& net, const Split& split) {
  return network_loss_and_gradient(net, split.inputs, split.targets, false).metrics;
}

}  // namespace softlogic
