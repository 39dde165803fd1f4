#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace softlogic {

struct AdamConfig {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moment accumulators for one parameter block.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}

  // Bias-corrected first-moment magnitudes; zeros before the first step.
  std::vector<double> average_gradient_magnitudes(const AdamConfig& cfg) const {
    std::vector<double> out(m.size(), 0.0);
    if (step == 0) return out;
    const double correction = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = std::abs(m[i]) / correction;
    return out;
  }
};

inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
                      const AdamConfig& cfg) {
  if (params.size() != grads.size() || state.m.size() != params.size())
    throw std::invalid_argument("adam_step: parameter, gradient and state sizes differ");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

inline constexpr double kL1Quantile = 15.0 / 16.0;
inline constexpr double kL1Fraction = 0.1;

/// L1 weight that cancels `fraction` of the near-largest average gradient:
/// sort ascending, take the element at 0-based index ceil(quantile * N) - 1.
inline double adaptive_l1_weight(std::span<const double> magnitudes,
                                 double quantile = kL1Quantile, double fraction = kL1Fraction) {
  if (magnitudes.empty()) throw std::invalid_argument("adaptive_l1_weight: empty array");
  if (!(quantile > 0.0 && quantile <= 1.0))
    throw std::invalid_argument("adaptive_l1_weight: quantile must lie in (0, 1]");
  std::vector<double> sorted(magnitudes.begin(), magnitudes.end());
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(quantile * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size()) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank), sorted.end());
  return fraction * sorted[rank];
}

}  // namespace softlogic
