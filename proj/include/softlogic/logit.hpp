#pragma once

// Scalar logit arithmetic and the adaptive unary activation.
//
// A logit v encodes the Bernoulli probability 1/(1+exp(-v)). The unary
// activation marginalizes a two-entry belief table [a0, a1] (consequent logits
// given the antecedent false / true) against an antecedent logit y, using the
// max approximation of log-sum-exp.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

namespace softlogic {

// Data encoding: true/false map to the logits of 0.999/0.001.
inline constexpr double kDataLogit = 6.91;

// Antecedent logits are clamped to this range before probability-space
// evaluation; belief-table entries beyond it are rejected.
inline constexpr double kExactLogitLimit = 30.0;

inline void require_finite(double v, const char* where) {
  if (!std::isfinite(v))
    throw std::invalid_argument(std::string(where) + ": non-finite logit");
}

// Sign with sign(0) = 0. Also the subgradient convention for |u| at u = 0.
constexpr double sign(double v) noexcept { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

inline double logit_to_prob(double v) {
  require_finite(v, "logit_to_prob");
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

inline double prob_to_logit(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("prob_to_logit: probability must lie in (0,1)");
  return std::log(p) - std::log1p(-p);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) noexcept {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

// The LSEM approximation of log-sum-exp: simply the maximum term.
inline double lsem(std::span<const double> terms) {
  if (terms.empty()) throw std::invalid_argument("lsem: empty sequence");
  for (double t : terms) require_finite(t, "lsem");
  return *std::max_element(terms.begin(), terms.end());
}

inline double logsumexp(std::span<const double> terms) {
  const double m = lsem(terms);
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - m);
  return m + std::log(acc);
}

/// Two-entry belief table: consequent logits given antecedent false (a0) and
/// true (a1). The sum and difference are always derived, never stored.
struct UnaryRow {
  double a0 = 0.0;
  double a1 = 0.0;

  constexpr double sum() const noexcept { return a0 + a1; }
  constexpr double diff() const noexcept { return a1 - a0; }
};

struct UnaryGrad {
  double y = 0.0;
  double a0 = 0.0;
  double a1 = 0.0;
};

namespace detail {

// Unchecked kernels shared by the n-ary recursion. std::max keeps its first
// argument on ties, which the backward pass mirrors.
inline double unary_kernel(double y, double a0, double a1) noexcept {
  const double s = a0 + a1;
  const double d = a1 - a0;
  const double ay = std::abs(y);
  return 0.5 * (std::max(ay + s, std::abs(d + y)) - std::max(ay - s, std::abs(d - y)));
}

inline UnaryGrad unary_kernel_backward(double y, double a0, double a1, double upstream) noexcept {
  const double s = a0 + a1;
  const double d = a1 - a0;
  const double ay = std::abs(y);
  double gy = 0.0, gs = 0.0, gd = 0.0;

  // Positive branch enters with +1/2.
  if (!(ay + s < std::abs(d + y))) {
    gy += sign(y);
    gs += 1.0;
  } else {
    const double t = sign(d + y);
    gy += t;
    gd += t;
  }
  // Negative branch enters with -1/2.
  if (!(ay - s < std::abs(d - y))) {
    gy -= sign(y);
    gs += 1.0;
  } else {
    const double t = sign(d - y);
    gy += t;
    gd -= t;
  }

  const double h = 0.5 * upstream;
  return {h * gy, h * (gs - gd), h * (gs + gd)};
}

}  // namespace detail

/// Adaptive unary activation:
///   z = 1/2 [ max(|y| + S, |D + y|) - max(|y| - S, |D - y|) ]
/// with S = a0 + a1 and D = a1 - a0. Returns a1 exactly once y >= |D| and a0
/// once y <= -|D| (up to rounding).
inline double unary_forward(double y, UnaryRow row) {
  require_finite(y, "unary_forward");
  require_finite(row.a0, "unary_forward");
  require_finite(row.a1, "unary_forward");
  return detail::unary_kernel(y, row.a0, row.a1);
}

/// Subgradient of unary_forward scaled by `upstream`. On tie-free inputs each
/// component has magnitude 0 or |upstream|, and at most one of the table
/// gradients is nonzero.
inline UnaryGrad unary_backward(double y, UnaryRow row, double upstream) {
  require_finite(y, "unary_backward");
  require_finite(row.a0, "unary_backward");
  require_finite(row.a1, "unary_backward");
  require_finite(upstream, "unary_backward");
  return detail::unary_kernel_backward(y, row.a0, row.a1, upstream);
}

inline void require_table_logit(double a, const char* where) {
  require_finite(a, where);
  if (std::abs(a) > kExactLogitLimit)
    throw std::range_error(std::string(where) + ": belief-table logit outside [-30, 30]");
}

/// Exact marginalization q(Z) = p(Z|~Y)(1 - q(Y)) + p(Z|Y) q(Y), evaluated in
/// probability space and returned as a logit. The complement is accumulated
/// separately so the result stays accurate near certainty.
inline double unary_forward_exact(double y, UnaryRow row) {
  require_finite(y, "unary_forward_exact");
  require_table_logit(row.a0, "unary_forward_exact");
  require_table_logit(row.a1, "unary_forward_exact");
  y = std::clamp(y, -kExactLogitLimit, kExactLogitLimit);
  const double qt = logit_to_prob(y);
  const double qf = logit_to_prob(-y);
  const double p = logit_to_prob(row.a0) * qf + logit_to_prob(row.a1) * qt;
  const double c = logit_to_prob(-row.a0) * qf + logit_to_prob(-row.a1) * qt;
  return std::log(p) - std::log(c);
}

}  // namespace softlogic
