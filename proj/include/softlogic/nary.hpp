#pragma once

// n-ary adaptive activation: repeated unary marginalization over halves of
// the belief table, antecedent 1 first. Each pass pairs consecutive columns
// (2j, 2j+1) of the previous partial table against the next antecedent.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "softlogic/belief_table.hpp"
#include "softlogic/logit.hpp"
#include "softlogic/matrix.hpp"

namespace softlogic {

inline constexpr int kMaxActivationArity = 8;

/// Values retained by the forward pass. tables[i] has 2^(n-i) columns; the
/// single column of tables[n] is the output.
struct NaryState {
  Matrix antecedents;
  std::vector<Matrix> tables;
  std::uint64_t params_digest = 0;

  int arity() const noexcept { return static_cast<int>(antecedents.cols()); }
  std::size_t channels() const noexcept { return antecedents.rows(); }
};

struct NaryResult {
  std::vector<double> z;
  NaryState state;
};

struct NaryGrad {
  Matrix antecedents;
  Matrix params;  // table-space gradient for the BeliefTable overload
};

namespace detail {

inline std::uint64_t digest(const Matrix& m) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : m.flat()) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    h = (h ^ bits) * 0x100000001b3ULL;
  }
  return h ^ (m.rows() * 0x9e3779b97f4a7c15ULL) ^ m.cols();
}

inline void check_antecedents(const Matrix& y, int arity, std::size_t channels, const char* where) {
  if (arity < 1 || arity > kMaxActivationArity)
    throw std::invalid_argument(std::string(where) + ": arity must lie in [1, 8]");
  if (y.rows() != channels || y.cols() != static_cast<std::size_t>(arity))
    throw std::invalid_argument(std::string(where) + ": antecedents are " + shape_string(y) +
                                ", expected " + std::to_string(channels) + "x" +
                                std::to_string(arity));
  for (double v : y.flat()) require_finite(v, where);
}

}  // namespace detail

/// Forward pass on belief-table logits.
inline NaryResult nary_forward(const Matrix& y, const BeliefTable& table) {
  const int n = table.arity;
  const std::size_t channels = table.channels();
  detail::check_antecedents(y, n, channels, "nary_forward");
  for (double v : table.entries.flat()) require_finite(v, "nary_forward");

  NaryResult out;
  out.state.antecedents = y;
  out.state.tables.reserve(static_cast<std::size_t>(n) + 1);
  out.state.tables.push_back(table.entries);
  for (int i = 1; i <= n; ++i) {
    const Matrix& prev = out.state.tables.back();
    Matrix next(channels, vertex_count(n - i));
    for (std::size_t k = 0; k < channels; ++k) {
      const double yk = y(k, static_cast<std::size_t>(i - 1));
      for (std::size_t j = 0; j < next.cols(); ++j)
        next(k, j) = detail::unary_kernel(yk, prev(k, 2 * j), prev(k, 2 * j + 1));
    }
    out.state.tables.push_back(std::move(next));
  }
  out.z.resize(channels);
  for (std::size_t k = 0; k < channels; ++k) out.z[k] = out.state.tables.back()(k, 0);
  return out;
}

/// Forward pass on sparsity-basis parameters: A = Theta B, then marginalize.
inline NaryResult nary_forward(const Matrix& y, const ParamTable& theta) {
  if (theta.arity > kMaxActivationArity)
    throw std::invalid_argument("nary_forward: arity must lie in [1, 8]");
  NaryResult out = nary_forward(y, params_to_table(theta));
  out.state.params_digest = detail::digest(theta.entries);
  return out;
}

/// Backward pass in table space. Returns gradients with respect to the
/// antecedents and to the belief-table logits A.
inline NaryGrad nary_table_backward(const NaryState& state, std::span<const double> upstream) {
  const int n = state.arity();
  const std::size_t channels = state.channels();
  if (state.tables.size() != static_cast<std::size_t>(n) + 1)
    throw std::invalid_argument("nary_backward: malformed state");
  if (upstream.size() != channels)
    throw std::invalid_argument("nary_backward: upstream length must equal channel count");

  NaryGrad grad{Matrix(channels, static_cast<std::size_t>(n)), Matrix(channels, vertex_count(n))};
  std::vector<double> g, g_prev;
  for (std::size_t k = 0; k < channels; ++k) {
    g.assign(1, upstream[k]);
    for (int i = n; i >= 1; --i) {
      const Matrix& prev = state.tables[static_cast<std::size_t>(i - 1)];
      const double yk = state.antecedents(k, static_cast<std::size_t>(i - 1));
      g_prev.assign(2 * g.size(), 0.0);
      double gy = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (g[j] == 0.0) continue;
        const UnaryGrad u =
            detail::unary_kernel_backward(yk, prev(k, 2 * j), prev(k, 2 * j + 1), g[j]);
        gy += u.y;
        g_prev[2 * j] = u.a0;
        g_prev[2 * j + 1] = u.a1;
      }
      grad.antecedents(k, static_cast<std::size_t>(i - 1)) = gy;
      g.swap(g_prev);
    }
    std::copy(g.begin(), g.end(), grad.params.row(k).begin());
  }
  return grad;
}

/// Backward pass to parameters: the table gradient mapped through B^T.
inline NaryGrad nary_backward(const NaryState& state, const ParamTable& theta,
                              std::span<const double> upstream) {
  if (theta.arity != state.arity() || theta.channels() != state.channels() ||
      detail::digest(theta.entries) != state.params_digest)
    throw std::invalid_argument("nary_backward: state was not produced from these parameters");
  NaryGrad grad = nary_table_backward(state, upstream);
  Matrix dtheta(grad.params.rows(), grad.params.cols());
  for (std::size_t k = 0; k < dtheta.rows(); ++k)
    detail::apply_basis_transpose(grad.params.row(k), dtheta.row(k), theta.arity);
  grad.params = std::move(dtheta);
  return grad;
}

/// Exact independent-antecedent marginalization in probability space, in the
/// same antecedent order as the LSEM recursion. Antecedent logits are clamped
/// to [-30, 30]; table logits beyond that range raise std::range_error.
inline std::vector<double> nary_forward_exact(const Matrix& y, const BeliefTable& table) {
  const int n = table.arity;
  detail::check_antecedents(y, n, table.channels(), "nary_forward_exact");
  for (double a : table.entries.flat()) require_table_logit(a, "nary_forward_exact");

  std::vector<double> z(table.channels());
  std::vector<double> p, c;
  for (std::size_t k = 0; k < table.channels(); ++k) {
    p.resize(vertex_count(n));
    c.resize(vertex_count(n));
    for (std::size_t j = 0; j < p.size(); ++j) {
      p[j] = logit_to_prob(table.entries(k, j));
      c[j] = logit_to_prob(-table.entries(k, j));
    }
    for (int i = 1; i <= n; ++i) {
      const double yi = std::clamp(y(k, static_cast<std::size_t>(i - 1)), -kExactLogitLimit,
                                   kExactLogitLimit);
      const double qt = logit_to_prob(yi), qf = logit_to_prob(-yi);
      const std::size_t half = p.size() / 2;
      for (std::size_t j = 0; j < half; ++j) {
        p[j] = p[2 * j] * qf + p[2 * j + 1] * qt;
        c[j] = c[2 * j] * qf + c[2 * j + 1] * qt;
      }
      p.resize(half);
      c.resize(half);
    }
    z[k] = std::log(p[0]) - std::log(c[0]);
  }
  return z;
}

/// Probability-space gradients of the exact marginalization.
struct ExactGrad {
  Matrix table;        // dJ/dp(Z | vertex)
  Matrix antecedents;  // dJ/dq(Y_i)
};

/// Reverse pass through the probability-space recursion given dJ/dq(Z) per
/// channel. Every marginalization multiplies the incoming gradient by a
/// probability (table entries) or a difference of probabilities (antecedents).
inline ExactGrad nary_backward_exact(const Matrix& y, const BeliefTable& table,
                                     std::span<const double> upstream) {
  const int n = table.arity;
  detail::check_antecedents(y, n, table.channels(), "nary_backward_exact");
  for (double a : table.entries.flat()) require_table_logit(a, "nary_backward_exact");
  if (upstream.size() != table.channels())
    throw std::invalid_argument("nary_backward_exact: upstream length must equal channel count");

  ExactGrad grad{Matrix(table.channels(), vertex_count(n)),
                 Matrix(table.channels(), static_cast<std::size_t>(n))};
  for (std::size_t k = 0; k < table.channels(); ++k) {
    std::vector<double> q(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      q[static_cast<std::size_t>(i)] = logit_to_prob(
          std::clamp(y(k, static_cast<std::size_t>(i)), -kExactLogitLimit, kExactLogitLimit));

    std::vector<std::vector<double>> stages(static_cast<std::size_t>(n) + 1);
    stages[0].resize(vertex_count(n));
    for (std::size_t j = 0; j < stages[0].size(); ++j)
      stages[0][j] = logit_to_prob(table.entries(k, j));
    for (int i = 1; i <= n; ++i) {
      const auto& prev = stages[static_cast<std::size_t>(i - 1)];
      auto& next = stages[static_cast<std::size_t>(i)];
      const double qi = q[static_cast<std::size_t>(i - 1)];
      next.resize(prev.size() / 2);
      for (std::size_t j = 0; j < next.size(); ++j)
        next[j] = prev[2 * j] * (1.0 - qi) + prev[2 * j + 1] * qi;
    }

    std::vector<double> g{upstream[k]}, g_prev;
    for (int i = n; i >= 1; --i) {
      const auto& prev = stages[static_cast<std::size_t>(i - 1)];
      const double qi = q[static_cast<std::size_t>(i - 1)];
      g_prev.assign(2 * g.size(), 0.0);
      double gq = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j) {
        g_prev[2 * j] = g[j] * (1.0 - qi);
        g_prev[2 * j + 1] = g[j] * qi;
        gq += g[j] * (prev[2 * j + 1] - prev[2 * j]);
      }
      grad.antecedents(k, static_cast<std::size_t>(i - 1)) = gq;
      g.swap(g_prev);
    }
    std::copy(g.begin(), g.end(), grad.table.row(k).begin());
  }
  return grad;
}

enum class AilKind { and_, or_, xnor };

/// Fixed logit-space binary operations recovered as hard-table limits.
inline double ail(AilKind kind, double y1, double y2) {
  require_finite(y1, "ail");
  require_finite(y2, "ail");
  switch (kind) {
    case AilKind::and_: return std::min({y1, y2, y1 + y2});
    case AilKind::or_: return std::max({y1, y2, y1 + y2});
    case AilKind::xnor: return sign(y1 * y2) * std::min(std::abs(y1), std::abs(y2));
  }
  throw std::invalid_argument("ail: unknown kind");
}

inline std::optional<AilKind> parse_ail(std::string_view name) {
  if (name == "and") return AilKind::and_;
  if (name == "or") return AilKind::or_;
  if (name == "xnor") return AilKind::xnor;
  return std::nullopt;
}

// Hard +-1 truth table of an AIL operation, bit-1-LSB vertex order.
inline std::array<double, 4> ail_truth_table(AilKind kind) {
  switch (kind) {
    case AilKind::and_: return {-1, -1, -1, 1};
    case AilKind::or_: return {-1, 1, 1, 1};
    case AilKind::xnor: return {1, -1, -1, 1};
  }
  throw std::invalid_argument("ail_truth_table: unknown kind");
}

}  // namespace softlogic
