#pragma once

// Belief tables (A) and their sparsity basis (Theta), related by A = Theta B.
//
// Column j of a table addresses the antecedent vertex whose i-th antecedent is
// bit i of j, counting antecedents from 1 at the least-significant bit. Flips
// of antecedent 1 therefore sit in consecutive columns.
//
// The basis is defined elementwise:
//   B[l][j] = prod_i f(bit_i(l), bit_i(j)),  f(1,0) = -1, otherwise +1,
// i.e. B[l][j] = (-1)^popcount(l & ~j). Row l of B has a symmetric impact on
// every antecedent whose bit is clear in l and an antisymmetric impact on
// every antecedent whose bit is set.

#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "softlogic/matrix.hpp"

namespace softlogic {

inline constexpr int kMaxBasisArity = 12;
inline constexpr int kMaterializedBasisArity = 6;
inline constexpr double kIrrelevanceTolerance = 1e-9;

constexpr std::size_t vertex_count(int arity) noexcept { return std::size_t{1} << arity; }

constexpr bool bit_of(std::size_t index, int antecedent) noexcept {
  return ((index >> (antecedent - 1)) & 1U) != 0;
}

constexpr int basis_sign(std::size_t row, std::size_t col) noexcept {
  return (std::popcount(row & ~col) & 1) ? -1 : 1;
}

namespace detail {

inline int arity_of_width(std::size_t width, const char* where) {
  if (width < 2 || !std::has_single_bit(width))
    throw std::invalid_argument(std::string(where) + ": row width must be 2^n with n >= 1");
  return std::countr_zero(width);
}

inline void check_table_shape(int arity, const Matrix& entries, const char* where) {
  if (arity < 1 || arity > kMaxBasisArity)
    throw std::invalid_argument(std::string(where) + ": arity out of range [1, 12]");
  if (entries.cols() != vertex_count(arity))
    throw std::invalid_argument(std::string(where) + ": expected " +
                                std::to_string(vertex_count(arity)) + " columns, got " +
                                std::to_string(entries.cols()));
}

}  // namespace detail

/// Per-channel belief-table logits, channels x 2^n.
struct BeliefTable {
  int arity = 1;
  Matrix entries;

  BeliefTable() = default;
  BeliefTable(int n, Matrix m) : arity(n), entries(std::move(m)) {
    detail::check_table_shape(arity, entries, "BeliefTable");
  }
  BeliefTable(int n, std::size_t channels) : BeliefTable(n, Matrix(channels, vertex_count(n))) {}

  std::size_t channels() const noexcept { return entries.rows(); }
  friend bool operator==(const BeliefTable&, const BeliefTable&) = default;
};

/// Per-channel parameters in the sparsity basis, channels x 2^n.
struct ParamTable {
  int arity = 1;
  Matrix entries;

  ParamTable() = default;
  ParamTable(int n, Matrix m) : arity(n), entries(std::move(m)) {
    detail::check_table_shape(arity, entries, "ParamTable");
  }
  ParamTable(int n, std::size_t channels) : ParamTable(n, Matrix(channels, vertex_count(n))) {}

  std::size_t channels() const noexcept { return entries.rows(); }
  friend bool operator==(const ParamTable&, const ParamTable&) = default;
};

/// Materialized 2^n x 2^n basis with entries in {-1, +1}.
class BasisMatrix {
public:
  explicit BasisMatrix(int n) : arity_(n), dim_(vertex_count(n)), entries_(dim_ * dim_) {
    for (std::size_t l = 0; l < dim_; ++l)
      for (std::size_t j = 0; j < dim_; ++j)
        entries_[l * dim_ + j] = static_cast<std::int8_t>(basis_sign(l, j));
  }

  int arity() const noexcept { return arity_; }
  std::size_t dim() const noexcept { return dim_; }
  int operator()(std::size_t l, std::size_t j) const noexcept { return entries_[l * dim_ + j]; }
  // Used by fault-injection fixtures.
  void set(std::size_t l, std::size_t j, int v) {
    entries_[l * dim_ + j] = static_cast<std::int8_t>(v);
  }

private:
  int arity_;
  std::size_t dim_;
  std::vector<std::int8_t> entries_;
};

inline BasisMatrix build_basis(int n) {
  if (n < 1 || n > kMaxBasisArity)
    throw std::invalid_argument("build_basis: arity must lie in [1, 12]");
  return BasisMatrix(n);
}

namespace detail {

inline const BasisMatrix& cached_basis(int n) {
  static const std::array<BasisMatrix, kMaterializedBasisArity> cache = [] {
    return std::array<BasisMatrix, kMaterializedBasisArity>{
        BasisMatrix(1), BasisMatrix(2), BasisMatrix(3),
        BasisMatrix(4), BasisMatrix(5), BasisMatrix(6)};
  }();
  return cache[static_cast<std::size_t>(n - 1)];
}

// In-place row transform v <- v B (one signed butterfly per antecedent).
inline void synthesize_butterfly(std::span<double> v) noexcept {
  for (std::size_t h = 1; h < v.size(); h <<= 1)
    for (std::size_t base = 0; base < v.size(); base += 2 * h)
      for (std::size_t k = base; k < base + h; ++k) {
        const double lo = v[k], hi = v[k + h];
        v[k] = lo - hi;
        v[k + h] = lo + hi;
      }
}

// In-place row transform v <- v B^T.
inline void analyze_butterfly(std::span<double> v) noexcept {
  for (std::size_t h = 1; h < v.size(); h <<= 1)
    for (std::size_t base = 0; base < v.size(); base += 2 * h)
      for (std::size_t k = base; k < base + h; ++k) {
        const double lo = v[k], hi = v[k + h];
        v[k] = lo + hi;
        v[k + h] = hi - lo;
      }
}

// out = in B for a single row.
inline void apply_basis(std::span<const double> in, std::span<double> out, int n) {
  if (n <= kMaterializedBasisArity) {
    const BasisMatrix& b = cached_basis(n);
    for (std::size_t j = 0; j < b.dim(); ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < b.dim(); ++l) acc += in[l] * b(l, j);
      out[j] = acc;
    }
  } else {
    std::copy(in.begin(), in.end(), out.begin());
    synthesize_butterfly(out);
  }
}

// out = in B^T for a single row.
inline void apply_basis_transpose(std::span<const double> in, std::span<double> out, int n) {
  if (n <= kMaterializedBasisArity) {
    const BasisMatrix& b = cached_basis(n);
    for (std::size_t l = 0; l < b.dim(); ++l) {
      double acc = 0.0;
      for (std::size_t j = 0; j < b.dim(); ++j) acc += in[j] * b(l, j);
      out[l] = acc;
    }
  } else {
    std::copy(in.begin(), in.end(), out.begin());
    analyze_butterfly(out);
  }
}

}  // namespace detail

/// A = Theta B, row by row.
inline BeliefTable params_to_table(const ParamTable& theta) {
  detail::check_table_shape(theta.arity, theta.entries, "params_to_table");
  BeliefTable a(theta.arity, theta.channels());
  for (std::size_t k = 0; k < theta.channels(); ++k)
    detail::apply_basis(theta.entries.row(k), a.entries.row(k), theta.arity);
  return a;
}

/// Theta = A B^T / 2^n, the exact inverse of params_to_table.
inline ParamTable table_to_params(const BeliefTable& a) {
  detail::check_table_shape(a.arity, a.entries, "table_to_params");
  ParamTable theta(a.arity, a.channels());
  const double scale = 1.0 / static_cast<double>(vertex_count(a.arity));
  for (std::size_t k = 0; k < a.channels(); ++k) {
    auto out = theta.entries.row(k);
    detail::apply_basis_transpose(a.entries.row(k), out, a.arity);
    for (double& v : out) v *= scale;
  }
  return theta;
}

/// Antecedents (1-based) whose antisymmetric parameters are all within `tol`
/// of zero. These antecedents cannot influence the belief function.
inline std::vector<int> irrelevant_antecedents(std::span<const double> theta_row,
                                               double tol = kIrrelevanceTolerance) {
  if (!(tol >= 0.0)) throw std::invalid_argument("irrelevant_antecedents: tol must be >= 0");
  const int n = detail::arity_of_width(theta_row.size(), "irrelevant_antecedents");
  std::vector<int> result;
  for (int i = 1; i <= n; ++i) {
    bool zero = true;
    for (std::size_t j = 0; j < theta_row.size() && zero; ++j)
      if (bit_of(j, i) && std::abs(theta_row[j]) > tol) zero = false;
    if (zero) result.push_back(i);
  }
  return result;
}

inline std::size_t count_nonzeros(std::span<const double> row, double tol = kIrrelevanceTolerance) {
  std::size_t nnz = 0;
  for (double v : row)
    if (std::abs(v) > tol) ++nnz;
  return nnz;
}

namespace detail {

// Relocates the bits of j: bit i (1-based) moves to bit map[i-1].
inline std::size_t scatter_bits(std::size_t j, std::span<const int> map) noexcept {
  std::size_t out = 0;
  for (std::size_t i = 0; i < map.size(); ++i)
    if ((j >> i) & 1U) out |= std::size_t{1} << (map[i] - 1);
  return out;
}

inline void check_injective(std::span<const int> map, int target, const char* where) {
  std::vector<bool> seen(static_cast<std::size_t>(target) + 1, false);
  for (int t : map) {
    if (t < 1 || t > target)
      throw std::invalid_argument(std::string(where) + ": antecedent index out of range");
    if (seen[static_cast<std::size_t>(t)])
      throw std::invalid_argument(std::string(where) + ": map is not injective");
    seen[static_cast<std::size_t>(t)] = true;
  }
}

}  // namespace detail

/// Re-expresses an arity-m parameter table at arity n, with antecedent i of
/// the source becoming antecedent argument_map[i-1] (1-based) of the result.
/// Unmapped antecedents become irrelevant.
inline ParamTable embed(const ParamTable& theta, int target_arity, std::span<const int> argument_map) {
  if (target_arity < theta.arity || target_arity > kMaxBasisArity)
    throw std::invalid_argument("embed: target arity must be in [source arity, 12]");
  if (argument_map.size() != static_cast<std::size_t>(theta.arity))
    throw std::invalid_argument("embed: argument map length must equal source arity");
  detail::check_injective(argument_map, target_arity, "embed");

  ParamTable out(target_arity, theta.channels());
  for (std::size_t k = 0; k < theta.channels(); ++k)
    for (std::size_t j = 0; j < vertex_count(theta.arity); ++j)
      out.entries(k, detail::scatter_bits(j, argument_map)) = theta.entries(k, j);
  return out;
}

/// Moves antecedent i to position perm[i-1] (1-based). The basis is invariant
/// under this relabeling, so the same permutation applies to parameters.
template <typename Table>
Table permute_antecedents(const Table& a, std::span<const int> perm) {
  if (perm.size() != static_cast<std::size_t>(a.arity))
    throw std::invalid_argument("permute_antecedents: permutation length must equal arity");
  detail::check_injective(perm, a.arity, "permute_antecedents");
  Table out(a.arity, a.channels());
  for (std::size_t k = 0; k < a.channels(); ++k)
    for (std::size_t j = 0; j < vertex_count(a.arity); ++j)
      out.entries(k, detail::scatter_bits(j, perm)) = a.entries(k, j);
  return out;
}

struct CatalogEntry {
  std::string_view name;
  std::array<double, 4> table;
  std::array<double, 4> params;
};

// Selected binary activation functions, columns ordered A00, A01, A10, A11
// (i.e. bit-1-LSB vertex index 0..3).
inline const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> rows = {
      {"true", {1, 1, 1, 1}, {1, 0, 0, 0}},
      {"arg_1", {-1, 1, -1, 1}, {0, 1, 0, 0}},
      {"not_2", {1, 1, -1, -1}, {0, 0, -1, 0}},
      {"xor", {-1, 1, 1, -1}, {0, 0, 0, -1}},
      {"relu_1", {0, 1, 0, 1}, {0.5, 0.5, 0, 0}},
      {"relu_not2", {1, 1, 0, 0}, {0.5, 0, -0.5, 0}},
      {"relu_xor", {0, 1, 1, 0}, {0.5, 0, 0, -0.5}},
      {"imply", {1, -1, 1, 1}, {0.5, -0.5, 0.5, 0.5}},
      {"imply*", {0, -1, 0, 1}, {0, 0, 0.5, 0.5}},
      {"and", {-1, -1, -1, 1}, {-0.5, 0.5, 0.5, 0.5}},
      {"or", {-1, 1, 1, 1}, {0.5, 0.5, 0.5, -0.5}},
      {"and*", {-1, 0, 0, 1}, {0, 0.5, 0.5, 0}},
  };
  return rows;
}

inline std::optional<CatalogEntry> find_catalog(std::string_view name) {
  for (const auto& row : catalog())
    if (row.name == name) return row;
  return std::nullopt;
}

inline ParamTable catalog_params(const CatalogEntry& row, double scale = 1.0) {
  ParamTable theta(2, 1);
  for (std::size_t j = 0; j < 4; ++j) theta.entries(0, j) = scale * row.params[j];
  return theta;
}

inline BeliefTable catalog_table(const CatalogEntry& row, double scale = 1.0) {
  BeliefTable a(2, 1);
  for (std::size_t j = 0; j < 4; ++j) a.entries(0, j) = scale * row.table[j];
  return a;
}

}  // namespace softlogic
