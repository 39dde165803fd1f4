#pragma once

// Random truth-function benchmarks: gamma-ary ground truths over a bank of
// independent Boolean inputs, logit-encoded datasets drawn from them, the
// layer-sizing rule for compositions of n-ary layers, and the count of
// quaternary functions reachable by three binary operations.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "softlogic/logit.hpp"
#include "softlogic/matrix.hpp"

namespace softlogic {

/// Purpose tags for independent random streams derived from one seed.
enum class Stream : std::uint64_t {
  weights = 1,
  subsets = 2,
  tables = 3,
  data = 4,
  shuffle = 5,
};

/// Counter-based generator: output k of stream (seed, purpose) is
/// splitmix64(key + k * golden), with key a mix of seed and purpose. Draws
/// depend only on (seed, purpose, counter), never on other streams.
class Rng {
public:
  using result_type = std::uint64_t;

  Rng(std::uint64_t seed, Stream purpose)
      : key_(mix(seed * 0x9e3779b97f4a7c15ULL ^ mix(static_cast<std::uint64_t>(purpose)))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() noexcept { return mix(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  bool coin() noexcept { return ((*this)() >> 63) != 0; }

  // Uniform integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: empty range");
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % n;
  }

  std::uint64_t counter() const noexcept { return counter_; }

private:
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

/// One output of a ground truth: a truth table over an ordered subset of the
/// inputs. table[j] is the value at the vertex whose i-th antecedent is bit i
/// of j (antecedent 1 at the least-significant bit).
struct OutputFunction {
  std::vector<std::size_t> inputs;
  std::vector<bool> table;

  bool evaluate(const std::vector<bool>& x) const {
    std::size_t j = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i)
      if (x[inputs[i]]) j |= std::size_t{1} << i;
    return table[j];
  }
};

struct GroundTruth {
  std::size_t n_inputs = 0;
  std::size_t n_outputs = 0;
  int gamma = 0;
  std::vector<OutputFunction> outputs;

  std::vector<bool> apply(const std::vector<bool>& x) const {
    if (x.size() != n_inputs) throw std::invalid_argument("GroundTruth::apply: input width");
    std::vector<bool> y(n_outputs);
    for (std::size_t k = 0; k < n_outputs; ++k) y[k] = outputs[k].evaluate(x);
    return y;
  }

  void validate() const {
    if (outputs.size() != n_outputs) throw std::invalid_argument("GroundTruth: output count");
    for (const auto& f : outputs) {
      if (f.inputs.size() != static_cast<std::size_t>(gamma))
        throw std::invalid_argument("GroundTruth: subset size differs from gamma");
      if (f.table.size() != (std::size_t{1} << gamma))
        throw std::invalid_argument("GroundTruth: table size differs from 2^gamma");
      std::set<std::size_t> distinct(f.inputs.begin(), f.inputs.end());
      if (distinct.size() != f.inputs.size())
        throw std::invalid_argument("GroundTruth: repeated antecedent");
      for (std::size_t i : f.inputs)
        if (i >= n_inputs) throw std::invalid_argument("GroundTruth: input index out of range");
    }
  }
};

namespace detail {

inline void check_gt_shape(std::size_t n_inputs, std::size_t n_outputs, int gamma) {
  if (n_inputs == 0 || n_outputs == 0)
    throw std::invalid_argument("ground truth needs at least one input and one output");
  if (gamma < 1 || static_cast<std::size_t>(gamma) > n_inputs)
    throw std::invalid_argument("gamma (" + std::to_string(gamma) +
                                ") must lie in [1, n_inputs = " + std::to_string(n_inputs) + "]");
  if (gamma > 20) throw std::invalid_argument("gamma above 20 is not supported");
}

// Uniform ordered subset of `count` distinct indices from [0, n) by partial
// Fisher-Yates.
inline std::vector<std::size_t> draw_subset(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i)
    std::swap(pool[i], pool[i + rng.below(n - i)]);
  pool.resize(count);
  return pool;
}

}  // namespace detail

/// Each output draws gamma distinct inputs and 2^gamma fair truth-table bits.
inline GroundTruth generate_ground_truth(std::size_t n_inputs, std::size_t n_outputs, int gamma,
                                         std::uint64_t seed) {
  detail::check_gt_shape(n_inputs, n_outputs, gamma);
  Rng subsets(seed, Stream::subsets);
  Rng tables(seed, Stream::tables);
  GroundTruth gt{n_inputs, n_outputs, gamma, {}};
  gt.outputs.reserve(n_outputs);
  for (std::size_t k = 0; k < n_outputs; ++k) {
    OutputFunction f;
    f.inputs = detail::draw_subset(n_inputs, static_cast<std::size_t>(gamma), subsets);
    f.table.resize(std::size_t{1} << gamma);
    for (std::size_t j = 0; j < f.table.size(); ++j) f.table[j] = tables.coin();
    gt.outputs.push_back(std::move(f));
  }
  return gt;
}

/// Every output applies the same fixed truth table to its own random subset.
inline GroundTruth fixed_table_ground_truth(std::size_t n_inputs, std::size_t n_outputs,
                                            const std::vector<bool>& table, std::uint64_t seed) {
  if (table.size() < 2 || (table.size() & (table.size() - 1)) != 0)
    throw std::invalid_argument("fixed_table_ground_truth: table size must be 2^gamma");
  int gamma = 0;
  while ((std::size_t{1} << gamma) < table.size()) ++gamma;
  detail::check_gt_shape(n_inputs, n_outputs, gamma);
  Rng subsets(seed, Stream::subsets);
  GroundTruth gt{n_inputs, n_outputs, gamma, {}};
  for (std::size_t k = 0; k < n_outputs; ++k)
    gt.outputs.push_back(
        {detail::draw_subset(n_inputs, static_cast<std::size_t>(gamma), subsets), table});
  return gt;
}

// Named truth tables usable with fixed_table_ground_truth.
inline std::vector<bool> xor_table() { return {false, true, true, false}; }

// (c ? p : q) with antecedents ordered (c, p, q).
inline std::vector<bool> conditioned_disjunction_table() {
  std::vector<bool> t(8);
  for (std::size_t j = 0; j < 8; ++j) {
    const bool c = j & 1U, p = j & 2U, q = j & 4U;
    t[j] = c ? p : q;
  }
  return t;
}

/// Logit-encoded samples: inputs and targets in {-6.91, +6.91}.
struct Split {
  Matrix inputs;
  Matrix targets;

  std::size_t size() const noexcept { return inputs.rows(); }
};

struct Dataset {
  Split train;
  Split val;
  Split test;
};

inline double encode(bool b) noexcept { return b ? kDataLogit : -kDataLogit; }

inline Split synthesize_split(const GroundTruth& gt, std::size_t count, Rng& rng) {
  Split s{Matrix(count, gt.n_inputs), Matrix(count, gt.n_outputs)};
  std::vector<bool> x(gt.n_inputs);
  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t i = 0; i < gt.n_inputs; ++i) {
      const bool bit = rng.coin();
      x[i] = bit;
      s.inputs(r, i) = encode(bit);
    }
    for (std::size_t k = 0; k < gt.n_outputs; ++k) {
      const OutputFunction& f = gt.outputs[k];
      std::size_t j = 0;
      for (std::size_t i = 0; i < f.inputs.size(); ++i)
        if (x[f.inputs[i]]) j |= std::size_t{1} << i;
      s.targets(r, k) = encode(f.table[j]);
    }
  }
  return s;
}

/// Inputs are independent fair coins. The three splits are consecutive draws
/// from one data stream.
inline Dataset synthesize(const GroundTruth& gt, std::size_t n_train, std::size_t n_val,
                          std::size_t n_test, std::uint64_t seed) {
  if (n_train == 0 || n_val == 0 || n_test == 0)
    throw std::invalid_argument("synthesize: split sizes must be positive");
  gt.validate();
  Rng rng(seed, Stream::data);
  Dataset d;
  d.train = synthesize_split(gt, n_train, rng);
  d.val = synthesize_split(gt, n_val, rng);
  d.test = synthesize_split(gt, n_test, rng);
  return d;
}

/// Layer widths for composing n-ary layers to cover gamma-ary dependencies:
/// L = ceil(log_n gamma) layers (at least one), hidden layer l holding
/// base * ceil(gamma / n^l) elements and the last layer `base`.
inline std::vector<std::size_t> size_architecture(int gamma, int arity, std::size_t base = 32) {
  if (gamma < 1 || arity < 1) throw std::invalid_argument("size_architecture: gamma, n >= 1");
  if (arity == 1 && gamma > 1)
    throw std::invalid_argument("size_architecture: unary layers cannot combine antecedents");
  const auto g = static_cast<std::size_t>(gamma);
  const auto n = static_cast<std::size_t>(arity);
  std::size_t layers = 0;
  for (std::size_t reach = 1; reach < g; reach *= n) ++layers;
  layers = std::max<std::size_t>(layers, 1);

  std::vector<std::size_t> widths;
  std::size_t reach = 1;
  for (std::size_t l = 1; l <= layers; ++l) {
    reach *= n;
    widths.push_back(l == layers ? base : base * ((g + reach - 1) / reach));
  }
  return widths;
}

/// Number of distinct 4-ary truth functions of the form (xa o1 xb) o3 (xc o2 xd)
/// over the three pairings of {x1..x4}, for all 16^3 operator triples.
/// Truth tables are 16-bit masks evaluated bit-parallel.
inline std::size_t count_binary_compositions() {
  // Vertex v holds x_i = bit (i-1) of v; mask bit v is the value at vertex v.
  constexpr std::uint16_t x[4] = {0xAAAA, 0xCCCC, 0xF0F0, 0xFF00};
  auto apply = [](unsigned op, std::uint16_t a, std::uint16_t b) -> std::uint16_t {
    std::uint16_t r = 0;
    if (op & 1U) r |= static_cast<std::uint16_t>(~a & ~b);
    if (op & 2U) r |= static_cast<std::uint16_t>(a & ~b);
    if (op & 4U) r |= static_cast<std::uint16_t>(~a & b);
    if (op & 8U) r |= static_cast<std::uint16_t>(a & b);
    return r;
  };
  constexpr int pairings[3][4] = {{0, 1, 2, 3}, {0, 2, 1, 3}, {0, 3, 1, 2}};
  std::vector<bool> seen(1U << 16, false);
  std::size_t distinct = 0;
  for (const auto& p : pairings)
    for (unsigned o1 = 0; o1 < 16; ++o1) {
      const std::uint16_t left = apply(o1, x[p[0]], x[p[1]]);
      for (unsigned o2 = 0; o2 < 16; ++o2) {
        const std::uint16_t right = apply(o2, x[p[2]], x[p[3]]);
        for (unsigned o3 = 0; o3 < 16; ++o3) {
          const std::uint16_t f = apply(o3, left, right);
          if (!seen[f]) {
            seen[f] = true;
            ++distinct;
          }
        }
      }
    }
  return distinct;
}

}  // namespace softlogic
