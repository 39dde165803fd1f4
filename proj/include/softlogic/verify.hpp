#pragma once

// Built-in verification suite. Each check is self-contained, seeded, and
// reports a one-line detail string. Reference values are computed here by
// routes independent of the library kernels where practical (raw exponent
// forms, probability-space sums, explicit matrix products).

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "softlogic/belief_table.hpp"
#include "softlogic/experiment.hpp"
#include "softlogic/logicgen.hpp"
#include "softlogic/logit.hpp"
#include "softlogic/nary.hpp"
#include "softlogic/network.hpp"

namespace softlogic {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  // Basis used by the catalog and orthogonality checks; replaceable so a
  // fixture can inject a faulty basis.
  std::function<BasisMatrix(int)> basis = build_basis;
  std::uint64_t seed = 7;
  LearningConfig learning;
};

struct Check {
  std::string_view name;
  std::string_view summary;
  bool extended;       // long-running; excluded from the default run
  double time_limit;   // seconds, 0 for none
  std::function<CheckResult(const VerifyOptions&)> run;
};

namespace detail {

template <typename... Args>
std::string cat(const Args&... args) {
  std::ostringstream ss;
  ss.precision(12);
  (ss << ... << args);
  return ss.str();
}

inline CheckResult outcome(bool ok, std::string detail) { return {{}, ok, std::move(detail), 0.0}; }

// Smallest gap between competing arguments of every max and every absolute
// value in one unary kernel evaluation.
inline double kernel_margin(double y, double a0, double a1) {
  const double s = a0 + a1, d = a1 - a0;
  return std::min({std::abs(y), std::abs(d + y), std::abs(d - y),
                   std::abs(std::abs(y) + s - std::abs(d + y)),
                   std::abs(std::abs(y) - s - std::abs(d - y))});
}

inline double state_margin(const NaryState& st) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < st.channels(); ++k)
    for (int i = 1; i <= st.arity(); ++i) {
      const Matrix& prev = st.tables[static_cast<std::size_t>(i - 1)];
      const double y = st.antecedents(k, static_cast<std::size_t>(i - 1));
      for (std::size_t j = 0; j < prev.cols() / 2; ++j)
        m = std::min(m, kernel_margin(y, prev(k, 2 * j), prev(k, 2 * j + 1)));
    }
  return m;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace detail

// 1
inline CheckResult check_count_compositions(const VerifyOptions&) {
  const std::size_t n = count_binary_compositions();
  return detail::outcome(n == 1208, detail::cat(n));
}

// 2
inline CheckResult check_table_catalog(const VerifyOptions& opt) {
  const BasisMatrix b = opt.basis(2);
  int bad = 0;
  std::string first;
  for (const auto& row : catalog()) {
    double err = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      double a = 0.0;
      for (std::size_t l = 0; l < 4; ++l) a += row.params[l] * b(l, j);
      err = std::max(err, std::abs(a - row.table[j]));
    }
    if (err > 1e-12) {
      if (bad++ == 0) first = std::string(row.name);
    }
  }
  if (bad) return detail::outcome(false, detail::cat(bad, "/12 rows violate Theta B = A (first: ", first, ")"));
  return detail::outcome(true, "12/12 rows satisfy Theta B = A");
}

// 3
inline CheckResult check_basis(const VerifyOptions& opt) {
  for (int n = 1; n <= 8; ++n) {
    const BasisMatrix b = opt.basis(n);
    const std::size_t dim = vertex_count(n);
    for (std::size_t r = 0; r < dim; ++r)
      for (std::size_t c = 0; c < dim; ++c) {
        long dot = 0;
        for (std::size_t j = 0; j < dim; ++j) dot += long{b(r, j)} * b(c, j);
        const long want = r == c ? static_cast<long>(dim) : 0;
        if (dot != want)
          return detail::outcome(false, detail::cat("B B^T != 2^n I at n=", n, " (", r, ",", c, ")"));
      }
  }
  Rng rng(opt.seed, Stream::tables);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int n = 1 + static_cast<int>(rng.below(6));
    ParamTable theta(n, 1);
    for (double& v : theta.entries.flat()) v = rng.uniform(-10.0, 10.0);
    const ParamTable back = table_to_params(params_to_table(theta));
    for (std::size_t j = 0; j < vertex_count(n); ++j)
      worst = std::max(worst, std::abs(back.entries(0, j) - theta.entries(0, j)));
  }
  return detail::outcome(worst <= 1e-12,
                         detail::cat("orthogonal for n=1..8; round-trip max err ", worst));
}

// 4
inline CheckResult check_lsem_bound(const VerifyOptions& opt) {
  Rng rng(opt.seed, Stream::tables);
  int violations = 0;
  double worst = 0.0;
  std::vector<double> t;
  for (int s = 0; s < 100000; ++s) {
    t.resize(2 + rng.below(7));
    for (double& v : t) v = rng.uniform(-20.0, 20.0);
    const double gap = logsumexp(t) - lsem(t);
    worst = std::max(worst, gap / std::log(static_cast<double>(t.size())));
    if (!(gap >= 0.0 && gap <= std::log(static_cast<double>(t.size())))) ++violations;
  }
  return detail::outcome(violations == 0, detail::cat(violations, " violations in 100000; max gap/log(len) ", worst));
}

// 5
inline CheckResult check_unary_identity(const VerifyOptions& opt) {
  Rng rng(opt.seed, Stream::tables);
  double worst = 0.0;
  for (int s = 0; s < 100000; ++s) {
    const double y = rng.uniform(-20.0, 20.0), a0 = rng.uniform(-20.0, 20.0),
                 a1 = rng.uniform(-20.0, 20.0);
    // log-odds numerator and denominator exponents of the exact marginal
    const double num = std::max({a0, a0 + a1, a1 + y, a0 + a1 + y});
    const double den = std::max({0.0, a1, y, a0 + y});
    worst = std::max(worst, std::abs(unary_forward(y, {a0, a1}) - (num - den)));
  }
  return detail::outcome(worst <= 1e-12, detail::cat("max |diff| ", worst, " over 100000 inputs"));
}

// 6
inline CheckResult check_saturation(const VerifyOptions& opt) {
  Rng rng(opt.seed, Stream::tables);
  double near = 0.0, exact = 0.0;
  for (int s = 0; s < 10000; ++s) {
    const double a0 = rng.uniform(-20.0, 20.0), a1 = rng.uniform(-20.0, 20.0);
    const double d = std::abs(a1 - a0);
    near = std::max({near, std::abs(unary_forward(d + 1e-6, {a0, a1}) - a1),
                     std::abs(unary_forward(-d - 1e-6, {a0, a1}) - a0)});
    const double extra = rng.uniform(0.0, 20.0);
    exact = std::max({exact, std::abs(unary_forward(d + extra, {a0, a1}) - a1),
                      std::abs(unary_forward(-d - extra, {a0, a1}) - a0),
                      std::abs(unary_forward(d, {a0, a1}) - a1)});
  }
  double lookup = 0.0;
  for (int n = 1; n <= 5; ++n)
    for (int t = 0; t < 200; ++t) {
      BeliefTable a(n, 1);
      double amax = 0.0;
      for (double& v : a.entries.flat()) {
        v = rng.uniform(-10.0, 10.0);
        amax = std::max(amax, std::abs(v));
      }
      const std::size_t vertex = rng.below(vertex_count(n));
      Matrix y(1, static_cast<std::size_t>(n));
      for (int i = 1; i <= n; ++i)
        y(0, static_cast<std::size_t>(i - 1)) =
            (bit_of(vertex, i) ? 1.0 : -1.0) * (2.0 * amax + rng.uniform(0.0, 5.0));
      lookup = std::max(lookup, std::abs(nary_forward(y, a).z[0] - a.entries(0, vertex)));
    }
  const bool ok = near <= 1e-9 && exact <= 1e-12 && lookup <= 1e-12;
  return detail::outcome(ok, detail::cat("eps err ", near, "; exact err ", exact,
                                         "; n-ary lookup err ", lookup, " (n=1..5)"));
}

// 7
inline CheckResult check_irrelevance(const VerifyOptions& opt) {
  Rng rng(opt.seed, Stream::tables);
  int variant = 0, misdetected = 0;
  for (int t = 0; t < 1000; ++t) {
    const int n = 1 + static_cast<int>(rng.below(5));
    const int chosen = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    ParamTable theta(n, 1);
    for (std::size_t j = 0; j < vertex_count(n); ++j)
      theta.entries(0, j) = bit_of(j, chosen) ? 0.0 : rng.uniform(-5.0, 5.0);
    Matrix y(1, static_cast<std::size_t>(n));
    for (double& v : y.flat()) v = rng.uniform(-10.0, 10.0);
    const double z = nary_forward(y, theta).z[0];
    y(0, static_cast<std::size_t>(chosen - 1)) *= -1.0;
    if (nary_forward(y, theta).z[0] != z) ++variant;
    if (irrelevant_antecedents(theta.entries.row(0)) != std::vector<int>{chosen}) ++misdetected;
  }
  return detail::outcome(variant == 0 && misdetected == 0,
                         detail::cat(variant, " sign-flip changes, ", misdetected,
                                     " misdetected sets in 1000 tables"));
}

// 8
inline CheckResult check_gradient_structure(const VerifyOptions& opt) {
  Rng rng(opt.seed, Stream::tables);
  int magnitude_bad = 0, sparsity_bad = 0, fd_bad = 0;
  double worst_fd = 0.0;
  for (int s = 0; s < 10000; ++s) {
    const int n = 1 + static_cast<int>(rng.below(5));
    BeliefTable a(n, 1);
    Matrix y(1, static_cast<std::size_t>(n));
    NaryResult r;
    do {  // resample until every max/abs decision has a clear margin
      for (double& v : a.entries.flat()) v = rng.uniform(-8.0, 8.0);
      for (double& v : y.flat()) v = rng.uniform(-10.0, 10.0);
      r = nary_forward(y, a);
    } while (detail::state_margin(r.state) < 1e-3);
    const double up = (rng.coin() ? 1.0 : -1.0) * rng.uniform(0.5, 2.0);
    const std::vector<double> upv{up};
    const NaryGrad g = nary_table_backward(r.state, upv);

    for (double gy : g.antecedents.flat())
      if (gy != 0.0 && std::abs(gy) != std::abs(up)) ++magnitude_bad;
    std::size_t nonzero = 0;
    for (double ga : g.params.flat())
      if (ga != 0.0) ++nonzero;
    if (nonzero > 1) ++sparsity_bad;

    constexpr double h = 1e-5;
    auto probe = [&](double& x, double analytic) {
      const double old = x;
      x = old + h;
      const double zp = nary_forward(y, a).z[0];
      x = old - h;
      const double zm = nary_forward(y, a).z[0];
      x = old;
      const double err = detail::rel_err(up * (zp - zm) / (2 * h), analytic);
      worst_fd = std::max(worst_fd, err);
      if (err > 1e-5) ++fd_bad;
    };
    for (std::size_t i = 0; i < y.size(); ++i) probe(y.flat()[i], g.antecedents.flat()[i]);
    for (std::size_t j = 0; j < a.entries.size(); ++j) probe(a.entries.flat()[j], g.params.flat()[j]);
  }
  const bool ok = magnitude_bad == 0 && sparsity_bad == 0 && fd_bad == 0;
  return detail::outcome(ok, detail::cat(magnitude_bad, " magnitude, ", sparsity_bad, " sparsity, ",
                                         fd_bad, " finite-difference failures; max fd err ", worst_fd));
}

// 9
inline CheckResult check_attenuation(const VerifyOptions& opt) {
  Rng rng(opt.seed, Stream::tables);
  constexpr int n = 4;
  double exact_err = 0.0, sum_err = 0.0;
  int lsem_bad = 0;
  for (int t = 0; t < 100; ++t) {
    BeliefTable a(n, 1);
    for (double& v : a.entries.flat()) v = rng.uniform(1.0, 5.0);
    const Matrix y(1, n);  // q = 1/2 for every antecedent
    const double up = rng.uniform(0.5, 2.0);
    const std::vector<double> upv{up};

    const ExactGrad eg = nary_backward_exact(y, a, upv);
    double sum = 0.0;
    for (double g : eg.table.flat()) {
      exact_err = std::max(exact_err, std::abs(g - up / 16.0));
      sum += g;
    }
    sum_err = std::max(sum_err, std::abs(sum - up));

    const NaryGrad lg = nary_table_backward(nary_forward(y, a).state, upv);
    std::size_t nonzero = 0;
    bool full = false;
    for (double g : lg.params.flat())
      if (g != 0.0) {
        ++nonzero;
        full = std::abs(g) == up;
      }
    if (nonzero != 1 || !full) ++lsem_bad;
  }
  const bool ok = exact_err <= 1e-9 && sum_err <= 1e-9 && lsem_bad == 0;
  return detail::outcome(ok, detail::cat("exact entries = upstream/16 (max err ", exact_err,
                                         "), sum err ", sum_err, "; LSEM single full-magnitude misses ",
                                         lsem_bad, "/100"));
}

// 10
inline CheckResult check_ail_recovery(const VerifyOptions&) {
  constexpr double alpha = 100.0;
  double worst = 0.0;
  for (AilKind kind : {AilKind::and_, AilKind::or_, AilKind::xnor}) {
    BeliefTable a(2, 1);
    const auto truth = ail_truth_table(kind);
    for (std::size_t j = 0; j < 4; ++j) a.entries(0, j) = alpha * truth[j];
    Matrix y(1, 2);
    for (int i = 0; i <= 40; ++i)
      for (int k = 0; k <= 40; ++k) {
        y(0, 0) = -10.0 + 0.5 * i;
        y(0, 1) = -10.0 + 0.5 * k;
        worst = std::max(worst, std::abs(nary_forward(y, a).z[0] - ail(kind, y(0, 0), y(0, 1))));
      }
  }
  return detail::outcome(worst <= 1e-9, detail::cat("max |diff| ", worst, " on 3 x 41 x 41 grid"));
}

// 11
inline CheckResult check_parameter_counts(const VerifyOptions&) {
  constexpr std::size_t expected[] = {1088, 2176, 3328, 4608};
  std::string got;
  bool ok = true;
  for (int n = 1; n <= 4; ++n) {
    const std::size_t c = LayerSpec{32, 32, Activation::nary, n}.parameter_count();
    ok = ok && c == expected[n - 1];
    got += (n > 1 ? " " : "") + std::to_string(c);
  }
  return detail::outcome(ok, got);
}

// 12
inline CheckResult check_logic_learning(const VerifyOptions& opt) {
  const LearningConfig& cfg = opt.learning;
  bool ok = true;
  std::string detail;
  for (const LearningRow& row : run_learning(cfg)) {
    ok = ok && row.passed;
    detail += detail::cat("gamma=", row.gamma, " median ", row.median, " (", row.trials_above, "/",
                          cfg.trials, " >= ", cfg.trial_threshold, "); ");
  }
  auto perfect = [](const std::vector<double>& acc) {
    return static_cast<int>(std::count(acc.begin(), acc.end(), 1.0));
  };
  const auto xor_acc = run_named_function(xor_table(), Activation::nary, cfg);
  const auto cond_acc = run_named_function(conditioned_disjunction_table(), Activation::nary, cfg);
  const auto relu_acc = run_named_function(xor_table(), Activation::relu, cfg);
  const double relu_max = *std::max_element(relu_acc.begin(), relu_acc.end());
  ok = ok && perfect(xor_acc) > 0 && perfect(cond_acc) > 0 && relu_max < 0.9;
  detail += detail::cat("xor 1.0 in ", perfect(xor_acc), "/", cfg.trials, "; cond 1.0 in ",
                        perfect(cond_acc), "/", cfg.trials, "; relu-xor max ", relu_max);
  return detail::outcome(ok, detail);
}

// 13
inline CheckResult check_determinism(const VerifyOptions& opt) {
  const auto first = run_learning(opt.learning);
  const auto second = run_learning(opt.learning);
  std::size_t same = 0, total = 0;
  for (std::size_t g = 0; g < first.size(); ++g)
    for (std::size_t t = 0; t < first[g].metrics_csv.size(); ++t) {
      ++total;
      if (first[g].metrics_csv[t] == second[g].metrics_csv[t]) ++same;
    }
  return detail::outcome(total > 0 && same == total,
                         detail::cat(same, "/", total, " metrics CSVs identical across reruns"));
}

inline const std::vector<Check>& builtin_checks() {
  static const std::vector<Check> checks = {
      {"count-compositions", "distinct quaternary compositions of binary operations", false, 10,
       check_count_compositions},
      {"table-catalog", "binary catalog rows satisfy Theta B = A", false, 1, check_table_catalog},
      {"basis", "basis orthogonality and Theta/A round trip", false, 5, check_basis},
      {"lsem-bound", "0 <= LSE - max <= log(len)", false, 5, check_lsem_bound},
      {"unary-identity", "unary activation equals the two-max-of-four form", false, 5,
       check_unary_identity},
      {"saturation", "saturated inputs return table entries exactly", false, 0, check_saturation},
      {"irrelevance", "zeroed antisymmetric parameters make an antecedent irrelevant", false, 0,
       check_irrelevance},
      {"gradient-structure", "sparse full-magnitude gradients, finite differences", false, 0,
       check_gradient_structure},
      {"attenuation", "exact-marginal gradient attenuation vs LSEM", false, 0, check_attenuation},
      {"ail-recovery", "hard tables recover and/or/xnor AIL", false, 2, check_ail_recovery},
      {"parameter-counts", "per-layer parameter counts at 32x32", false, 0, check_parameter_counts},
      {"logic-learning", "desk-scale logic learning across seeded trials", true, 300,
       check_logic_learning},
      {"determinism", "identical metrics on rerun with identical seeds", true, 0, check_determinism},
  };
  return checks;
}

inline const Check* find_check(std::string_view name) {
  for (const auto& c : builtin_checks())
    if (c.name == name) return &c;
  return nullptr;
}

inline CheckResult run_check(const Check& check, const VerifyOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult r;
  try {
    r = check.run(opt);
  } catch (const std::exception& e) {
    r = {{}, false, std::string("exception: ") + e.what(), 0.0};
  }
  r.name = std::string(check.name);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (check.time_limit > 0.0 && r.seconds > check.time_limit) {
    r.passed = false;
    r.detail += detail::cat(" [exceeded ", check.time_limit, " s limit]");
  }
  return r;
}

}  // namespace softlogic
