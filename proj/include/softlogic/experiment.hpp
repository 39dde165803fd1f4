#pragma once

// Seeded multi-trial training runs. Each trial owns its seed and its report;
// workers share nothing but a job counter.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "softlogic/io.hpp"
#include "softlogic/logicgen.hpp"
#include "softlogic/network.hpp"
#include "softlogic/train.hpp"

namespace softlogic {

inline unsigned default_thread_count() {
  return std::max(1U, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers. The first
/// exception thrown by any job is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = default_thread_count();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::vector<std::uint64_t> trial_seeds(int trials, std::uint64_t first = 1) {
  if (trials <= 0) throw std::invalid_argument("trial count must be positive");
  std::vector<std::uint64_t> seeds;
  for (int t = 0; t < trials; ++t) seeds.push_back(first + static_cast<std::uint64_t>(t));
  return seeds;
}

/// One report per seed, in seed order. Each trial initializes its network
/// and shuffles with its own seed.
inline std::vector<TrainReport> run_trials(const std::vector<LayerSpec>& specs, const Dataset& data,
                                           const TrainConfig& base,
                                           std::span<const std::uint64_t> seeds,
                                           unsigned threads = 0) {
  std::vector<TrainReport> reports(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t i) {
    TrainConfig cfg = base;
    cfg.seed = seeds[i];
    reports[i] = train(specs, data, cfg);
  });
  return reports;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// ---- desk-scale logic learning ----------------------------------------------

struct LearningConfig {
  std::size_t n_inputs = 8;
  std::size_t n_outputs = 8;
  std::vector<int> gammas{2, 3, 4};
  std::size_t n_train = 2000;
  std::size_t n_val = 500;
  std::size_t n_test = 500;
  int trials = 12;
  TrainConfig train;
  unsigned threads = 0;
  double median_threshold = 0.99;
  double trial_threshold = 0.95;
  int min_trials_above = 10;
};

struct LearningRow {
  int gamma = 0;
  std::vector<double> test_accuracy;     // per trial, seeds 1..trials
  std::vector<std::string> metrics_csv;  // per trial
  double median = 0.0;
  int trials_above = 0;
  bool passed = false;
};

/// Single n-ary layer with n = gamma against a random gamma-ary ground truth.
/// The ground truth and data for each gamma are drawn with seed = gamma.
inline LearningRow run_learning_row(const LearningConfig& cfg, int gamma) {
  const auto seed = static_cast<std::uint64_t>(gamma);
  const GroundTruth gt = generate_ground_truth(cfg.n_inputs, cfg.n_outputs, gamma, seed);
  const Dataset data = synthesize(gt, cfg.n_train, cfg.n_val, cfg.n_test, seed);
  const auto specs = make_layer_specs(cfg.n_inputs, {cfg.n_outputs}, Activation::nary, gamma);
  const auto seeds = trial_seeds(cfg.trials);
  const auto reports = run_trials(specs, data, cfg.train, seeds, cfg.threads);

  LearningRow row;
  row.gamma = gamma;
  for (const auto& r : reports) {
    row.test_accuracy.push_back(r.test_accuracy());
    row.metrics_csv.push_back(metrics_to_csv(r.epochs));
    if (r.test_accuracy() >= cfg.trial_threshold) ++row.trials_above;
  }
  row.median = median(row.test_accuracy);
  row.passed = row.median >= cfg.median_threshold && row.trials_above >= cfg.min_trials_above;
  return row;
}

inline std::vector<LearningRow> run_learning(const LearningConfig& cfg) {
  std::vector<LearningRow> rows;
  for (int g : cfg.gammas) rows.push_back(run_learning_row(cfg, g));
  return rows;
}

/// A named truth function learned by a single layer whose arity matches the
/// function's. Returns the per-trial test accuracies.
inline std::vector<double> run_named_function(const std::vector<bool>& table, Activation activation,
                                              const LearningConfig& cfg) {
  const int arity = detail::arity_of_width(table.size(), "run_named_function");
  const auto n_in = static_cast<std::size_t>(arity);
  const GroundTruth gt = fixed_table_ground_truth(n_in, 1, table, 1);
  const Dataset data = synthesize(gt, cfg.n_train, cfg.n_val, cfg.n_test, 1);
  const auto specs = make_layer_specs(n_in, {1}, activation, arity);
  const auto seeds = trial_seeds(cfg.trials);
  std::vector<double> acc;
  for (const auto& r : run_trials(specs, data, cfg.train, seeds, cfg.threads))
    acc.push_back(r.test_accuracy());
  return acc;
}

}  // namespace softlogic
