#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "softlogic/experiment.hpp"
#include "softlogic/io.hpp"
#include "softlogic/train.hpp"

using namespace softlogic;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("softlogic_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Dataset xor_data() {
  const GroundTruth gt = fixed_table_ground_truth(2, 1, xor_table(), 1);
  return synthesize(gt, 2000, 500, 500, 1);
}

}  // namespace

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> p{1.0, -2.0, 0.5};
  const std::vector<double> g{0.3, -4.0, 0.0};
  AdamState st(3);
  adam_step(p, g, st, AdamConfig{});
  EXPECT_NEAR(p[0], 1.0 - 1e-2, 1e-9);
  EXPECT_NEAR(p[1], -2.0 + 1e-2, 1e-9);
  EXPECT_EQ(p[2], 0.5);
  const auto mags = st.average_gradient_magnitudes(AdamConfig{});
  EXPECT_NEAR(mags[0], 0.3, 1e-12);
  EXPECT_NEAR(mags[1], 4.0, 1e-12);
  EXPECT_THROW(adam_step(p, std::vector<double>{1.0}, st, AdamConfig{}), std::invalid_argument);
}

TEST(AdaptiveL1, FifteenSixteenthsQuantile) {
  std::vector<double> m;
  for (int i = 16; i >= 1; --i) m.push_back(i);
  EXPECT_DOUBLE_EQ(adaptive_l1_weight(m), 1.5);
  EXPECT_DOUBLE_EQ(adaptive_l1_weight(std::vector<double>{2.0}), 0.2);
  EXPECT_THROW(adaptive_l1_weight(std::vector<double>{}), std::invalid_argument);
}

TEST(Train, DeterministicUnderSeed) {
  const Dataset d = xor_data();
  const auto specs = make_layer_specs(2, {1}, Activation::nary, 2);
  TrainConfig cfg;
  cfg.epochs = 3;
  const TrainReport a = train(specs, d, cfg), b = train(specs, d, cfg);
  EXPECT_EQ(a.epochs, b.epochs);
  EXPECT_EQ(metrics_to_csv(a.epochs), metrics_to_csv(b.epochs));
  cfg.seed = 2;
  EXPECT_NE(metrics_to_csv(train(specs, d, cfg).epochs), metrics_to_csv(a.epochs));
}

TEST(Train, KeepsValidationOptimum) {
  const Dataset d = xor_data();
  TrainConfig cfg;
  cfg.epochs = 6;
  const TrainReport r = train(make_layer_specs(2, {1}, Activation::nary, 2), d, cfg);
  ASSERT_EQ(r.epochs.size(), 6u);
  for (const auto& e : r.epochs) EXPECT_GE(e.val.loss, r.best_metrics().val.loss);
  EXPECT_EQ(evaluate(r.best, d.val).loss, r.best_metrics().val.loss);
}

TEST(Train, ConfigValidation) {
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.adam.beta1 = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_THROW(parse_l1_kind("lasso"), std::invalid_argument);
}

TEST(Train, BinaryLayerLearnsXorButReluCannot) {
  LearningConfig cfg;
  cfg.trials = 4;
  const auto nary = run_named_function(xor_table(), Activation::nary, cfg);
  EXPECT_EQ(*std::max_element(nary.begin(), nary.end()), 1.0);
  for (double a : run_named_function(xor_table(), Activation::relu, cfg)) EXPECT_LT(a, 0.9);
}

TEST(ParallelTrials, MatchSerialRuns) {
  const Dataset d = xor_data();
  const auto specs = make_layer_specs(2, {1}, Activation::nary, 2);
  TrainConfig cfg;
  cfg.epochs = 2;
  const auto seeds = trial_seeds(4);
  const auto par = run_trials(specs, d, cfg, seeds, 4);
  const auto ser = run_trials(specs, d, cfg, seeds, 1);
  for (std::size_t i = 0; i < seeds.size(); ++i) EXPECT_EQ(par[i].epochs, ser[i].epochs);
  EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0, 10.0}), 2.5);
}

TEST(Io, TableJsonRoundTripAndLayoutTag) {
  ParamTable t(3, 2);
  for (std::size_t i = 0; i < t.entries.size(); ++i) t.entries.flat()[i] = 0.1 * i - 0.37;
  const json j = table_to_json(t);
  EXPECT_EQ(j.at("layout"), "bit1-lsb");
  const ParamTable back = table_from_json<ParamTable>(j);
  EXPECT_EQ(back.entries, t.entries);
  json missing = j;
  missing.erase("layout");
  EXPECT_THROW(table_from_json<ParamTable>(missing), FormatError);
  json wrong = j;
  wrong["layout"] = "bit1-msb";
  EXPECT_THROW(table_from_json<ParamTable>(wrong), FormatError);
  json ragged = j;
  ragged["entries"][0].erase(0);
  EXPECT_THROW(table_from_json<ParamTable>(ragged), FormatError);
}

TEST(Io, CheckpointRoundTripIsExact) {
  const fs::path dir = scratch_dir("ckpt");
  const Network net =
      initialize_network(make_layer_specs(5, {4, 2}, Activation::nary, 3), 12);
  save_checkpoint(dir / "c.json", net, {{"seed", 12}});
  const Network back = load_checkpoint(dir / "c.json");
  ASSERT_EQ(back.layers, net.layers);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_EQ(back.params[l].weights, net.params[l].weights);
    EXPECT_EQ(back.params[l].theta->entries, net.params[l].theta->entries);
  }
  const Network relu = initialize_network(make_layer_specs(3, {2}, Activation::relu, 1), 1);
  save_checkpoint(dir / "r.json", relu);
  EXPECT_FALSE(load_checkpoint(dir / "r.json").params[0].theta);

  write_text(dir / "bad.json", "{\"format\": \"softlogic-checkpoint\", \"version\": 1}");
  EXPECT_THROW(load_checkpoint(dir / "bad.json"), FormatError);
  write_text(dir / "junk.json", "{nope");
  EXPECT_THROW(load_checkpoint(dir / "junk.json"), FormatError);
  EXPECT_THROW(load_checkpoint(dir / "absent.json"), std::runtime_error);
}

TEST(Io, DatasetCsvRoundTrip) {
  const fs::path dir = scratch_dir("data");
  const GroundTruth gt = generate_ground_truth(6, 3, 2, 5);
  const Dataset d = synthesize(gt, 40, 10, 12, 5);
  save_dataset(dir, d);
  const Dataset back = load_dataset(dir);
  EXPECT_EQ(back.train.inputs, d.train.inputs);
  EXPECT_EQ(back.test.targets, d.test.targets);
  const std::string text = read_text(dir / "val.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "#softlogic-dataset v1, n_in=6, n_out=3");
  EXPECT_THROW(split_from_csv("1,2,3\n"), FormatError);
  EXPECT_THROW(split_from_csv("#softlogic-dataset v1, n_in=2, n_out=1\n1,2\n"), FormatError);
  EXPECT_THROW(split_from_csv("#softlogic-dataset v1, n_in=2, n_out=1\n1,x,3\n"), FormatError);
  EXPECT_EQ(split_from_csv("#softlogic-dataset v1, n_in=1, n_out=1\r\n0.25,-6.91\r\n").inputs(0, 0),
            0.25);
}

TEST(Io, GroundTruthRoundTrip) {
  const GroundTruth gt = generate_ground_truth(10, 4, 3, 8);
  const GroundTruth back = ground_truth_from_json(ground_truth_to_json(gt));
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(back.outputs[k].inputs, gt.outputs[k].inputs);
    EXPECT_EQ(back.outputs[k].table, gt.outputs[k].table);
  }
  json bad = ground_truth_to_json(gt);
  bad["outputs"][0]["inputs"][1] = bad["outputs"][0]["inputs"][0];
  EXPECT_THROW(ground_truth_from_json(bad), FormatError);
}

TEST(Io, MetricsCsv) {
  const std::vector<EpochMetrics> e{{1, {0.5, 0.75}, {0.25, 1.0}, {0.125, 0.5}}};
  EXPECT_EQ(metrics_to_csv(e),
            "epoch,split,loss,accuracy\n1,train,0.5,0.75\n1,val,0.25,1\n1,test,0.125,0.5\n");
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(parse_double(format_double(1.0 / 3.0), "x"), 1.0 / 3.0);
}
