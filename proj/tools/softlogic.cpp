// softlogic: data generation, training, analysis and verification driver.
//
// Every subcommand accepts --config <file.json>; keys are long flag names
// without dashes. Flags given on the command line win over the file.

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "softlogic.hpp"

namespace fs = std::filesystem;
using namespace softlogic;

namespace {

enum Exit { kOk = 0, kFailed = 1, kUsage = 2 };

// Binds CLI options to config-file keys and records the resolved values.
class Options {
public:
  explicit Options(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_path_, "JSON config file; flags override its keys");
  }

  template <typename T>
  CLI::Option* add(const std::string& name, T& var, const std::string& help) {
    CLI::Option* opt = app_->add_option("--" + name, var, help)->capture_default_str();
    bindings_.push_back({name, opt,
                         [&var](const json& j) { var = j.get<T>(); },
                         [&var] { return json(var); }});
    return opt;
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
    CLI::Option* opt = app_->add_flag("--" + name, var, help);
    bindings_.push_back({name, opt,
                         [&var](const json& j) { var = j.get<bool>(); },
                         [&var] { return json(var); }});
    return opt;
  }

  // Applies config-file values to options absent from the command line.
  void resolve() {
    if (config_path_.empty()) return;
    const json cfg = read_json(config_path_);
    if (!cfg.is_object()) throw FormatError("'" + config_path_ + "': config must be a JSON object");
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
      auto b = std::find_if(bindings_.begin(), bindings_.end(),
                            [&](const Binding& x) { return x.name == it.key(); });
      if (b == bindings_.end())
        throw std::invalid_argument("'" + config_path_ + "': unknown key '" + it.key() + "'");
      if (b->option->count() > 0) continue;
      try {
        b->load(it.value());
      } catch (const json::exception&) {
        throw std::invalid_argument("'" + config_path_ + "': bad value for '" + it.key() + "'");
      }
    }
  }

  json resolved(const std::string& command) const {
    json j = {{"command", command}};
    for (const auto& b : bindings_) j[b.name] = b.dump();
    return j;
  }

private:
  struct Binding {
    std::string name;
    CLI::Option* option;
    std::function<void(const json&)> load;
    std::function<json()> dump;
  };
  CLI::App* app_;
  std::string config_path_;
  std::vector<Binding> bindings_;
};

std::vector<bool> named_table(const std::string& name) {
  if (name == "xor") return xor_table();
  if (name == "cond") return conditioned_disjunction_table();
  throw std::invalid_argument("unknown function '" + name + "' (expected random, xor or cond)");
}

// ---- gen ----------------------------------------------------------------------

struct GenArgs {
  int gamma = 2;
  std::size_t inputs = 32;
  std::size_t outputs = 32;
  std::string function = "random";
  std::uint64_t seed = 1;
  std::size_t train = 5000;
  std::size_t val = 2500;
  std::size_t test = 2500;
  std::string out = "data";
};

int cmd_gen(const GenArgs& a, const json& config) {
  GroundTruth gt = a.function == "random"
                       ? generate_ground_truth(a.inputs, a.outputs, a.gamma, a.seed)
                       : fixed_table_ground_truth(a.inputs, a.outputs, named_table(a.function), a.seed);
  const Dataset data = synthesize(gt, a.train, a.val, a.test, a.seed);
  const fs::path dir(a.out);
  write_json(dir / "ground_truth.json", ground_truth_to_json(gt));
  save_dataset(dir, data);
  write_json(dir / "config.json", config);
  std::printf("wrote %s (gamma=%d, %zu inputs, %zu outputs, %zu/%zu/%zu samples)\n",
              dir.string().c_str(), gt.gamma, gt.n_inputs, gt.n_outputs, a.train, a.val, a.test);
  return kOk;
}

// ---- train --------------------------------------------------------------------

struct TrainArgs {
  std::string data = "data";
  std::string out = "runs";
  std::string activation = "nary";
  int arity = 2;
  int gamma = 0;  // 0: read from the dataset's ground_truth.json
  std::vector<std::size_t> widths;
  int trials = 12;
  std::uint64_t seed = 1;
  int epochs = 10;
  double lr = 1e-2;
  std::size_t batch_size = 64;
  std::string l1 = "adaptive";
  double l1_weight = 0.0;
  double l2 = 0.0;
  unsigned threads = 0;
};

std::vector<std::size_t> train_widths(const TrainArgs& a, const fs::path& data_dir,
                                      std::size_t n_out, Activation act) {
  if (!a.widths.empty()) {
    if (a.widths.back() != n_out)
      throw std::invalid_argument("--widths: last width must equal the dataset's output count");
    return a.widths;
  }
  int gamma = a.gamma;
  if (gamma == 0 && fs::exists(data_dir / "ground_truth.json"))
    gamma = ground_truth_from_json(read_json(data_dir / "ground_truth.json")).gamma;
  if (gamma == 0) return {n_out};
  // Fixed activations combine two antecedents per unit.
  const int reach = act == Activation::nary ? a.arity : 2;
  return size_architecture(gamma, reach, n_out);
}

int cmd_train(const TrainArgs& a, const json& config) {
  const Activation act = parse_activation(a.activation);
  const fs::path data_dir(a.data);
  if (!fs::is_directory(data_dir))
    throw std::runtime_error("dataset directory '" + data_dir.string() + "' does not exist");
  const Dataset data = load_dataset(data_dir);
  const auto widths = train_widths(a, data_dir, data.train.targets.cols(), act);
  const auto specs = make_layer_specs(data.train.inputs.cols(), widths, act, a.arity);

  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch_size;
  cfg.adam.learning_rate = a.lr;
  cfg.l1.kind = parse_l1_kind(a.l1);
  cfg.l1.weight = a.l1_weight;
  cfg.l2_weight = a.l2;
  cfg.validate();

  const auto seeds = trial_seeds(a.trials, a.seed);
  const fs::path out(a.out);
  fs::create_directories(out);
  write_json(out / "config.json", config);

  std::vector<TrainReport> reports(seeds.size());
  parallel_for(seeds.size(), a.threads, [&](std::size_t i) {
    TrainConfig c = cfg;
    c.seed = seeds[i];
    reports[i] = train(specs, data, c);
    const fs::path dir = out / ("trial_" + std::to_string(seeds[i]));
    write_text(dir / "metrics.csv", metrics_to_csv(reports[i].epochs));
    save_checkpoint(dir / "checkpoint.json", reports[i].best,
                    {{"seed", seeds[i]}, {"best_epoch", reports[i].best_epoch}});
  });

  std::string summary = "seed,best_epoch,val_loss,test_loss,test_accuracy\n";
  std::vector<double> acc;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const EpochMetrics& m = reports[i].best_metrics();
    summary += std::to_string(seeds[i]) + "," + std::to_string(reports[i].best_epoch) + "," +
               format_double(m.val.loss) + "," + format_double(m.test.loss) + "," +
               format_double(m.test.accuracy) + "\n";
    acc.push_back(m.test.accuracy);
    std::printf("trial %llu: best epoch %d, test accuracy %.4f\n",
                static_cast<unsigned long long>(seeds[i]), reports[i].best_epoch, m.test.accuracy);
  }
  write_text(out / "summary.csv", summary);
  std::printf("median test accuracy %.4f over %zu trials (%zu parameters)\n", median(acc),
              acc.size(), reports.front().best.parameter_count());
  return kOk;
}

// ---- analyze ------------------------------------------------------------------

struct AnalyzeArgs {
  std::string checkpoint;
  double tolerance = kIrrelevanceTolerance;
  std::string out;
};

int cmd_analyze(const AnalyzeArgs& a) {
  const Network net = load_checkpoint(a.checkpoint);
  json layers = json::array();
  bool ok = true;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LayerSpec& s = net.layers[l];
    json layer = {{"index", l}, {"activation", to_string(s.activation)}, {"arity", s.arity}};
    if (net.params[l].theta) {
      const ParamTable& theta = *net.params[l].theta;
      const BeliefTable table = params_to_table(theta);
      json channels = json::array();
      for (std::size_t k = 0; k < theta.channels(); ++k) {
        const auto row = theta.entries.row(k);
        const auto irrelevant = irrelevant_antecedents(row, a.tolerance);
        const int m = s.arity - static_cast<int>(irrelevant.size());
        const std::size_t nnz = count_nonzeros(row, a.tolerance);
        const bool bound = nnz <= vertex_count(m);
        ok = ok && bound;
        channels.push_back({{"channel", k},
                            {"irrelevant", irrelevant},
                            {"effective_arity", m},
                            {"nnz", nnz},
                            {"nnz_within_bound", bound},
                            {"theta", std::vector<double>(row.begin(), row.end())},
                            {"table", std::vector<double>(table.entries.row(k).begin(),
                                                          table.entries.row(k).end())}});
      }
      layer["channels"] = std::move(channels);
    }
    layers.push_back(std::move(layer));
  }
  const json report = {{"checkpoint", a.checkpoint},
                       {"tolerance", a.tolerance},
                       {"index_base", 1},
                       {"layers", layers}};
  if (a.out.empty())
    std::cout << report.dump(2) << "\n";
  else
    write_json(a.out, report);
  if (!ok) std::fprintf(stderr, "analyze: nonzero count exceeds 2^m for some channel\n");
  return ok ? kOk : kFailed;
}

// ---- verify -------------------------------------------------------------------

struct VerifyArgs {
  std::vector<std::string> only;
  bool extended = false;
  std::uint64_t seed = 7;
  unsigned threads = 0;
};

int cmd_verify(const VerifyArgs& a) {
  VerifyOptions opt;
  opt.seed = a.seed;
  opt.learning.threads = a.threads;
  std::vector<const Check*> selected;
  for (const auto& name : a.only) {
    const Check* c = find_check(name);
    if (!c) throw std::invalid_argument("unknown check '" + name + "'");
    selected.push_back(c);
  }
  if (selected.empty())
    for (const auto& c : builtin_checks())
      if (a.extended || !c.extended) selected.push_back(&c);

  int failed = 0;
  for (const Check* c : selected) {
    const CheckResult r = run_check(*c, opt);
    if (!r.passed) ++failed;
    std::printf("%s %-20s %8.3f s  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds,
                r.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu checks, %d failed\n", selected.size(), failed);
  return failed ? kFailed : kOk;
}

// ---- surface ------------------------------------------------------------------

struct SurfaceArgs {
  std::string op = "and";
  double alpha = 30.0;
  double lo = -10.0;
  double hi = 10.0;
  int steps = 41;
  std::string out;
};

int cmd_surface(const SurfaceArgs& a) {
  if (a.steps < 2) throw std::invalid_argument("--steps must be at least 2");
  if (!(a.hi > a.lo)) throw std::invalid_argument("--max must exceed --min");
  BeliefTable table(2, 1);
  const std::optional<AilKind> kind = parse_ail(a.op);
  if (const auto row = find_catalog(a.op)) {
    table = catalog_table(*row, a.alpha);
  } else if (kind) {
    const auto truth = ail_truth_table(*kind);
    for (std::size_t j = 0; j < 4; ++j) table.entries(0, j) = a.alpha * truth[j];
  } else {
    throw std::invalid_argument("unknown operation '" + a.op + "'");
  }

  std::string csv = "y1,y2,z_exact,z_lsem,z_ail\n";
  Matrix y(1, 2);
  for (int i = 0; i < a.steps; ++i)
    for (int k = 0; k < a.steps; ++k) {
      y(0, 0) = a.lo + (a.hi - a.lo) * i / (a.steps - 1);
      y(0, 1) = a.lo + (a.hi - a.lo) * k / (a.steps - 1);
      csv += format_double(y(0, 0)) + "," + format_double(y(0, 1)) + "," +
             format_double(nary_forward_exact(y, table)[0]) + "," +
             format_double(nary_forward(y, table).z[0]) + ",";
      if (kind) csv += format_double(ail(*kind, y(0, 0), y(0, 1)));
      csv += "\n";
    }
  if (a.out.empty())
    std::fputs(csv.c_str(), stdout);
  else
    write_text(a.out, csv);
  return kOk;
}

// ---- apply --------------------------------------------------------------------

struct ApplyArgs {
  std::string truth;
  std::string checkpoint;
  std::string bits;
};

std::vector<bool> parse_bits(const std::string& s, std::size_t width) {
  if (s.size() != width)
    throw std::invalid_argument("--bits needs " + std::to_string(width) + " characters");
  std::vector<bool> x;
  for (char c : s) {
    if (c != '0' && c != '1') throw std::invalid_argument("--bits may contain only 0 and 1");
    x.push_back(c == '1');
  }
  return x;
}

int cmd_apply(const ApplyArgs& a) {
  if (a.truth.empty() == a.checkpoint.empty())
    throw std::invalid_argument("give exactly one of --truth and --checkpoint");
  if (!a.checkpoint.empty()) {
    const Network net = load_checkpoint(a.checkpoint);
    if (a.bits.empty()) throw std::invalid_argument("--checkpoint requires --bits");
    const auto x = parse_bits(a.bits, net.input_width());
    std::vector<double> in;
    for (bool b : x) in.push_back(encode(b));
    for (double z : network_forward(net, in)) std::printf("%s\n", format_double(z).c_str());
    return kOk;
  }
  const GroundTruth gt = ground_truth_from_json(read_json(a.truth));
  if (!a.bits.empty()) {
    for (bool b : gt.apply(parse_bits(a.bits, gt.n_inputs))) std::printf("%d", b ? 1 : 0);
    std::printf("\n");
    return kOk;
  }
  // Exhaustive: drive each output through every vertex of its own subset.
  int mismatches = 0;
  for (std::size_t k = 0; k < gt.n_outputs; ++k) {
    const OutputFunction& f = gt.outputs[k];
    for (std::size_t j = 0; j < f.table.size(); ++j) {
      std::vector<bool> x(gt.n_inputs, false);
      for (std::size_t i = 0; i < f.inputs.size(); ++i) x[f.inputs[i]] = (j >> i) & 1U;
      if (gt.apply(x)[k] != f.table[j]) ++mismatches;
    }
  }
  std::printf("%zu outputs checked on all %zu vertices: %d mismatches\n", gt.n_outputs,
              vertex_count(gt.gamma), mismatches);
  return mismatches ? kFailed : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive n-ary logit-space activations: data, training and checks"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "generate a ground truth and its datasets");
  Options gen_opts(gen_cmd);
  gen_opts.add("gamma", gen.gamma, "ground-truth arity");
  gen_opts.add("inputs", gen.inputs, "input variables");
  gen_opts.add("outputs", gen.outputs, "output variables");
  gen_opts.add("function", gen.function, "random, xor or cond");
  gen_opts.add("seed", gen.seed, "generation seed");
  gen_opts.add("train", gen.train, "training samples");
  gen_opts.add("val", gen.val, "validation samples");
  gen_opts.add("test", gen.test, "test samples");
  gen_opts.add("out", gen.out, "output directory");

  TrainArgs tr;
  CLI::App* train_cmd = app.add_subcommand("train", "train seeded trials on a dataset");
  Options train_opts(train_cmd);
  train_opts.add("data", tr.data, "dataset directory written by gen");
  train_opts.add("out", tr.out, "output directory");
  train_opts.add("activation", tr.activation, "nary, relu, maxmin or maxail");
  train_opts.add("arity", tr.arity, "n-ary activation arity");
  train_opts.add("gamma", tr.gamma, "arity used for layer sizing (0: from ground_truth.json)");
  train_opts.add("widths", tr.widths, "explicit layer widths (overrides sizing)");
  train_opts.add("trials", tr.trials, "number of trials");
  train_opts.add("seed", tr.seed, "seed of the first trial");
  train_opts.add("epochs", tr.epochs, "training epochs");
  train_opts.add("lr", tr.lr, "ADAM learning rate");
  train_opts.add("batch-size", tr.batch_size, "minibatch size");
  train_opts.add("l1", tr.l1, "off, adaptive or fixed");
  train_opts.add("l1-weight", tr.l1_weight, "L1 weight for --l1 fixed");
  train_opts.add("l2", tr.l2, "L2 weight on linear weights");
  train_opts.add("threads", tr.threads, "worker threads (0: hardware)");

  AnalyzeArgs an;
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "report effective arity per channel");
  Options analyze_opts(analyze_cmd);
  analyze_opts.add("checkpoint", an.checkpoint, "checkpoint JSON")->required();
  analyze_opts.add("tolerance", an.tolerance, "zero tolerance for parameters");
  analyze_opts.add("out", an.out, "report path (default stdout)");

  VerifyArgs ve;
  CLI::App* verify_cmd = app.add_subcommand("verify", "run the built-in verification suite");
  Options verify_opts(verify_cmd);
  verify_opts.add("only", ve.only, "run only the named check (repeatable)");
  verify_opts.flag("extended", ve.extended, "include the long learning checks");
  verify_opts.add("seed", ve.seed, "seed for randomized checks");
  verify_opts.add("threads", ve.threads, "worker threads for learning checks");

  SurfaceArgs su;
  CLI::App* surface_cmd = app.add_subcommand("surface", "emit a binary-operation surface as CSV");
  Options surface_opts(surface_cmd);
  surface_opts.add("op", su.op, "catalog row or and/or/xnor");
  surface_opts.add("alpha", su.alpha, "table logit scale");
  surface_opts.add("min", su.lo, "grid lower bound");
  surface_opts.add("max", su.hi, "grid upper bound");
  surface_opts.add("steps", su.steps, "grid points per axis");
  surface_opts.add("out", su.out, "CSV path (default stdout)");

  ApplyArgs ap;
  CLI::App* apply_cmd = app.add_subcommand("apply", "evaluate a ground truth or a checkpoint");
  Options apply_opts(apply_cmd);
  apply_opts.add("truth", ap.truth, "ground_truth.json");
  apply_opts.add("checkpoint", ap.checkpoint, "checkpoint JSON");
  apply_opts.add("bits", ap.bits, "input bits, first input first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen_cmd) {
      gen_opts.resolve();
      return cmd_gen(gen, gen_opts.resolved("gen"));
    }
    if (*train_cmd) {
      train_opts.resolve();
      return cmd_train(tr, train_opts.resolved("train"));
    }
    if (*analyze_cmd) {
      analyze_opts.resolve();
      return cmd_analyze(an);
    }
    if (*verify_cmd) {
      verify_opts.resolve();
      return cmd_verify(ve);
    }
    if (*surface_cmd) {
      surface_opts.resolve();
      return cmd_surface(su);
    }
    if (*apply_cmd) {
      apply_opts.resolve();
      return cmd_apply(ap);
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailed;
  }
  return kUsage;
}
