#pragma once

// On-disk formats: JSON for tables, networks and ground truths; CSV for
// datasets and per-epoch metrics. Doubles are written in shortest round-trip
// form so a save/load cycle is lossless.

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "softlogic/belief_table.hpp"
#include "softlogic/logicgen.hpp"
#include "softlogic/network.hpp"
#include "softlogic/train.hpp"

namespace softlogic {

using json = nlohmann::json;

/// Malformed file contents. The message names the offending path or field.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kTableLayout = "bit1-lsb";
inline constexpr std::string_view kCheckpointFormat = "softlogic-checkpoint";
inline constexpr std::string_view kDatasetMagic = "#softlogic-dataset v1";

inline std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, end);
}

inline double parse_double(std::string_view s, std::string_view context) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size())
    throw FormatError(std::string(context) + ": bad number '" + std::string(s) + "'");
  return v;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

inline json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

// ---- matrices and tables --------------------------------------------------

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(json(std::vector<double>(row.begin(), row.end())));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, std::size_t rows, std::size_t cols,
                               std::string_view what) {
  const std::string ctx(what);
  if (!j.is_array() || j.size() != rows)
    throw FormatError(ctx + ": expected " + std::to_string(rows) + " rows");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.size() != cols)
      throw FormatError(ctx + ": row " + std::to_string(r) + " must hold " +
                        std::to_string(cols) + " numbers");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) throw FormatError(ctx + ": non-numeric entry");
      m(r, c) = row[c].get<double>();
    }
  }
  return m;
}

template <typename Table>
json table_to_json(const Table& t) {
  return {{"arity", t.arity},
          {"channels", t.channels()},
          {"layout", kTableLayout},
          {"entries", matrix_to_json(t.entries)}};
}

template <typename Table>
Table table_from_json(const json& j) {
  try {
    if (j.at("layout").get<std::string>() != kTableLayout)
      throw FormatError("table: unsupported layout '" + j.at("layout").get<std::string>() + "'");
    const int arity = j.at("arity").get<int>();
    const auto channels = j.at("channels").get<std::size_t>();
    if (arity < 1 || arity > kMaxBasisArity) throw FormatError("table: arity out of range");
    return Table(arity, matrix_from_json(j.at("entries"), channels, vertex_count(arity), "table"));
  } catch (const json::exception& e) {
    throw FormatError(std::string("table: ") + e.what());
  }
}

// ---- networks ---------------------------------------------------------------

inline json network_to_json(const Network& net, const json& metadata = json::object()) {
  net.validate();
  json layers = json::array();
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LayerSpec& s = net.layers[l];
    json layer = {{"in_width", s.in_width},
                  {"out_width", s.out_width},
                  {"activation", to_string(s.activation)},
                  {"arity", s.arity},
                  {"weights", matrix_to_json(net.params[l].weights)}};
    if (net.params[l].theta) layer["theta"] = table_to_json(*net.params[l].theta);
    layers.push_back(std::move(layer));
  }
  return {{"format", kCheckpointFormat}, {"version", 1}, {"metadata", metadata}, {"layers", layers}};
}

inline Network network_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat)
      throw FormatError("checkpoint: not a " + std::string(kCheckpointFormat) + " document");
    if (j.at("version").get<int>() != 1) throw FormatError("checkpoint: unsupported version");
    Network net;
    for (const json& layer : j.at("layers")) {
      LayerSpec s{layer.at("in_width").get<std::size_t>(), layer.at("out_width").get<std::size_t>(),
                  parse_activation(layer.at("activation").get<std::string>()),
                  layer.at("arity").get<int>()};
      s.validate();
      LayerParams p{matrix_from_json(layer.at("weights"), s.linear_width(), s.in_width, "weights"),
                    std::nullopt};
      if (layer.contains("theta")) p.theta = table_from_json<ParamTable>(layer.at("theta"));
      net.layers.push_back(s);
      net.params.push_back(std::move(p));
    }
    net.validate();
    return net;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const std::filesystem::path& path, const Network& net,
                            const json& metadata = json::object()) {
  write_json(path, network_to_json(net, metadata));
}

inline Network load_checkpoint(const std::filesystem::path& path) {
  try {
    return network_from_json(read_json(path));
  } catch (const FormatError& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
}

// ---- ground truth -----------------------------------------------------------

inline json ground_truth_to_json(const GroundTruth& gt) {
  json outputs = json::array();
  for (const auto& f : gt.outputs) {
    std::vector<int> table(f.table.begin(), f.table.end());
    outputs.push_back({{"inputs", f.inputs}, {"table", table}});
  }
  return {{"n_inputs", gt.n_inputs},
          {"n_outputs", gt.n_outputs},
          {"gamma", gt.gamma},
          {"index_base", 0},
          {"layout", kTableLayout},
          {"outputs", outputs}};
}

inline GroundTruth ground_truth_from_json(const json& j) {
  try {
    GroundTruth gt;
    gt.n_inputs = j.at("n_inputs").get<std::size_t>();
    gt.n_outputs = j.at("n_outputs").get<std::size_t>();
    gt.gamma = j.at("gamma").get<int>();
    if (j.value("index_base", 0) != 0) throw FormatError("ground truth: index_base must be 0");
    for (const json& o : j.at("outputs")) {
      OutputFunction f;
      f.inputs = o.at("inputs").get<std::vector<std::size_t>>();
      for (int v : o.at("table").get<std::vector<int>>()) {
        if (v != 0 && v != 1) throw FormatError("ground truth: table entries must be 0 or 1");
        f.table.push_back(v == 1);
      }
      gt.outputs.push_back(std::move(f));
    }
    gt.validate();
    return gt;
  } catch (const json::exception& e) {
    throw FormatError(std::string("ground truth: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("ground truth: ") + e.what());
  }
}

// ---- datasets ---------------------------------------------------------------

inline std::string split_to_csv(const Split& s) {
  std::string out = std::string(kDatasetMagic) + ", n_in=" + std::to_string(s.inputs.cols()) +
                    ", n_out=" + std::to_string(s.targets.cols()) + "\n";
  for (std::size_t r = 0; r < s.size(); ++r) {
    for (std::size_t c = 0; c < s.inputs.cols(); ++c) {
      if (c) out += ',';
      out += format_double(s.inputs(r, c));
    }
    for (std::size_t c = 0; c < s.targets.cols(); ++c) {
      out += ',';
      out += format_double(s.targets(r, c));
    }
    out += '\n';
  }
  return out;
}

namespace detail {

inline std::size_t header_field(std::string_view header, std::string_view key) {
  const std::string pat = std::string(key) + "=";
  const auto pos = header.find(pat);
  if (pos == std::string_view::npos)
    throw FormatError("dataset header lacks '" + std::string(key) + "'");
  std::string_view rest = header.substr(pos + pat.size());
  std::size_t v = 0;
  auto [end, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), v);
  if (ec != std::errc{} || end == rest.data())
    throw FormatError("dataset header: bad value for '" + std::string(key) + "'");
  return v;
}

}  // namespace detail

inline Split split_from_csv(std::string_view text) {
  auto next_line = [&text]() {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };
  const std::string_view header = next_line();
  if (header.substr(0, kDatasetMagic.size()) != kDatasetMagic)
    throw FormatError("dataset: missing '" + std::string(kDatasetMagic) + "' header");
  const std::size_t n_in = detail::header_field(header, "n_in");
  const std::size_t n_out = detail::header_field(header, "n_out");
  if (n_in == 0 || n_out == 0) throw FormatError("dataset: widths must be positive");

  std::vector<double> values;
  std::size_t rows = 0;
  while (!text.empty()) {
    const std::string_view line = next_line();
    if (line.empty()) continue;
    std::size_t fields = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string ctx = "dataset row " + std::to_string(rows + 1);
      values.push_back(parse_double(line.substr(start, comma - start), ctx));
      ++fields;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields != n_in + n_out)
      throw FormatError("dataset row " + std::to_string(rows + 1) + ": expected " +
                        std::to_string(n_in + n_out) + " fields, got " + std::to_string(fields));
    ++rows;
  }
  Split s{Matrix(rows, n_in), Matrix(rows, n_out)};
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < n_in + n_out; ++c) {
      const double v = values[r * (n_in + n_out) + c];
      if (c < n_in)
        s.inputs(r, c) = v;
      else
        s.targets(r, c - n_in) = v;
    }
  return s;
}

inline constexpr std::string_view kSplitNames[] = {"train", "val", "test"};

inline void save_dataset(const std::filesystem::path& dir, const Dataset& d) {
  write_text(dir / "train.csv", split_to_csv(d.train));
  write_text(dir / "val.csv", split_to_csv(d.val));
  write_text(dir / "test.csv", split_to_csv(d.test));
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  auto load = [&dir](std::string_view name) {
    const auto path = dir / (std::string(name) + ".csv");
    try {
      return split_from_csv(read_text(path));
    } catch (const FormatError& e) {
      throw FormatError("'" + path.string() + "': " + e.what());
    }
  };
  Dataset d{load("train"), load("val"), load("test")};
  if (d.train.inputs.cols() != d.val.inputs.cols() || d.train.inputs.cols() != d.test.inputs.cols() ||
      d.train.targets.cols() != d.val.targets.cols() ||
      d.train.targets.cols() != d.test.targets.cols())
    throw FormatError("'" + dir.string() + "': splits disagree on widths");
  return d;
}

// ---- metrics ----------------------------------------------------------------

inline std::string metrics_to_csv(const std::vector<EpochMetrics>& epochs) {
  std::string out = "epoch,split,loss,accuracy\n";
  for (const auto& e : epochs) {
    const SplitMetrics* splits[] = {&e.train, &e.val, &e.test};
    for (std::size_t i = 0; i < 3; ++i) {
      out += std::to_string(e.epoch) + "," + std::string(kSplitNames[i]) + "," +
             format_double(splits[i]->loss) + "," + format_double(splits[i]->accuracy) + "\n";
    }
  }
  return out;
}

}  // namespace softlogic
