// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0
//
// qrsnap command-line tool: gen-data, train, sweep, report.
// Exit codes: 0 ok, 2 config error, 3 I/O or model error, 4 data-format error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qrsnap/config.hpp"
#include "qrsnap/dataset.hpp"
#include "qrsnap/ensemble.hpp"
#include "qrsnap/error.hpp"
#include "qrsnap/eval.hpp"
#include "qrsnap/report.hpp"
#include "qrsnap/trainer.hpp"

namespace fs = std::filesystem;
using namespace qrsnap;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitFormat = 4;

// Error carrying its exit code.
struct Exit {
  int code;
  std::string message;
};

RunConfig config_from(const std::string& path, std::optional<std::uint64_t> seed) {
  RunConfig config = path.empty() ? parse_run_config("") : load_run_config(path);
  if (seed) apply_seed(config, *seed);
  return config;
}

// Full dataset named by the config, or the synthetic set it describes.
Dataset dataset_for(const RunConfig& config) {
  if (config.data.empty()) return generate_synthetic(config.synth);
  try {
    return load_qrds(config.data);
  } catch (const FormatError& e) {
    throw Exit{kExitFormat, e.what()};
  } catch (const Error& e) {
    throw Exit{kExitIo, e.what()};
  }
}

void check_architecture(const Architecture& arch, const Dataset& data) {
  const FeatureShape& in = arch.input();
  const Image& first = data.images.front();
  if (in.channels != first.channels() || in.height != first.height() || in.width != first.width() ||
      arch.output_size() != data.classes()) {
    throw Exit{kExitConfig, "architecture '" + arch.to_string() + "' does not match the dataset (" +
                                std::to_string(first.channels()) + "x" + std::to_string(first.height()) + "x" +
                                std::to_string(first.width()) + ", " + std::to_string(data.classes()) +
                                " classes)"};
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text) || !out.flush()) throw Exit{kExitIo, "cannot write " + path.string()};
}

int cmd_gen_data(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed) {
  const RunConfig config = config_from(config_path, seed);
  const fs::path out_path(out);
  const fs::path parent = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) throw Exit{kExitConfig, "output directory " + parent.string() + " does not exist"};
  const Dataset data = generate_synthetic(config.synth);
  const std::vector<std::uint8_t> bytes = encode_qrds(data);
  try {
    write_file(out_path, bytes);
  } catch (const Error& e) {
    throw Exit{kExitIo, e.what()};
  }
  std::printf("%s  %s  (%zu samples, %zu classes)\n", digest_hex(bytes).c_str(), out.c_str(), data.size(),
              data.classes());
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& mode, const std::string& out,
              std::optional<std::uint64_t> seed) {
  RunConfig config = config_from(config_path, seed);
  if (mode != "gspecialist" && mode != "baseline") {
    throw Exit{kExitConfig, "unknown mode '" + mode + "' (expected gspecialist or baseline)"};
  }
  const bool baseline = mode == "baseline";
  try {
    config.train.plan = config.plan(baseline);
    config.train.validate();
  } catch (const Error& e) {
    throw Exit{kExitConfig, std::string("invalid plan: ") + e.what()};
  }
  const Dataset data = dataset_for(config);
  check_architecture(config.train.architecture, data);
  const Dataset train_set = split(data, config.test_fraction, config.seed).first;

  std::ostringstream log;
  log << "iteration,cycle,lr,loss\n";
  std::int64_t iterations = 0;
  TrainHooks hooks;
  hooks.on_step = [&](const TrainLogRow& row) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%lld,%d,%.17g,%.17g\n", static_cast<long long>(row.iteration), row.cycle,
                  row.lr, row.loss);
    log << buf;
    ++iterations;
  };
  const EnsembleModel model = baseline ? train_baseline(train_set, config.train, hooks)
                                       : train_gspecialist(train_set, config.train, hooks);
  fs::path manifest;
  try {
    manifest = save_ensemble(model, out);
  } catch (const Error& e) {
    throw Exit{kExitIo, e.what()};
  }
  write_text(fs::path(out) / "train_log.csv", log.str());
  std::printf("mode=%s iterations=%lld snapshots=%zu manifest=%s\n", mode.c_str(),
              static_cast<long long>(iterations), model.size(), manifest.string().c_str());
  for (std::size_t i : model.canonical_order()) {
    const Snapshot& s = model.snapshots()[i];
    std::printf("  cycle %d  %-8s  final train loss %.6f\n", s.cycle_index,
                std::string(to_string(s.specialty)).c_str(), s.final_train_loss);
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& manifests, const std::string& out,
              std::optional<std::uint64_t> seed) {
  const RunConfig config = config_from(config_path, seed);
  const fs::path out_path(out);
  const fs::path parent = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) throw Exit{kExitConfig, "output directory " + parent.string() + " does not exist"};

  std::vector<TaggedModel> models;
  for (const std::string& m : manifests) {
    EnsembleModel model;
    try {
      model = load_ensemble(m);
    } catch (const Error& e) {
      throw Exit{kExitIo, std::string("cannot load ensemble: ") + e.what()};
    }
    std::string tag = fs::absolute(fs::path(m)).parent_path().filename().string();
    if (tag.empty() || tag.find_first_of(",\r\n") != std::string::npos) tag = "model";
    std::string unique = tag;
    for (int n = 2; std::any_of(models.begin(), models.end(), [&](const auto& t) { return t.first == unique; }); ++n) {
      unique = tag + "_" + std::to_string(n);
    }
    models.emplace_back(unique, std::move(model));
  }
  const Dataset data = dataset_for(config);
  for (const auto& [tag, model] : models) {
    try {
      check_architecture(model.architecture(), data);
    } catch (const Exit& e) {
      throw Exit{kExitIo, "model '" + tag + "': " + e.message};
    }
  }
  if (config.top_k > data.classes()) throw Exit{kExitConfig, "top_k exceeds the number of classes"};
  const Dataset test_set = split(data, config.test_fraction, config.seed).second;
  SweepReport report = sweep(models, test_set, config.grid, config.top_k, config.seed);
  const std::string csv = sweep_csv(report);
  write_text(out_path, csv);
  const std::vector<std::uint8_t> bytes(csv.begin(), csv.end());
  std::printf("%zu rows  %s  digest %s\n", report.rows.size(), out.c_str(), digest_hex(bytes).c_str());
  return 0;
}

int cmd_report(const std::string& csv_path, const std::string& out) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw Exit{kExitIo, "cannot open " + csv_path};
  std::vector<SweepRow> rows;
  std::string svg;
  try {
    rows = read_sweep_csv(in);
    svg = render_sweep_svg(rows);
  } catch (const FormatError& e) {
    throw Exit{kExitFormat, csv_path + ": " + e.what()};
  }
  write_text(out, svg);
  std::printf("%zu rows  %s\n", rows.size(), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qrsnap: quality-resilient snapshot ensembles"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::string mode = "gspecialist";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> manifests;
  std::string csv_path;

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset as a QRDS file");
  gen->add_option("--config", config_path, "run configuration file");
  gen->add_option("--out", out, "output QRDS path")->required();
  gen->add_option("--seed", seed, "override the config seed");

  auto* train = app.add_subcommand("train", "train an ensemble and write snapshots, manifest and log");
  train->add_option("--config", config_path, "run configuration file");
  train->add_option("--mode", mode, "gspecialist or baseline");
  train->add_option("--out", out, "output directory")->required();
  train->add_option("--seed", seed, "override the config seed");

  auto* sw = app.add_subcommand("sweep", "evaluate ensembles over the distortion grid");
  sw->add_option("--config", config_path, "run configuration file");
  sw->add_option("--out", out, "output CSV path")->required();
  sw->add_option("--seed", seed, "override the config seed");
  sw->add_option("manifests", manifests, "ensemble manifest files")->required();

  auto* rep = app.add_subcommand("report", "render a sweep CSV as an SVG chart");
  rep->add_option("csv", csv_path, "sweep CSV")->required();
  rep->add_option("--out", out, "output SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*gen) return cmd_gen_data(config_path, out, seed);
    if (*train) return cmd_train(config_path, mode, out, seed);
    if (*sw) return cmd_sweep(config_path, manifests, out, seed);
    if (*rep) return cmd_report(csv_path, out);
  } catch (const Exit& e) {
    std::fprintf(stderr, "qrsnap: %s\n", e.message.c_str());
    return e.code;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "qrsnap: config error: %s\n", e.what());
    return kExitConfig;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "qrsnap: format error: %s\n", e.what());
    return kExitFormat;
  } catch (const Error& e) {
    std::fprintf(stderr, "qrsnap: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "qrsnap: unexpected error: %s\n", e.what());
    return 1;
  }
  return 0;
}
