// Copyright 2026 The stgloc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// stgloc: synth | train | eval | gradcheck | ablate
//
// Exit codes: 0 success, 1 usage or configuration, 2 data, 3 numerical.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "stgloc/config.hpp"
#include "stgloc/errors.hpp"
#include "stgloc/trainer.hpp"

namespace {

using stg::RunConfig;
using Json = nlohmann::json;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string variant;
  std::optional<int> iterations;
  bool swap_degenerate = false;
  std::string report;
  std::vector<std::string> sets;
};

RunConfig resolve(const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) c = stg::load_config(f.config);
  for (const std::string& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw stg::ConfigError("--set expects key=value, got '" + kv + "'");
    stg::set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.seed) c.seed = *f.seed;
  if (!f.variant.empty()) c.model.variant = stg::parse_graph_variant(f.variant);
  if (f.iterations) c.model.iterations = *f.iterations;
  if (f.swap_degenerate) c.swap_degenerate = true;
  if (!f.report.empty()) c.paths.report = f.report;
  c.validate();
  return c;
}

void write_file(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw stg::LoadError("cannot write " + path);
  out << text;
}

void write_report(const RunConfig& c, Json body) {
  body["config"] = stg::to_json(c);
  if (c.paths.report.empty()) return;
  write_file(c.paths.report, body.dump(2) + "\n");
}

int cmd_synth(const RunConfig& c, const std::string& out) {
  stg::SyntheticSpec spec = c.synth;
  spec.d_v = c.model.activity_dim;
  spec.d_o = c.model.detection_dim;
  spec.top_n = c.top_n;
  const stg::Dataset data = stg::generate(spec);
  stg::write_dataset(out, data);
  std::printf("wrote %zu train and %zu val samples to %s\n", data.train.size(), data.val.size(), out.c_str());
  write_report(c, {{"command", "synth"}, {"out", out}, {"train", data.train.size()}, {"val", data.val.size()}});
  return 0;
}

int cmd_train(const RunConfig& c) {
  const stg::Dataset data = stg::load_run_data(c);
  auto model = stg::build_model(c, data);
  stg::TrainOptions options = stg::train_options(c);
  options.on_epoch = [](const stg::EpochLog& e) {
    if (e.evaluated) {
      std::fprintf(stderr, "epoch %4d  loss %.5f (kl %.5f, spatial %.5f)  train mIoU %.2f  val mIoU %.2f  %.2fs\n",
                   e.epoch, e.total_loss, e.kl_loss, e.spatial_loss, e.train_miou, e.val_miou, e.wall_seconds);
    } else {
      std::fprintf(stderr, "epoch %4d  loss %.5f (kl %.5f, spatial %.5f)  %.2fs\n", e.epoch, e.total_loss,
                   e.kl_loss, e.spatial_loss, e.wall_seconds);
    }
  };
  const stg::TrainLog log = stg::train(*model, data.train, data.val, options);
  std::printf("best epoch %d: train mIoU %.2f, val mIoU %.2f; checkpoint %s\n", log.best_epoch,
              log.best_train_miou, log.best_val_miou, c.paths.checkpoint.c_str());
  write_report(c, {{"command", "train"}, {"checkpoint", c.paths.checkpoint}, {"train_log", log.to_json()}});
  return 0;
}

int cmd_eval(const RunConfig& c, std::string checkpoint) {
  if (checkpoint.empty()) checkpoint = c.paths.checkpoint;
  const stg::Dataset data = stg::load_run_data(c);
  auto model = stg::load_model(c, checkpoint);
  const auto& samples = c.eval_split == "train" ? data.train : data.val;
  const stg::Evaluation ev = stg::evaluate(*model, samples, c.alphas, c.swap_degenerate);
  std::printf("%s", ev.report.to_table().c_str());
  if (!c.paths.predictions.empty()) write_file(c.paths.predictions, stg::predictions_jsonl(ev.predictions));
  write_report(c, {{"command", "eval"},
                   {"checkpoint", checkpoint},
                   {"split", c.eval_split},
                   {"report", ev.report.to_json()}});
  return 0;
}

int cmd_gradcheck(const RunConfig& c) {
  stg::GradcheckOptions o;
  o.variant = c.model.variant;
  o.iterations = std::min(c.model.iterations, 2);
  o.seed = c.seed;
  const stg::GradcheckReport r = stg::gradcheck(o);
  std::printf("%s", r.to_table().c_str());
  write_report(c, {{"command", "gradcheck"}, {"variant", stg::to_string(o.variant)}, {"result", r.to_json()}});
  return r.passed ? 0 : 3;
}

int cmd_ablate(const RunConfig& c, const std::string& csv_path) {
  const stg::Dataset data = stg::load_run_data(c);
  const auto rows = stg::ablate(c, data, [](const stg::AblationRow& r) {
    std::fprintf(stderr, "%-15s N=%d  mIoU %.2f  (%.1fs)\n", stg::to_string(r.variant).c_str(), r.iterations,
                 r.report.miou, r.seconds);
  });
  const std::string csv = stg::ablation_csv(rows, c.alphas);
  std::printf("%s", csv.c_str());
  if (!csv_path.empty()) write_file(csv_path, csv);
  Json j = Json::array();
  for (const auto& r : rows) {
    j.push_back({{"variant", stg::to_string(r.variant)},
                 {"iterations", r.iterations},
                 {"report", r.report.to_json()},
                 {"best_epoch", r.best_epoch}});
  }
  write_report(c, {{"command", "ablate"}, {"rows", j}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Language-conditioned spatio-temporal moment localization"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags flags;
  app.add_option("--config", flags.config, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", flags.seed, "Override train.seed");
  app.add_option("--variant", flags.variant, "Override graph.variant");
  app.add_option("--iterations", flags.iterations, "Override graph.iterations");
  app.add_flag("--swap-degenerate", flags.swap_degenerate, "Swap end-before-start predictions when scoring");
  app.add_option("--report", flags.report, "Write a JSON report here");
  app.add_option("--set", flags.sets, "Override any config key: section.key=value");

  std::string synth_out = "data";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--out", synth_out, "Output directory");
  auto* train = app.add_subcommand("train", "Train and checkpoint the best epoch");
  std::string checkpoint;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint (default paths.checkpoint)");
  std::string split;
  eval->add_option("--split", split, "train or val");
  std::string predictions;
  eval->add_option("--predictions", predictions, "Write per-pair predictions as JSON Lines");
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  std::string csv_path;
  auto* abl = app.add_subcommand("ablate", "Train every variant and N; print a CSV table");
  abl->add_option("--csv", csv_path, "Also write the CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    RunConfig c = resolve(flags);
    if (!split.empty()) c.eval_split = split;
    if (!predictions.empty()) c.paths.predictions = predictions;
    c.validate();
    if (*synth) return cmd_synth(c, synth_out);
    if (*train) return cmd_train(c);
    if (*eval) return cmd_eval(c, checkpoint);
    if (*grad) return cmd_gradcheck(c);
    if (*abl) return cmd_ablate(c, csv_path);
  } catch (const stg::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const stg::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const stg::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
