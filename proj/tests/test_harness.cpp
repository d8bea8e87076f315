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

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "stgloc/errors.hpp"
#include "stgloc/trainer.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("stgloc_test_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* kTinyIni = R"(
[model]
word_dim = 6
d_v = 8
d_o = 8
latent = 8
hidden = 6
dropout = 0.5

[graph]
variant = full
iterations = 2

[optimizer]
lr = 0.003

[train]
batch_size = 4
epochs = 3
seed = 1

[synth]
n_samples = 20
t_min = 6
t_max = 10
seed = 5
)";

// A tiny config whose synthetic data lives in `dir`.
stg::RunConfig tiny(const fs::path& dir) {
  stg::RunConfig c;
  stg::apply_ini(c, kTinyIni);
  c.paths.data = (dir / "data").string();
  c.paths.checkpoint = (dir / "model.ckpt").string();
  if (!fs::exists(dir / "data" / "manifest.json")) {
    stg::SyntheticSpec spec = c.synth;
    spec.d_v = c.model.activity_dim;
    spec.d_o = c.model.detection_dim;
    spec.top_n = c.top_n;
    stg::write_dataset(c.paths.data, stg::generate(spec));
  }
  return c;
}

bool same_predictions(const std::vector<stg::PredictionRecord>& a, const std::vector<stg::PredictionRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].pred.start_s != b[i].pred.start_s || a[i].pred.end_s != b[i].pred.end_s || a[i].tiou != b[i].tiou) {
      return false;
    }
  }
  return true;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(STGLOC_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parses sections and overrides") {
  stg::RunConfig c;
  stg::apply_ini(c, kTinyIni);
  CHECK(c.model.word_dim == 6);
  CHECK(c.model.activity_dim == 8);
  CHECK(c.model.iterations == 2);
  CHECK(c.optimizer.learning_rate == 0.003);
  CHECK(c.batch_size == 4);
  CHECK(c.synth.t_max == 10);

  stg::apply_ini(c, "[eval]\nalphas = 0.1, 0.6\n[ablate]\nvariants = no_graph, single_query\niterations = 0, 3\n");
  CHECK(c.alphas == std::vector<double>{0.1, 0.6});
  CHECK(c.ablate_variants == std::vector<stg::GraphVariant>{stg::GraphVariant::no_graph, stg::GraphVariant::single_query});
  CHECK(c.ablate_iterations == std::vector<int>{0, 3});

  stg::apply_ini(c, "seed = 42\n");
  CHECK(c.seed == 42);
  stg::set_config_value(c, "graph.variant", "no_object_node");
  CHECK(c.model.variant == stg::GraphVariant::no_object_node);

  stg::RunConfig back;
  stg::apply_ini(back, stg::to_ini(c));
  CHECK(stg::to_json(back) == stg::to_json(c));

  CHECK_THROWS_AS(stg::apply_ini(c, "[model]\nwidth = 3\n"), stg::ConfigError);
  CHECK_THROWS_AS(stg::apply_ini(c, "[model]\nlatent = many\n"), stg::ConfigError);
  CHECK_THROWS_AS(stg::set_config_value(c, "graph.variant", "hypergraph"), stg::ConfigError);
  stg::RunConfig bad;
  bad.optimizer.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), stg::ConfigError);
  bad = {};
  bad.model.iterations = -1;
  CHECK_THROWS_AS(bad.validate(), stg::ConfigError);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto dir = scratch("determinism");
  const stg::RunConfig c = tiny(dir);
  const stg::Dataset data = stg::load_run_data(c);
  auto run = [&](std::uint64_t seed) {
    stg::RunConfig rc = c;
    rc.seed = seed;
    auto model = stg::build_model(rc, data);
    stg::TrainOptions o = stg::train_options(rc);
    o.checkpoint_path.clear();
    return stg::train(*model, data.train, data.val, o);
  };
  const stg::TrainLog a = run(1), b = run(1), other = run(2);
  CHECK(a.epochs.size() == 3);
  CHECK(stg::same_trajectory(a, b));
  CHECK(a.to_csv().substr(0, a.to_csv().find('\n')) == "epoch,total,kl,spatial,train_miou,val_miou,wall_seconds");
  CHECK_FALSE(stg::same_trajectory(a, other));
  for (const auto& e : a.epochs) {
    CHECK(std::isfinite(e.total_loss));
    CHECK(e.evaluated);
  }
}

TEST_CASE("zero epochs checkpoints the initial parameters") {
  const auto dir = scratch("epochs0");
  stg::RunConfig c = tiny(dir);
  c.epochs = 0;
  const stg::Dataset data = stg::load_run_data(c);
  auto model = stg::build_model(c, data);
  const auto before = stg::evaluate(*model, data.val, c.alphas);
  const stg::TrainLog log = stg::train(*model, data.train, data.val, stg::train_options(c));
  CHECK(log.epochs.empty());
  CHECK(log.best_epoch == 0);
  REQUIRE(fs::exists(c.paths.checkpoint));
  auto loaded = stg::load_model(c, c.paths.checkpoint);
  CHECK(same_predictions(stg::evaluate(*loaded, data.val, c.alphas).predictions, before.predictions));
}

TEST_CASE("checkpoint evaluation matches in-memory evaluation") {
  const auto dir = scratch("checkpoint");
  const stg::RunConfig c = tiny(dir);
  const stg::Dataset data = stg::load_run_data(c);
  auto model = stg::build_model(c, data);
  const stg::TrainLog log = stg::train(*model, data.train, data.val, stg::train_options(c));
  auto loaded = stg::load_model(c, c.paths.checkpoint);
  for (const auto* split : {&data.train, &data.val}) {
    const auto mem = stg::evaluate(*model, *split, c.alphas);
    const auto disk = stg::evaluate(*loaded, *split, c.alphas);
    CHECK(same_predictions(mem.predictions, disk.predictions));
    CHECK(mem.report.miou == disk.report.miou);
  }
  // The restored best epoch reproduces its logged scores exactly.
  CHECK(stg::evaluate(*loaded, data.train, c.alphas).report.miou == log.best_train_miou);
  CHECK(stg::evaluate(*loaded, data.val, c.alphas).report.miou == log.best_val_miou);

  stg::RunConfig wrong = c;
  wrong.model.latent = 12;
  CHECK_THROWS_AS(stg::load_model(wrong, c.paths.checkpoint), stg::CheckpointError);
  CHECK_THROWS_AS(stg::load_model(c, (dir / "absent.ckpt").string()), stg::CheckpointError);

  const std::string jsonl = stg::predictions_jsonl(stg::evaluate(*loaded, data.val, c.alphas).predictions);
  std::istringstream lines(jsonl);
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    const Json j = Json::parse(line);
    for (const char* key : {"video_id", "query", "pred_start_s", "pred_end_s", "gt_start_s", "gt_end_s", "tiou"}) {
      CHECK(j.contains(key));
    }
    ++n;
  }
  CHECK(n == data.val.size());
}

TEST_CASE("gradcheck passes and catches a corrupted gradient") {
  for (stg::GraphVariant v : stg::all_graph_variants()) {
    stg::GradcheckOptions o;
    o.variant = v;
    const stg::GradcheckReport r = stg::gradcheck(o);
    INFO(stg::to_string(v));
    CHECK(r.passed);
    CHECK(!r.blocks.empty());
    for (const auto& b : r.blocks) CHECK(b.max_rel_error < 1e-4);
  }
  stg::GradcheckOptions o;
  const std::string victim = "graph.msg_sv.weight";
  o.corrupt_gradients = [&](stg::ParameterSet& params) {
    stg::Tensor t = params.get(victim);
    t.mutable_grad()(0, 0) += 1e-2;
  };
  const stg::GradcheckReport r = stg::gradcheck(o);
  CHECK_FALSE(r.passed);
  for (const auto& b : r.blocks) CHECK(b.passed == (b.name != victim));
  const Json j = r.to_json();
  CHECK(j["passed"] == false);
  CHECK(r.to_table().find(victim) != std::string::npos);
}

TEST_CASE("ablation covers every variant and N and emits CSV") {
  const auto dir = scratch("ablate");
  stg::RunConfig c = tiny(dir);
  c.epochs = 1;
  const stg::Dataset data = stg::load_run_data(c);
  const auto rows = stg::ablate(c, data);
  REQUIRE(rows.size() == 10);
  for (int n = 0; n <= 4; ++n) {
    CHECK(rows[static_cast<std::size_t>(n)].variant == stg::GraphVariant::full);
    CHECK(rows[static_cast<std::size_t>(n)].iterations == n);
  }
  std::vector<stg::GraphVariant> rest;
  for (std::size_t i = 5; i < rows.size(); ++i) {
    rest.push_back(rows[i].variant);
    CHECK(rows[i].iterations == c.model.iterations);
  }
  for (stg::GraphVariant v : stg::all_graph_variants()) {
    if (v != stg::GraphVariant::full) CHECK(std::count(rest.begin(), rest.end(), v) == 1);
  }
  CHECK_FALSE(fs::exists(c.paths.checkpoint));

  const std::string csv = stg::ablation_csv(rows, c.alphas);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "variant,iterations,R@0.3,R@0.5,R@0.7,R@0.9,mIoU,best_epoch");
  std::size_t n = 0;
  while (std::getline(in, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 7);
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');
    CHECK_NOTHROW(stg::parse_graph_variant(cell));
    for (int k = 0; k < 7; ++k) {
      std::getline(cells, cell, ',');
      CHECK_NOTHROW(std::stod(cell));
    }
    ++n;
  }
  CHECK(n == rows.size());
}

TEST_CASE("command line round trip and exit codes") {
  const auto dir = scratch("cli");
  const fs::path ini = dir / "tiny.ini";
  {
    std::ofstream out(ini);
    out << kTinyIni << "\n[paths]\ndata = " << (dir / "data").string()
        << "\ncheckpoint = " << (dir / "model.ckpt").string() << "\n";
  }
  const std::string base = "--config " + ini.string();
  const fs::path log = dir / "log.txt";

  CHECK(run_cli(base + " --report " + (dir / "synth.json").string() + " synth --out " + (dir / "data").string(),
                log) == 0);
  CHECK(fs::exists(dir / "data" / "manifest.json"));

  CHECK(run_cli(base + " --report " + (dir / "train.json").string() + " train", log) == 0);
  const Json train = Json::parse(slurp(dir / "train.json"));
  CHECK(train["config"]["model"]["latent"] == 8);
  CHECK(train["train_log"]["epochs"].size() == 3);

  CHECK(run_cli(base + " --report " + (dir / "eval.json").string() + " eval --split train --predictions " +
                    (dir / "pred.jsonl").string(),
                log) == 0);
  const Json eval = Json::parse(slurp(dir / "eval.json"));
  CHECK(eval["split"] == "train");
  const Json& report = eval["report"];
  for (const char* key : {"recall_at", "miou", "n_samples", "n_degenerate"}) CHECK(report.contains(key));
  CHECK(report["miou"].get<double>() == train["train_log"]["best_train_miou"].get<double>());
  CHECK(fs::exists(dir / "pred.jsonl"));

  CHECK(run_cli(base + " --seed 3 --report " + (dir / "grad.json").string() + " gradcheck", log) == 0);
  const Json grad = Json::parse(slurp(dir / "grad.json"));
  CHECK(grad["result"]["passed"] == true);
  CHECK(grad["config"]["train"]["seed"] == 3);

  CHECK(run_cli("gradcheck --variant single_query", log) == 0);
  CHECK(run_cli("--variant single_query gradcheck", log) == 0);

  // Usage errors.
  CHECK(run_cli("", log) == 1);
  CHECK(run_cli("frobnicate", log) == 1);
  CHECK(run_cli("--config " + (dir / "absent.ini").string() + " train", log) == 1);
  CHECK(run_cli(base + " --variant hypergraph train", log) == 1);
  CHECK(run_cli(base + " --set model.latent=0 train", log) == 1);
  // Data errors.
  CHECK(run_cli(base + " --set paths.data=" + (dir / "nowhere").string() + " train", log) == 2);
  CHECK(run_cli(base + " --set model.latent=12 eval", log) == 2);
  // Numerical errors: features do not match the configured activity width.
  CHECK(run_cli(base + " --set model.d_v=5 train", log) == 3);
}
