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

#include "stgloc/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "stgloc/adam.hpp"
#include "stgloc/checkpoint.hpp"
#include "stgloc/errors.hpp"

namespace stg {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kGradcheckScaleFloor = 1e-4;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<Matrix> snapshot(const ParameterSet& params) {
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const auto& [name, p] : params.entries()) out.push_back(p.value());
  return out;
}

void restore(ParameterSet& params, const std::vector<Matrix>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    Tensor p = params.entries()[i].second;
    p.mutable_value() = values[i];
  }
}

std::string where(int epoch, int step) {
  return "epoch " + std::to_string(epoch) + ", step " + std::to_string(step);
}

double split_miou(const MomentLocalizer& model, const std::vector<AnnotatedSample>& samples) {
  if (samples.empty()) return 0.0;
  return evaluate(model, samples, default_alphas()).report.miou;
}

}  // namespace

nlohmann::json TrainLog::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const EpochLog& e : epochs) {
    nlohmann::json row = {{"epoch", e.epoch},
                          {"total_loss", e.total_loss},
                          {"kl_loss", e.kl_loss},
                          {"spatial_loss", e.spatial_loss},
                          {"wall_seconds", e.wall_seconds}};
    if (e.evaluated) {
      row["train_miou"] = e.train_miou;
      row["val_miou"] = e.val_miou;
    }
    rows.push_back(row);
  }
  return {{"epochs", rows},
          {"best_epoch", best_epoch},
          {"best_val_miou", best_val_miou},
          {"best_train_miou", best_train_miou}};
}

std::string TrainLog::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,total,kl,spatial,train_miou,val_miou,wall_seconds\n";
  for (const EpochLog& e : epochs) {
    out << e.epoch << ',' << e.total_loss << ',' << e.kl_loss << ',' << e.spatial_loss << ',';
    if (e.evaluated) out << e.train_miou << ',' << e.val_miou;
    else out << ',';
    out << ',' << e.wall_seconds << '\n';
  }
  return out.str();
}

bool same_trajectory(const TrainLog& a, const TrainLog& b) {
  if (a.epochs.size() != b.epochs.size() || a.best_epoch != b.best_epoch || a.best_val_miou != b.best_val_miou ||
      a.best_train_miou != b.best_train_miou) {
    return false;
  }
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    const EpochLog& x = a.epochs[i];
    const EpochLog& y = b.epochs[i];
    if (x.epoch != y.epoch || x.total_loss != y.total_loss || x.kl_loss != y.kl_loss ||
        x.spatial_loss != y.spatial_loss || x.train_miou != y.train_miou || x.val_miou != y.val_miou ||
        x.evaluated != y.evaluated) {
      return false;
    }
  }
  return true;
}

TrainOptions train_options(const RunConfig& config) {
  TrainOptions o;
  o.epochs = config.epochs;
  o.batch_size = config.batch_size;
  o.eval_every = config.eval_every;
  o.loss = config.loss;
  o.optimizer = config.optimizer;
  o.seed = config.seed;
  o.checkpoint_path = config.paths.checkpoint;
  return o;
}

TrainLog train(MomentLocalizer& model, const std::vector<AnnotatedSample>& train_set,
               const std::vector<AnnotatedSample>& val_set, const TrainOptions& options) {
  if (options.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (options.eval_every < 1) throw ConfigError("eval_every must be >= 1");
  ParameterSet& params = model.parameters();
  AdamState adam(params, options.optimizer);
  Rng shuffle_rng(options.seed);
  Rng dropout_rng(options.seed + 0x9e3779b97f4a7c15ULL);

  TrainLog log;
  std::vector<Matrix> best = snapshot(params);
  bool have_best = false;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  int step = 0;
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto start = Clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochLog e;
    e.epoch = epoch;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(options.batch_size)) {
      ++step;
      params.zero_grad();
      const std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(options.batch_size));
      Tensor batch_loss;
      for (std::size_t i = b; i < end; ++i) {
        const AnnotatedSample& s = train_set[order[i]];
        SampleLoss loss;
        try {
          loss = sample_loss(model.forward(s, true, &dropout_rng), s, options.loss);
        } catch (const TrainingError& err) {
          throw TrainingError(where(epoch, step) + ", video '" + s.video_id + "': " + err.what());
        }
        e.total_loss += loss.total.item();
        e.kl_loss += loss.kl.item();
        e.spatial_loss += loss.spatial.item();
        batch_loss = i == b ? loss.total : batch_loss + loss.total;
      }
      backward(batch_loss);
      try {
        adam_step(params, adam);
      } catch (const TrainingError& err) {
        throw TrainingError(where(epoch, step) + ": " + err.what());
      }
    }
    if (!train_set.empty()) {
      const double n = static_cast<double>(train_set.size());
      e.total_loss /= n;
      e.kl_loss /= n;
      e.spatial_loss /= n;
    }

    if (epoch % options.eval_every == 0 || epoch == options.epochs) {
      e.evaluated = true;
      e.train_miou = split_miou(model, train_set);
      e.val_miou = val_set.empty() ? e.train_miou : split_miou(model, val_set);
      if (!have_best || e.val_miou > log.best_val_miou) {
        have_best = true;
        log.best_epoch = epoch;
        log.best_val_miou = e.val_miou;
        log.best_train_miou = e.train_miou;
        best = snapshot(params);
        if (!options.checkpoint_path.empty()) save_model(model, options.checkpoint_path);
      }
    }
    e.wall_seconds = seconds_since(start);
    log.epochs.push_back(e);
    if (options.on_epoch) options.on_epoch(e);
  }

  restore(params, best);
  if (!have_best) {
    log.best_train_miou = split_miou(model, train_set);
    log.best_val_miou = val_set.empty() ? log.best_train_miou : split_miou(model, val_set);
    if (!options.checkpoint_path.empty()) save_model(model, options.checkpoint_path);
  }
  return log;
}

Evaluation evaluate(const MomentLocalizer& model, const std::vector<AnnotatedSample>& samples,
                    std::span<const double> alphas, bool swap_degenerate) {
  Evaluation ev;
  std::vector<PredictionPair> pairs;
  pairs.reserve(samples.size());
  for (const AnnotatedSample& s : samples) {
    const MomentPrediction p = model.predict(s);
    PredictionPair pair{{p.start_seconds, p.end_seconds}, {s.t_start_s, s.t_end_s}};
    pairs.push_back(pair);
    ev.predictions.push_back({s.video_id, s.query, pair.pred, pair.gt, pair_tiou(pair, swap_degenerate)});
  }
  if (pairs.empty()) {
    for (double a : alphas) ev.report.recall_at[a] = 0.0;
    return ev;
  }
  ev.report = evaluate_pairs(pairs, alphas, swap_degenerate);
  return ev;
}

std::string predictions_jsonl(const std::vector<PredictionRecord>& predictions) {
  std::string out;
  for (const PredictionRecord& p : predictions) {
    const nlohmann::json j = {{"video_id", p.video_id},     {"query", p.query},       {"pred_start_s", p.pred.start_s},
                              {"pred_end_s", p.pred.end_s}, {"gt_start_s", p.gt.start_s}, {"gt_end_s", p.gt.end_s},
                              {"tiou", p.tiou}};
    out += j.dump() + '\n';
  }
  return out;
}

Dataset load_run_data(const RunConfig& config) {
  if (!config.paths.data.empty()) return load_dataset(config.paths.data, config.top_n, config.model.detection_dim);
  if (config.paths.annotations.empty() || config.paths.features.empty()) {
    throw ConfigError("set paths.data, or paths.annotations and paths.features");
  }
  Dataset d;
  d.fps = config.fps;
  if (!config.paths.categories.empty()) d.categories = read_category_map(config.paths.categories);
  const DataSources sources{config.paths.features, config.paths.detections, d.categories,
                            d.fps, config.top_n, config.model.detection_dim};
  d.train = load_annotations(config.paths.annotations, sources);
  if (!config.paths.val_annotations.empty()) d.val = load_annotations(config.paths.val_annotations, sources);
  return d;
}

std::unique_ptr<MomentLocalizer> build_model(const RunConfig& config, const Dataset& data) {
  auto model = std::make_unique<MomentLocalizer>(config.model, build_vocabulary(data.train), config.seed);
  if (!config.paths.embeddings.empty()) model->load_word_vectors(load_text_embeddings(config.paths.embeddings));
  return model;
}

std::unique_ptr<MomentLocalizer> load_model(const RunConfig& config, const std::string& checkpoint) {
  const std::string vocab_path = checkpoint + ".vocab";
  if (!std::filesystem::exists(vocab_path)) throw CheckpointError("missing vocabulary file " + vocab_path);
  auto model = std::make_unique<MomentLocalizer>(config.model, Vocabulary::load(vocab_path), config.seed);
  load_checkpoint(checkpoint, model->parameters());
  return model;
}

void save_model(const MomentLocalizer& model, const std::string& checkpoint) {
  const auto parent = std::filesystem::path(checkpoint).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  save_checkpoint(checkpoint, model.parameters());
  model.vocab().save(checkpoint + ".vocab");
}

nlohmann::json GradcheckReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const BlockCheck& b : blocks) {
    rows.push_back({{"block", b.name},
                    {"entries", b.entries},
                    {"max_abs_error", b.max_abs_error},
                    {"max_rel_error", b.max_rel_error},
                    {"passed", b.passed}});
  }
  return {{"passed", passed}, {"seconds", seconds}, {"blocks", rows}};
}

std::string GradcheckReport::to_table() const {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-28s %8s %12s %12s  %s\n", "block", "entries", "max_abs", "max_rel",
                "result");
  out << line;
  for (const BlockCheck& b : blocks) {
    std::snprintf(line, sizeof(line), "%-28s %8zu %12.3e %12.3e  %s\n", b.name.c_str(), b.entries,
                  b.max_abs_error, b.max_rel_error, b.passed ? "PASS" : "FAIL");
    out << line;
  }
  out << (passed ? "gradcheck passed" : "gradcheck FAILED") << " in " << seconds << " s\n";
  return out.str();
}

GradcheckReport gradcheck(const GradcheckOptions& o) {
  const auto start = Clock::now();
  Rng rng(o.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random = [&](Index r, Index c) {
    Matrix m(r, c);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
  };

  auto video = std::make_shared<VideoData>();
  video->features.video_id = "gradcheck";
  video->features.features = random(o.steps, o.activity_dim);
  video->features.stride_seconds = 1.0;
  video->features.duration_seconds = static_cast<double>(o.steps);
  for (Index i = 0; i < o.steps; ++i) {
    FrameObservations f;
    f.humans = random(o.humans, o.detection_dim);
    f.objects = random(o.objects, o.detection_dim);
    f.human_labels.assign(static_cast<std::size_t>(o.humans), "person");
    f.object_labels.assign(static_cast<std::size_t>(o.objects), "cup");
    video->frames.push_back(std::move(f));
  }
  AnnotatedSample sample;
  sample.video_id = "gradcheck";
  sample.query = "person opens the door";
  sample.t_start_s = 1.0;
  sample.t_end_s = std::max(2.0, static_cast<double>(o.steps) - 1.0);
  sample.duration_s = video->features.duration_seconds;
  sample.video = video;

  ModelOptions mo;
  mo.word_dim = o.word_dim;
  mo.activity_dim = o.activity_dim;
  mo.detection_dim = o.detection_dim;
  mo.latent = o.latent;
  mo.hidden = o.hidden;
  mo.dropout = o.dropout;
  mo.variant = o.variant;
  mo.iterations = o.iterations;
  MomentLocalizer model(mo, Vocabulary(tokenize(sample.query)), o.seed + 1);
  // Nonzero biases and pad rows so no block sits at a special point.
  for (const auto& [name, p] : model.parameters().entries()) {
    Tensor t = p;
    t.mutable_value() += 0.1 * random(t.rows(), t.cols());
  }

  const LossOptions loss_options;
  auto loss_value = [&](bool record) {
    Rng dropout_rng(o.seed + 2);
    const TemporalOutput out = model.forward(sample, true, &dropout_rng);
    SampleLoss loss = sample_loss(out, sample, loss_options);
    if (record) backward(loss.total);
    return loss.total.item();
  };

  ParameterSet& params = model.parameters();
  params.zero_grad();
  loss_value(true);
  if (o.corrupt_gradients) o.corrupt_gradients(params);

  GradcheckReport report;
  report.passed = true;
  NoGradGuard guard;
  for (const auto& [name, p] : params.entries()) {
    Tensor t = p;
    const Matrix analytic = t.has_grad() ? t.grad() : Matrix::Zero(t.rows(), t.cols());
    Matrix numeric(t.rows(), t.cols());
    Matrix& value = t.mutable_value();
    for (Index i = 0; i < value.size(); ++i) {
      const double saved = value.data()[i];
      value.data()[i] = saved + o.epsilon;
      const double plus = loss_value(false);
      value.data()[i] = saved - o.epsilon;
      const double minus = loss_value(false);
      value.data()[i] = saved;
      numeric.data()[i] = (plus - minus) / (2.0 * o.epsilon);
    }
    BlockCheck b;
    b.name = name;
    b.entries = static_cast<std::size_t>(value.size());
    b.max_abs_error = (analytic - numeric).cwiseAbs().maxCoeff();
    // The floor keeps blocks whose true gradient is zero (softmax-invariant
    // biases) from dividing roundoff by roundoff.
    const double scale =
        std::max({analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), kGradcheckScaleFloor});
    b.max_rel_error = b.max_abs_error / scale;
    b.passed = std::isfinite(b.max_rel_error) && b.max_rel_error < o.tolerance;
    report.passed = report.passed && b.passed;
    report.blocks.push_back(b);
  }
  report.seconds = seconds_since(start);
  return report;
}

std::vector<AblationRow> ablate(const RunConfig& config, const Dataset& data,
                                const std::function<void(const AblationRow&)>& on_row) {
  std::vector<std::pair<GraphVariant, int>> runs;
  for (int n : config.ablate_iterations) runs.emplace_back(GraphVariant::full, n);
  const auto& variants = config.ablate_variants.empty()
                             ? std::vector<GraphVariant>(all_graph_variants().begin(), all_graph_variants().end())
                             : config.ablate_variants;
  for (GraphVariant v : variants) {
    if (v != GraphVariant::full) runs.emplace_back(v, config.model.iterations);
  }

  std::vector<AblationRow> rows;
  for (const auto& [variant, n] : runs) {
    const auto start = Clock::now();
    RunConfig c = config;
    c.model.variant = variant;
    c.model.iterations = n;
    auto model = build_model(c, data);
    TrainOptions options = train_options(c);
    options.checkpoint_path.clear();
    const TrainLog log = train(*model, data.train, data.val, options);
    AblationRow row;
    row.variant = variant;
    row.iterations = n;
    row.report = evaluate(*model, data.val.empty() ? data.train : data.val, c.alphas, c.swap_degenerate).report;
    row.best_epoch = log.best_epoch;
    row.seconds = seconds_since(start);
    if (on_row) on_row(row);
    rows.push_back(row);
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows, std::span<const double> alphas) {
  std::ostringstream out;
  out << "variant,iterations";
  for (double a : alphas) out << ",R@" << a;
  out << ",mIoU,best_epoch\n";
  char num[32];
  for (const AblationRow& r : rows) {
    out << to_string(r.variant) << ',' << r.iterations;
    for (double a : alphas) {
      std::snprintf(num, sizeof(num), "%.2f", r.report.recall_at.at(a));
      out << ',' << num;
    }
    std::snprintf(num, sizeof(num), "%.2f", r.report.miou);
    out << ',' << num << ',' << r.best_epoch << '\n';
  }
  return out.str();
}

}  // namespace stg
