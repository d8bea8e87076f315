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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Criteria 5 and 6 train on the synthetic task and take
// several minutes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "reference/reference.hpp"
#include "stgloc/losses.hpp"
#include "stgloc/spatial_graph.hpp"
#include "stgloc/trainer.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using stg::Matrix;
using stg::Tensor;
using testutil::max_abs_diff;
using testutil::random_matrix;
using testutil::to_ref;
using testutil::to_vec;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

void randomize(stg::ParameterSet& params, stg::Rng& rng) {
  for (const auto& [name, p] : params.entries()) {
    Tensor t = p;
    t.mutable_value() = random_matrix(t.rows(), t.cols(), rng, -1.0, 1.0);
  }
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("stgloc_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

stg::RunConfig synthetic_config(const fs::path& dir) {
  stg::RunConfig c = stg::load_config(std::string(STGLOC_SOURCE_DIR) + "/configs/synthetic.ini");
  c.paths.data = (dir / "data").string();
  c.paths.checkpoint = (dir / "model.ckpt").string();
  stg::SyntheticSpec spec = c.synth;
  spec.d_v = c.model.activity_dim;
  spec.d_o = c.model.detection_dim;
  spec.top_n = c.top_n;
  stg::write_dataset(c.paths.data, stg::generate(spec));
  return c;
}

Outcome gradient_integrity() {
  const auto t0 = Clock::now();
  std::string detail;
  bool ok = true;
  for (stg::GraphVariant v : {stg::GraphVariant::full, stg::GraphVariant::single_query}) {
    stg::GradcheckOptions o;
    o.variant = v;
    o.steps = 4;
    o.humans = 2;
    o.objects = 3;
    o.iterations = 2;
    o.latent = 8;
    const stg::GradcheckReport r = stg::gradcheck(o);
    double worst = 0.0;
    for (const auto& b : r.blocks) worst = std::max(worst, b.max_rel_error);
    ok = ok && r.passed && worst < 1e-4;
    detail += stg::to_string(v) + " " + std::to_string(r.blocks.size()) + " blocks, max rel " + fmt("%.2e", worst) + "; ";
  }
  const double s = seconds_since(t0);
  return {ok && s < 60.0, detail + fmt("%.2f s", s)};
}

Outcome zero_iterations() {
  stg::Rng rng(31);
  stg::ParameterSet params;
  const stg::SpatialGraph graph(stg::GraphVariant::full, 0, 6, 5, 4, 8, params, rng);
  randomize(params, rng);
  std::vector<stg::FrameObservations> frames(5);
  for (auto& f : frames) {
    f.humans = random_matrix(2, 5, rng);
    f.objects = random_matrix(3, 5, rng);
    f.human_labels.assign(2, "person");
    f.object_labels.assign(3, "cup");
  }
  const auto scene = stg::stack_scene(random_matrix(5, 6, rng), frames, stg::GraphVariant::full, 5);
  stg::QueryEncoding q;
  q.q = q.sv = Tensor::constant(random_matrix(1, 4, rng));
  q.sn = Tensor::constant(random_matrix(1, 4, rng));
  q.vn = Tensor::constant(random_matrix(1, 4, rng));
  const auto e = stg::embed_nodes(scene.activity, scene.humans, scene.objects, graph.embeddings());
  const stg::GraphState init{0, e.activity, e.humans, e.objects};
  const auto out = stg::run_message_passing(init, {5, scene.human_step, scene.object_step}, {q.sv, q.sn, q.vn},
                                            graph.graph(), 0);
  const Matrix expected = (scene.activity * graph.embeddings().activity.weight.value()).rowwise() +
                          graph.embeddings().activity.bias.value().row(0);
  const bool bitwise = out.activity.value() == e.activity.value() &&
                       graph.forward(scene, q).value() == e.activity.value() &&
                       out.activity.value() == expected.array().tanh().matrix();
  return {bitwise, bitwise ? "a^0 returned bit for bit" : "activity latents differ from tanh embedding"};
}

Outcome loss_identities() {
  stg::Rng rng(41);
  double worst_self = 0.0, lowest = 1e300;
  for (int i = 0; i < 1000; ++i) {
    const stg::Index t = 2 + i % 9;
    Matrix p = random_matrix(t, 1, rng, 0.0, 1.0), q = random_matrix(t, 1, rng, 0.0, 1.0);
    p /= p.sum();
    q /= q.sum();
    lowest = std::min(lowest, stg::kl_divergence(Tensor::constant(p), q).item());
    worst_self = std::max(worst_self, std::abs(stg::kl_divergence(Tensor::constant(p), p).item()));
  }
  Matrix half(2, 1), quarter(2, 1), y(3, 1);
  half << 0.5, 0.5;
  quarter << 0.25, 0.75;
  y << 0.2, 0.6, 0.2;
  const double kl = stg::kl_divergence(Tensor::constant(half), quarter).item();
  const double spatial = stg::spatial_loss(Tensor::constant(y), 1, 1).item();
  const double covered = stg::spatial_loss(Tensor::constant(y), 0, 2).item();
  const bool ok = worst_self < 1e-12 && lowest >= -1e-9 && covered == 0.0 && std::abs(kl - 0.14384) < 1e-4 &&
                  std::abs(spatial - 0.44629) < 1e-4;
  return {ok, "max |KL(p||p)| " + fmt("%.1e", worst_self) + ", min KL " + fmt("%.2e", lowest) + ", KL example " +
                  fmt("%.5f", kl) + ", spatial example " + fmt("%.5f", spatial) + ", covered span " +
                  fmt("%g", covered)};
}

Outcome metric_oracle() {
  const std::vector<stg::PredictionPair> pairs = {
      {{0, 10}, {0, 10}}, {{0, 10}, {5, 15}}, {{0, 5}, {7, 9}},    {{2, 6}, {0, 8}}, {{1, 4}, {2, 5}},
      {{0, 3}, {0, 4}},   {{10, 20}, {12, 30}}, {{3, 3}, {3, 3}}, {{5, 9}, {4, 10}}, {{0, 1}, {1, 2}}};
  // Hand table: tIoU 1, 1/3, 0, 1/2, 1/2, 3/4, 2/5, 1, 2/3, 0.
  const double hand_miou = 100.0 * (1.0 + 1.0 / 3 + 0.5 + 0.5 + 0.75 + 0.4 + 1.0 + 2.0 / 3) / 10.0;
  const auto report = stg::evaluate_pairs(pairs, stg::default_alphas());
  bool ok = report.recall_at.at(0.3) == 80.0 && report.recall_at.at(0.5) == 40.0 &&
            report.recall_at.at(0.7) == 30.0 && report.recall_at.at(0.9) == 20.0 &&
            std::abs(report.miou - hand_miou) < 1e-12;
  const bool table = ok;

  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.0, 60.0), scale(0.01, 100.0);
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    double a0 = u(rng), a1 = u(rng), b0 = u(rng), b1 = u(rng);
    if (a0 > a1) std::swap(a0, a1);
    if (b0 > b1) std::swap(b0, b1);
    const stg::Interval a{a0, a1}, b{b0, b1};
    const double v = stg::tiou(a, b);
    const double c = scale(rng);
    if (v != stg::tiou(b, a)) ++violations;
    if (a1 > a0 && stg::tiou(a, a) != 1.0) ++violations;
    if ((a1 < b0 || b1 < a0) && v != 0.0) ++violations;
    if (std::abs(stg::tiou({c * a0, c * a1}, {c * b0, c * b1}) - v) > 1e-9) ++violations;
  }
  ok = ok && violations == 0;
  return {ok, std::string(table ? "fixture table exact" : "fixture table mismatch") + ", " +
                  std::to_string(violations) + " property violations over 10000 interval pairs"};
}

Outcome learnability() {
  const stg::RunConfig c = synthetic_config(scratch("learn"));
  const stg::Dataset data = stg::load_run_data(c);
  const auto t0 = Clock::now();
  auto model = stg::build_model(c, data);
  stg::TrainOptions o = stg::train_options(c);
  o.on_epoch = [](const stg::EpochLog& e) {
    if (e.epoch % 20 == 0) {
      std::fprintf(stderr, "  [learnability] epoch %d  loss %.4f  val mIoU %.2f\n", e.epoch, e.total_loss, e.val_miou);
    }
  };
  const stg::TrainLog log = stg::train(*model, data.train, data.val, o);
  const double s = seconds_since(t0);
  const bool ok = data.train.size() == 200 && data.val.size() == 50 && c.model.iterations == 3 &&
                  c.model.latent == 32 && c.epochs <= 200 && log.best_val_miou >= 70.0 && s < 900.0;
  return {ok, std::to_string(data.train.size()) + "/" + std::to_string(data.val.size()) + " samples, " +
                  std::to_string(c.epochs) + " epochs, best val mIoU " + fmt("%.2f", log.best_val_miou) +
                  " at epoch " + std::to_string(log.best_epoch) + ", " + fmt("%.0f s", s)};
}

// Ablation training budget. Shorter than the learnability run so the three
// trainings fit the acceptance time budget; every row gets the same budget.
constexpr int kAblationEpochs = 40;

Outcome ablation_direction() {
  stg::RunConfig c = synthetic_config(scratch("ablate"));
  c.epochs = kAblationEpochs;
  c.ablate_iterations = {0, 3};
  c.ablate_variants = {stg::GraphVariant::no_graph};
  const stg::Dataset data = stg::load_run_data(c);
  double n0 = 0, n3 = 0, none = 0;
  for (const auto& r : stg::ablate(c, data, [](const stg::AblationRow& r) {
         std::fprintf(stderr, "  [ablation] %s N=%d  val mIoU %.2f  (%.0f s)\n", stg::to_string(r.variant).c_str(),
                      r.iterations, r.report.miou, r.seconds);
       })) {
    if (r.variant == stg::GraphVariant::full && r.iterations == 0) n0 = r.report.miou;
    if (r.variant == stg::GraphVariant::full && r.iterations == 3) n3 = r.report.miou;
    if (r.variant == stg::GraphVariant::no_graph) none = r.report.miou;
  }
  const bool ok = n3 - n0 >= 10.0 && n3 - none >= 5.0;
  return {ok, "mIoU N=0 " + fmt("%.2f", n0) + ", N=3 " + fmt("%.2f", n3) + ", no_graph " + fmt("%.2f", none) +
                  " (" + std::to_string(kAblationEpochs) + " epochs each, seed " + std::to_string(c.seed) + ")"};
}

Matrix checkerboard(int n) {
  Matrix m(n, n);
  for (int r = 0; r < n; ++r) {
    for (int col = 0; col < n; ++col) m(r, col) = (r + col) % 2;
  }
  return m;
}

Matrix box_blur(const Matrix& img) {
  Matrix out(img.rows(), img.cols());
  for (stg::Index r = 0; r < img.rows(); ++r) {
    for (stg::Index col = 0; col < img.cols(); ++col) {
      double s = 0.0;
      int n = 0;
      for (stg::Index dr = -1; dr <= 1; ++dr) {
        for (stg::Index dc = -1; dc <= 1; ++dc) {
          if (r + dr < 0 || col + dc < 0 || r + dr >= img.rows() || col + dc >= img.cols()) continue;
          s += img(r + dr, col + dc);
          ++n;
        }
      }
      out(r, col) = s / n;
    }
  }
  return out;
}

Outcome keyframe_sharpness() {
  const bool constant = stg::variance_of_laplacian(Matrix::Constant(9, 7, 0.37)) == 0.0;
  const Matrix board = checkerboard(10);
  const bool checker = stg::variance_of_laplacian(board) > stg::variance_of_laplacian(box_blur(board));
  stg::Rng rng(47);
  int hits = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix sharp = random_matrix(8, 8, rng, 0.0, 1.0);
    const int n = std::uniform_int_distribution<int>(2, 8)(rng);
    const int at = std::uniform_int_distribution<int>(0, n - 1)(rng);
    std::vector<Matrix> frames;
    for (int i = 0; i < n; ++i) frames.push_back(i == at ? sharp : box_blur(sharp));
    hits += stg::select_keyframe(frames) == static_cast<std::size_t>(at) ? 1 : 0;
  }
  return {constant && checker && hits == 100, std::string("constant ") + (constant ? "0" : "nonzero") +
                                                  ", checkerboard " + (checker ? ">" : "<=") + " blurred, " +
                                                  std::to_string(hits) + "/100 planted frames found"};
}

Outcome determinism() {
  const fs::path dir = scratch("determinism");
  stg::RunConfig c = synthetic_config(dir);
  c.synth.n_samples = 40;
  stg::SyntheticSpec spec = c.synth;
  spec.d_v = c.model.activity_dim;
  spec.d_o = c.model.detection_dim;
  fs::remove_all(c.paths.data);
  stg::write_dataset(c.paths.data, stg::generate(spec));
  c.epochs = 3;
  const stg::Dataset data = stg::load_run_data(c);
  auto a = stg::build_model(c, data);
  auto b = stg::build_model(c, data);
  stg::TrainOptions o = stg::train_options(c);
  const stg::TrainLog la = stg::train(*a, data.train, data.val, o);
  o.checkpoint_path.clear();
  const stg::TrainLog lb = stg::train(*b, data.train, data.val, o);
  const bool same = stg::same_trajectory(la, lb);

  auto loaded = stg::load_model(c, c.paths.checkpoint);
  bool identical = true;
  for (const auto* split : {&data.train, &data.val}) {
    const auto mem = stg::evaluate(*a, *split, c.alphas).predictions;
    const auto disk = stg::evaluate(*loaded, *split, c.alphas).predictions;
    identical = identical && mem.size() == disk.size();
    for (std::size_t i = 0; identical && i < mem.size(); ++i) {
      identical = mem[i].pred.start_s == disk[i].pred.start_s && mem[i].pred.end_s == disk[i].pred.end_s &&
                  mem[i].tiou == disk[i].tiou;
    }
  }
  return {same && identical, std::string(same ? "identical" : "different") + " train logs, checkpoint eval " +
                                 (identical ? "bit-identical" : "differs")};
}

Outcome reference_equivalence() {
  stg::Rng rng(53);
  double gru = 0.0, attention = 0.0, graph = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    stg::ParameterSet params;
    const stg::GruParams g = stg::make_bigru(params, "g", 3, 4, 2, rng);
    randomize(params, rng);
    const Matrix x = random_matrix(6, 3, rng);
    gru = std::max(gru, max_abs_diff(stg::bigru_forward(Tensor::constant(x), g).value(), ref::bigru(to_ref(x), to_ref(g))));

    stg::ParameterSet tp;
    const stg::TextEncoderParams text = stg::make_text_encoder(tp, 9, 5, 3, rng);
    randomize(tp, rng);
    const std::vector<int> ids = {1, 6, 3, 8, 1};
    const stg::QueryEncoding enc = stg::encode_query(ids, text);
    ref::Mat words;
    for (int id : ids) words.push_back(to_vec(text.table.weights.value().row(id)));
    const ref::Mat ctx = ref::bigru(words, to_ref(text.gru));
    const ref::Mat keys[3] = {to_ref(text.key_projection[0].value()), to_ref(text.key_projection[1].value()),
                              to_ref(text.key_projection[2].value())};
    const ref::Heads h = ref::attention(words, ctx, keys);
    attention = std::max({attention, max_abs_diff(enc.sv.value(), h.out[0]), max_abs_diff(enc.sn.value(), h.out[1]),
                          max_abs_diff(enc.vn.value(), h.out[2]), max_abs_diff(enc.attention_weights.value(), h.weights)});

    stg::ParameterSet gp;
    const stg::SpatialGraph sg(stg::GraphVariant::full, 3, 4, 5, 6, 7, gp, rng);
    randomize(gp, rng);
    std::vector<stg::FrameObservations> frames;
    for (int i = 0; i < 3; ++i) {
      stg::FrameObservations f;
      f.humans = random_matrix(i, 5, rng);
      f.objects = random_matrix(3 - i, 5, rng);
      f.human_labels.assign(static_cast<std::size_t>(i), "person");
      f.object_labels.assign(static_cast<std::size_t>(3 - i), "cup");
      frames.push_back(f);
    }
    const auto scene = stg::stack_scene(random_matrix(3, 4, rng), frames, stg::GraphVariant::full, 5);
    stg::QueryEncoding q;
    q.sv = Tensor::constant(random_matrix(1, 6, rng));
    q.sn = Tensor::constant(random_matrix(1, 6, rng));
    q.vn = Tensor::constant(random_matrix(1, 6, rng));
    q.q = q.sv;
    const Matrix out = sg.forward(scene, q).value();
    const auto& e = sg.embeddings();
    const auto& p = sg.graph();
    const ref::Graph rg{to_ref(e.activity), to_ref(e.human),    to_ref(e.object),   to_ref(p.phi_sn_o),
                        to_ref(p.phi_vn_o), to_ref(p.phi_sv_a), to_ref(p.phi_vn_a), to_ref(p.phi_sn_h),
                        to_ref(p.phi_sv_h), to_ref(p.msg_sn),   to_ref(p.msg_vn),   to_ref(p.msg_sv),
                        to_ref(p.update_o), to_ref(p.update_a), to_ref(p.update_h)};
    for (int i = 0; i < 3; ++i) {
      ref::Keyframe kf{to_vec(scene.activity.row(i)), to_ref(frames[static_cast<std::size_t>(i)].humans),
                       to_ref(frames[static_cast<std::size_t>(i)].objects)};
      const auto want = ref::spatial_graph(kf, to_vec(q.sv.value()), to_vec(q.sn.value()), to_vec(q.vn.value()), rg, 3);
      graph = std::max(graph, max_abs_diff(out.row(i), want.a));
    }
  }
  const bool ok = gru < 1e-10 && attention < 1e-10 && graph < 1e-10;
  return {ok, "max abs diff BiGRU " + fmt("%.1e", gru) + ", attention " + fmt("%.1e", attention) +
                  ", spatial graph " + fmt("%.1e", graph)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient integrity", gradient_integrity},
      {"N=0 contract", zero_iterations},
      {"loss identities", loss_identities},
      {"metric oracle", metric_oracle},
      {"learnability", learnability},
      {"ablation direction", ablation_direction},
      {"keyframe sharpness", keyframe_sharpness},
      {"determinism and persistence", determinism},
      {"reference-loop equivalence", reference_equivalence},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += o.passed ? 0 : 1;
    std::printf("%s criterion %zu (%s): %s\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
