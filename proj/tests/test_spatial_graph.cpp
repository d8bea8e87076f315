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

#include <algorithm>
#include <numeric>

#include "stgloc/errors.hpp"
#include "stgloc/spatial_graph.hpp"
#include "test_util.hpp"

using stg::GraphVariant;
using stg::Matrix;
using stg::Tensor;
using testutil::max_abs_diff;
using testutil::random_matrix;
using testutil::to_ref;
using testutil::to_vec;

namespace {

constexpr stg::Index kLatent = 5;
constexpr stg::Index kQuery = 4;
constexpr stg::Index kDv = 3;
constexpr stg::Index kDo = 3;

void randomize(stg::ParameterSet& params, stg::Rng& rng) {
  for (const auto& [name, p] : params.entries()) {
    Tensor t = p;
    t.mutable_value() = random_matrix(t.rows(), t.cols(), rng, -1.0, 1.0);
  }
}

// Random keyframes with the given human/object counts per step.
std::vector<stg::FrameObservations> random_frames(const std::vector<std::pair<int, int>>& counts, stg::Rng& rng) {
  std::vector<stg::FrameObservations> frames;
  for (const auto& [k, j] : counts) {
    stg::FrameObservations f;
    f.humans = random_matrix(k, kDo, rng);
    f.objects = random_matrix(j, kDo, rng);
    f.human_labels.assign(static_cast<std::size_t>(k), "person");
    f.object_labels.assign(static_cast<std::size_t>(j), "cup");
    frames.push_back(f);
  }
  return frames;
}

stg::QueryEncoding random_query(stg::Rng& rng) {
  stg::QueryEncoding q;
  q.q = Tensor::constant(random_matrix(1, kQuery, rng));
  q.sv = Tensor::constant(random_matrix(1, kQuery, rng));
  q.sn = Tensor::constant(random_matrix(1, kQuery, rng));
  q.vn = Tensor::constant(random_matrix(1, kQuery, rng));
  return q;
}

ref::Graph to_ref_graph(const stg::SpatialGraph& g) {
  const auto& e = g.embeddings();
  const auto& p = g.graph();
  return {to_ref(e.activity), to_ref(e.human),  to_ref(e.object),   to_ref(p.phi_sn_o), to_ref(p.phi_vn_o),
          to_ref(p.phi_sv_a), to_ref(p.phi_vn_a), to_ref(p.phi_sn_h), to_ref(p.phi_sv_h), to_ref(p.msg_sn),
          to_ref(p.msg_vn),   to_ref(p.msg_sv), to_ref(p.update_o), to_ref(p.update_a), to_ref(p.update_h)};
}

// Rows of `m` whose step id equals `step`.
ref::Mat rows_at(const Matrix& m, const std::vector<int>& steps, int step) {
  ref::Mat out;
  for (std::size_t r = 0; r < steps.size(); ++r) {
    if (steps[r] == step) out.push_back(to_vec(m.row(static_cast<stg::Index>(r))));
  }
  return out;
}

struct Fixture {
  stg::Rng rng{17};
  stg::ParameterSet params;
  stg::SpatialGraph graph;
  std::vector<stg::FrameObservations> frames;
  Matrix activity;
  stg::QueryEncoding query;

  explicit Fixture(int iterations, GraphVariant variant = GraphVariant::full,
                   std::vector<std::pair<int, int>> counts = {{2, 3}, {0, 2}, {1, 0}, {2, 1}})
      : graph(variant, iterations, kDv, kDo, kQuery, kLatent, params, rng) {
    randomize(params, rng);
    frames = random_frames(counts, rng);
    activity = random_matrix(static_cast<stg::Index>(counts.size()), kDv, rng);
    query = random_query(rng);
  }

  stg::SceneObservations scene() const { return stg::stack_scene(activity, frames, graph.variant(), kDo); }
};

}  // namespace

TEST_CASE("variant names round trip") {
  for (GraphVariant v : stg::all_graph_variants()) CHECK(stg::parse_graph_variant(stg::to_string(v)) == v);
  CHECK_THROWS_AS(stg::parse_graph_variant("no_such_variant"), stg::ConfigError);
}

TEST_CASE("phi examples") {
  stg::Rng rng(1);
  const Tensor ling = Tensor::constant(random_matrix(1, 2, rng));
  const Tensor obs = Tensor::constant(random_matrix(3, 2, rng));
  Matrix b(1, 2);
  b << 0.5, -1.5;
  const stg::Affine zero{Tensor::constant(Matrix::Zero(4, 2)), Tensor::constant(b)};
  const Matrix out = stg::phi(ling, obs, zero).value();
  for (stg::Index r = 0; r < 3; ++r) CHECK(out.row(r) == b);

  Matrix select = Matrix::Zero(4, 2);
  select(2, 0) = 1.0;
  select(3, 1) = 1.0;
  const stg::Affine pick{Tensor::constant(select), Tensor::constant(Matrix::Zero(1, 2))};
  CHECK(stg::phi(ling, obs, pick).value() == obs.value());

  const stg::Affine rnd{Tensor::constant(random_matrix(4, 3, rng)), Tensor::constant(random_matrix(1, 3, rng))};
  const Matrix got = stg::phi(ling, obs, rnd).value();
  for (stg::Index r = 0; r < 3; ++r) {
    const ref::Vec want = ref::affine(to_ref(rnd.weight.value()), to_vec(rnd.bias.value()),
                                      ref::concat(to_vec(ling.value()), to_vec(obs.value().row(r))));
    CHECK(max_abs_diff(got.row(r), want) < 1e-12);
  }
}

TEST_CASE("stack_scene routing per variant") {
  Fixture f(1);
  auto count = [&](GraphVariant v) {
    const auto s = stg::stack_scene(f.activity, f.frames, v, kDo);
    return std::make_pair(s.humans.rows(), s.objects.rows());
  };
  CHECK(count(GraphVariant::full) == std::make_pair<stg::Index, stg::Index>(5, 6));
  CHECK(count(GraphVariant::no_node_types) == std::make_pair<stg::Index, stg::Index>(0, 11));
  CHECK(count(GraphVariant::no_human_node) == std::make_pair<stg::Index, stg::Index>(0, 6));
  CHECK(count(GraphVariant::no_object_node) == std::make_pair<stg::Index, stg::Index>(5, 0));
  const auto s = f.scene();
  CHECK(s.human_step == std::vector<int>{0, 0, 2, 3, 3});
  CHECK(s.object_step == std::vector<int>{0, 0, 0, 1, 1, 3});
  CHECK_THROWS_AS(stg::stack_scene(random_matrix(2, kDv, f.rng), f.frames, GraphVariant::full, kDo),
                  stg::InputError);
}

TEST_CASE("messages match a per-keyframe transcription") {
  Fixture f(1);
  const auto scene = f.scene();
  const auto e = stg::embed_nodes(scene.activity, scene.humans, scene.objects, f.graph.embeddings());
  const stg::GraphState state{0, e.activity, e.humans, e.objects};
  const stg::LinguisticNodes nodes{f.query.sv, f.query.sn, f.query.vn};
  const auto& p = f.graph.graph();
  const stg::Messages m =
      stg::compute_messages(stg::pair_features(state, nodes, p), {scene.steps(), scene.human_step, scene.object_step}, p);

  const ref::Vec sv = to_vec(f.query.sv.value()), sn = to_vec(f.query.sn.value()), vn = to_vec(f.query.vn.value());
  auto A = [&](const stg::Affine& a, const ref::Vec& x) { return ref::affine(to_ref(a.weight.value()), to_vec(a.bias.value()), x); };
  std::size_t hrow = 0, orow = 0;
  for (int i = 0; i < scene.steps(); ++i) {
    const ref::Vec a = to_vec(e.activity.value().row(i));
    const ref::Mat hs = rows_at(e.humans.value(), scene.human_step, i);
    const ref::Mat os = rows_at(e.objects.value(), scene.object_step, i);
    ref::Vec s_sn_h(kLatent, 0.0), s_sv_h(kLatent, 0.0), s_sn_o(kLatent, 0.0), s_vn_o(kLatent, 0.0);
    for (const auto& h : hs) {
      const ref::Vec x = A(p.phi_sn_h, ref::concat(sn, h)), y = A(p.phi_sv_h, ref::concat(sv, h));
      for (int d = 0; d < kLatent; ++d) s_sn_h[d] += x[d], s_sv_h[d] += y[d];
    }
    for (const auto& o : os) {
      const ref::Vec x = A(p.phi_sn_o, ref::concat(sn, o)), y = A(p.phi_vn_o, ref::concat(vn, o));
      for (int d = 0; d < kLatent; ++d) s_sn_o[d] += x[d], s_vn_o[d] += y[d];
    }
    const ref::Vec phi_sv_a = A(p.phi_sv_a, ref::concat(sv, a)), phi_vn_a = A(p.phi_vn_a, ref::concat(vn, a));
    CHECK(max_abs_diff(m.h_sv_a.value().row(i), A(p.msg_sv, ref::concat(phi_sv_a, s_sv_h))) < 1e-12);
    CHECK(max_abs_diff(m.o_vn_a.value().row(i), A(p.msg_vn, ref::concat(phi_vn_a, s_vn_o))) < 1e-12);
    for (const auto& o : os) {
      const auto r = static_cast<stg::Index>(orow++);
      CHECK(max_abs_diff(m.h_sn_o.value().row(r), A(p.msg_sn, ref::concat(A(p.phi_sn_o, ref::concat(sn, o)), s_sn_h))) < 1e-12);
      CHECK(max_abs_diff(m.a_vn_o.value().row(r), A(p.msg_vn, ref::concat(A(p.phi_vn_o, ref::concat(vn, o)), phi_vn_a))) < 1e-12);
    }
    for (const auto& h : hs) {
      const auto r = static_cast<stg::Index>(hrow++);
      CHECK(max_abs_diff(m.o_sn_h.value().row(r), A(p.msg_sn, ref::concat(A(p.phi_sn_h, ref::concat(sn, h)), s_sn_o))) < 1e-12);
      CHECK(max_abs_diff(m.a_sv_h.value().row(r), A(p.msg_sv, ref::concat(A(p.phi_sv_h, ref::concat(sv, h)), phi_sv_a))) < 1e-12);
    }
  }
}

TEST_CASE("message passing matches the straight-line transcription") {
  for (int n = 0; n <= 3; ++n) {
    Fixture f(n);
    const stg::GraphState s = f.graph.run(f.scene(), f.query);
    const ref::Graph g = to_ref_graph(f.graph);
    const auto scene = f.scene();
    for (int i = 0; i < scene.steps(); ++i) {
      const ref::Keyframe frame{to_vec(scene.activity.row(i)), rows_at(scene.humans, scene.human_step, i),
                                rows_at(scene.objects, scene.object_step, i)};
      const ref::KeyframeState want = ref::spatial_graph(frame, to_vec(f.query.sv.value()),
                                                         to_vec(f.query.sn.value()), to_vec(f.query.vn.value()), g, n);
      CHECK(max_abs_diff(s.activity.value().row(i), want.a) < 1e-10);
      const ref::Mat hs = rows_at(s.humans.value(), scene.human_step, i);
      const ref::Mat os = rows_at(s.objects.value(), scene.object_step, i);
      REQUIRE(hs.size() == want.humans.size());
      REQUIRE(os.size() == want.objects.size());
      for (std::size_t k = 0; k < hs.size(); ++k) {
        for (int d = 0; d < kLatent; ++d) CHECK(std::abs(hs[k][d] - want.humans[k][d]) < 1e-10);
      }
      for (std::size_t j = 0; j < os.size(); ++j) {
        for (int d = 0; d < kLatent; ++d) CHECK(std::abs(os[j][d] - want.objects[j][d]) < 1e-10);
      }
    }
  }
}

TEST_CASE("N = 0 returns the embedded activity bit for bit") {
  Fixture f(0);
  const auto scene = f.scene();
  const auto e = stg::embed_nodes(scene.activity, scene.humans, scene.objects, f.graph.embeddings());
  const Matrix out = f.graph.forward(scene, f.query).value();
  CHECK(out == e.activity.value());
  CHECK(out.cwiseAbs().maxCoeff() < 1.0);
}

TEST_CASE("N = 1 is one manual messages + update round") {
  Fixture f(1);
  const auto scene = f.scene();
  const auto e = stg::embed_nodes(scene.activity, scene.humans, scene.objects, f.graph.embeddings());
  const stg::GraphState init{0, e.activity, e.humans, e.objects};
  const stg::LinguisticNodes nodes{f.query.sv, f.query.sn, f.query.vn};
  const stg::GraphLayout layout{scene.steps(), scene.human_step, scene.object_step};
  const auto& p = f.graph.graph();
  const stg::GraphState manual = stg::update(init, stg::compute_messages(stg::pair_features(init, nodes, p), layout, p), init, p);
  const stg::GraphState run = stg::run_message_passing(init, layout, nodes, p, 1);
  CHECK(manual.activity.value() == run.activity.value());
  CHECK(manual.humans.value() == run.humans.value());
  CHECK(manual.objects.value() == run.objects.value());
  CHECK(run.iteration == 1);
}

TEST_CASE("zero messages through zero-bias maps give one half") {
  Fixture f(1);
  const auto scene = f.scene();
  const auto e = stg::embed_nodes(scene.activity, scene.humans, scene.objects, f.graph.embeddings());
  const stg::GraphState init{0, e.activity, e.humans, e.objects};
  stg::SpatialGraphParams p = f.graph.graph();
  for (stg::Affine* m : {&p.update_o, &p.update_a, &p.update_h}) {
    m->bias = Tensor::constant(Matrix::Zero(1, kLatent));
  }
  stg::Messages zero;
  zero.h_sn_o = zero.a_vn_o = Tensor::constant(Matrix::Zero(scene.objects.rows(), kLatent));
  zero.h_sv_a = zero.o_vn_a = Tensor::constant(Matrix::Zero(scene.steps(), kLatent));
  zero.o_sn_h = zero.a_sv_h = Tensor::constant(Matrix::Zero(scene.humans.rows(), kLatent));
  const stg::GraphState next = stg::update(init, zero, init, p);
  CHECK((next.activity.value().array() == 0.5).all());
  CHECK((next.humans.value().array() == 0.5).all());
  CHECK((next.objects.value().array() == 0.5).all());
}

TEST_CASE("latents stay in range") {
  for (int n = 0; n <= 3; ++n) {
    Fixture f(n);
    const stg::GraphState s = f.graph.run(f.scene(), f.query);
    if (n == 0) {
      CHECK(s.activity.value().cwiseAbs().maxCoeff() < 1.0);
    } else {
      for (const Tensor* t : {&s.activity, &s.humans, &s.objects}) {
        CHECK(t->value().minCoeff() > 0.0);
        CHECK(t->value().maxCoeff() < 1.0);
      }
    }
  }
}

TEST_CASE("empty human or object sets contribute zero sums") {
  // Keyframe 1 has no humans and keyframe 2 no objects; the transcription
  // test covers their values, here the whole object family is dropped.
  Fixture f(2, GraphVariant::no_object_node);
  const auto scene = f.scene();
  CHECK(scene.objects.rows() == 0);
  const stg::GraphState s = f.graph.run(scene, f.query);
  const ref::Graph g = to_ref_graph(f.graph);
  for (int i = 0; i < scene.steps(); ++i) {
    const ref::Keyframe frame{to_vec(scene.activity.row(i)), rows_at(scene.humans, scene.human_step, i), {}};
    const auto want = ref::spatial_graph(frame, to_vec(f.query.sv.value()), to_vec(f.query.sn.value()),
                                         to_vec(f.query.vn.value()), g, 2);
    CHECK(max_abs_diff(s.activity.value().row(i), want.a) < 1e-10);
  }
}

TEST_CASE("shared message blocks feed both directions") {
  Fixture f(1);
  const auto scene = f.scene();
  const auto e = stg::embed_nodes(scene.activity, scene.humans, scene.objects, f.graph.embeddings());
  const stg::GraphState init{0, e.activity, e.humans, e.objects};
  const stg::LinguisticNodes nodes{f.query.sv, f.query.sn, f.query.vn};
  const stg::GraphLayout layout{scene.steps(), scene.human_step, scene.object_step};
  const stg::SpatialGraphParams& p = f.graph.graph();
  const stg::Messages before = stg::compute_messages(stg::pair_features(init, nodes, p), layout, p);

  Tensor w = p.msg_sv.weight;
  w.mutable_value()(0, 0) += 0.25;
  const stg::Messages after = stg::compute_messages(stg::pair_features(init, nodes, p), layout, p);
  CHECK(after.h_sv_a.value() != before.h_sv_a.value());
  CHECK(after.a_sv_h.value() != before.a_sv_h.value());
  CHECK(after.h_sn_o.value() == before.h_sn_o.value());
  CHECK(after.o_vn_a.value() == before.o_vn_a.value());

  Tensor v = p.msg_vn.weight;
  v.mutable_value()(1, 1) -= 0.25;
  const stg::Messages later = stg::compute_messages(stg::pair_features(init, nodes, p), layout, p);
  CHECK(later.a_vn_o.value() != after.a_vn_o.value());
  CHECK(later.o_vn_a.value() != after.o_vn_a.value());
}

TEST_CASE("timesteps do not leak into each other") {
  Fixture f(3);
  const Matrix out = f.graph.forward(f.scene(), f.query).value();
  std::vector<int> perm = {2, 0, 3, 1};
  Matrix activity(f.activity.rows(), f.activity.cols());
  std::vector<stg::FrameObservations> frames;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    activity.row(static_cast<stg::Index>(i)) = f.activity.row(perm[i]);
    frames.push_back(f.frames[static_cast<std::size_t>(perm[i])]);
  }
  const Matrix permuted =
      f.graph.forward(stg::stack_scene(activity, frames, GraphVariant::full, kDo), f.query).value();
  for (std::size_t i = 0; i < perm.size(); ++i) {
    CHECK((permuted.row(static_cast<stg::Index>(i)) - out.row(perm[i])).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("single_query equals the full graph with tied parameters and q everywhere") {
  stg::Rng rng(23);
  stg::ParameterSet single_params;
  stg::ParameterSet full_params;
  const stg::SpatialGraphParams single = stg::make_single_query_graph(single_params, kQuery, kLatent, rng);
  const stg::SpatialGraphParams full = stg::make_spatial_graph(full_params, kQuery, kLatent, rng);
  randomize(single_params, rng);
  CHECK(single_params.size() == 18);
  auto copy = [](const stg::Affine& from, const stg::Affine& to) {
    Tensor w = to.weight, b = to.bias;
    w.mutable_value() = from.weight.value();
    b.mutable_value() = from.bias.value();
  };
  copy(single.phi_sn_o, full.phi_sn_o);
  copy(single.phi_sn_o, full.phi_vn_o);
  copy(single.phi_sv_a, full.phi_sv_a);
  copy(single.phi_sv_a, full.phi_vn_a);
  copy(single.phi_sn_h, full.phi_sn_h);
  copy(single.phi_sn_h, full.phi_sv_h);
  copy(single.msg_sn, full.msg_sn);
  copy(single.msg_vn, full.msg_vn);
  copy(single.msg_sv, full.msg_sv);
  copy(single.update_o, full.update_o);
  copy(single.update_a, full.update_a);
  copy(single.update_h, full.update_h);

  const auto frames = random_frames({{2, 3}, {1, 1}, {0, 2}}, rng);
  const auto scene = stg::stack_scene(random_matrix(3, kLatent, rng), frames, GraphVariant::full, kDo);
  const stg::GraphState init{0, Tensor::constant(random_matrix(3, kLatent, rng, -1.0, 1.0)),
                             Tensor::constant(random_matrix(scene.humans.rows(), kLatent, rng, -1.0, 1.0)),
                             Tensor::constant(random_matrix(scene.objects.rows(), kLatent, rng, -1.0, 1.0))};
  const stg::GraphLayout layout{3, scene.human_step, scene.object_step};
  const Tensor q = Tensor::constant(random_matrix(1, kQuery, rng));
  const auto a = stg::run_message_passing(init, layout, {q, q, q}, single, 2);
  const auto b = stg::run_message_passing(init, layout, {q, q, q}, full, 2);
  CHECK((a.activity.value() - b.activity.value()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((a.humans.value() - b.humans.value()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((a.objects.value() - b.objects.value()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("every variant produces t x latent") {
  for (GraphVariant v : stg::all_graph_variants()) {
    Fixture f(2, v);
    const Tensor out = f.graph.forward(f.scene(), f.query);
    CHECK(out.rows() == 4);
    CHECK(out.cols() == kLatent);
  }
  Fixture f(2, GraphVariant::no_graph);
  CHECK_THROWS_AS(f.graph.run(f.scene(), f.query), stg::ContractError);
}

TEST_CASE("graph gradients match finite differences") {
  Fixture f(2, GraphVariant::full, {{2, 3}, {2, 3}});
  const auto scene = f.scene();
  const Matrix weights = random_matrix(2, kLatent, f.rng);
  auto loss = [&] { return stg::sum(stg::hadamard(f.graph.forward(scene, f.query), Tensor::constant(weights))); };
  f.params.zero_grad();
  stg::backward(loss());
  const double eps = 1e-6;
  for (const auto& [name, p] : f.params.entries()) {
    Tensor t = p;
    const Matrix analytic = t.has_grad() ? t.grad() : Matrix::Zero(t.rows(), t.cols());
    Matrix numeric(t.rows(), t.cols());
    for (stg::Index i = 0; i < t.size(); ++i) {
      const double saved = t.value().data()[i];
      t.mutable_value().data()[i] = saved + eps;
      const double up = loss().item();
      t.mutable_value().data()[i] = saved - eps;
      const double down = loss().item();
      t.mutable_value().data()[i] = saved;
      numeric.data()[i] = (up - down) / (2.0 * eps);
    }
    const double scale = std::max({analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), 1e-4});
    INFO(name);
    CHECK((analytic - numeric).cwiseAbs().maxCoeff() / scale < 1e-4);
  }
}
