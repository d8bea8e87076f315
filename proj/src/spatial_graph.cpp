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

#include "stgloc/spatial_graph.hpp"

#include "stgloc/errors.hpp"

namespace stg {

namespace {

bool same_binding(const Tensor& ling_a, const Affine& map_a, const Tensor& ling_b, const Affine& map_b) {
  return ling_a.same_node(ling_b) && map_a.weight.same_node(map_b.weight) && map_a.bias.same_node(map_b.bias);
}

}  // namespace

std::string to_string(GraphVariant variant) {
  switch (variant) {
    case GraphVariant::full:
      return "full";
    case GraphVariant::no_graph:
      return "no_graph";
    case GraphVariant::no_node_types:
      return "no_node_types";
    case GraphVariant::no_human_node:
      return "no_human_node";
    case GraphVariant::no_object_node:
      return "no_object_node";
    case GraphVariant::single_query:
      return "single_query";
  }
  return "unknown";
}

GraphVariant parse_graph_variant(std::string_view name) {
  for (GraphVariant v : all_graph_variants()) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown graph variant '" + std::string(name) + "'");
}

const std::array<GraphVariant, 6>& all_graph_variants() {
  static const std::array<GraphVariant, 6> kAll = {GraphVariant::full,          GraphVariant::no_graph,
                                                   GraphVariant::no_node_types, GraphVariant::no_human_node,
                                                   GraphVariant::no_object_node, GraphVariant::single_query};
  return kAll;
}

SceneObservations stack_scene(const Matrix& activity, std::span<const FrameObservations> frames,
                              GraphVariant variant, Index detection_dim) {
  if (static_cast<Index>(frames.size()) != activity.rows()) {
    throw InputError("stack_scene: " + std::to_string(frames.size()) + " keyframes for " +
                     std::to_string(activity.rows()) + " activity features");
  }
  const bool merge = variant == GraphVariant::no_node_types || variant == GraphVariant::no_graph;
  const bool keep_humans = !merge && variant != GraphVariant::no_human_node;
  const bool keep_objects = variant != GraphVariant::no_object_node;

  Index k_total = 0;
  Index j_total = 0;
  for (const FrameObservations& f : frames) {
    if (keep_humans) k_total += f.humans.rows();
    if (keep_objects) j_total += f.objects.rows();
    if (merge) j_total += f.humans.rows();
  }
  SceneObservations s;
  s.activity = activity;
  s.humans.resize(k_total, detection_dim);
  s.objects.resize(j_total, detection_dim);
  Index k = 0;
  Index j = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const FrameObservations& f = frames[i];
    const int step = static_cast<int>(i);
    auto take = [&](const Matrix& rows, Matrix& into, Index& at, std::vector<int>& steps) {
      if (rows.rows() > 0 && rows.cols() != detection_dim) {
        throw InputError("stack_scene: detection width " + std::to_string(rows.cols()) + ", expected " +
                         std::to_string(detection_dim));
      }
      for (Index r = 0; r < rows.rows(); ++r) {
        into.row(at++) = rows.row(r);
        steps.push_back(step);
      }
    };
    if (keep_humans) take(f.humans, s.humans, k, s.human_step);
    if (merge) take(f.humans, s.objects, j, s.object_step);
    if (keep_objects) take(f.objects, s.objects, j, s.object_step);
  }
  return s;
}

SpatialGraphParams make_spatial_graph(ParameterSet& params, Index query_dim, Index latent, Rng& rng) {
  const Index pair_in = query_dim + latent;
  SpatialGraphParams p;
  p.phi_sn_o = make_affine(params, "graph.phi_sn_o", pair_in, latent, rng);
  p.phi_vn_o = make_affine(params, "graph.phi_vn_o", pair_in, latent, rng);
  p.phi_sv_a = make_affine(params, "graph.phi_sv_a", pair_in, latent, rng);
  p.phi_vn_a = make_affine(params, "graph.phi_vn_a", pair_in, latent, rng);
  p.phi_sn_h = make_affine(params, "graph.phi_sn_h", pair_in, latent, rng);
  p.phi_sv_h = make_affine(params, "graph.phi_sv_h", pair_in, latent, rng);
  p.msg_sn = make_affine(params, "graph.msg_sn", 2 * latent, latent, rng);
  p.msg_vn = make_affine(params, "graph.msg_vn", 2 * latent, latent, rng);
  p.msg_sv = make_affine(params, "graph.msg_sv", 2 * latent, latent, rng);
  p.update_o = make_affine(params, "graph.update_o", latent, latent, rng);
  p.update_a = make_affine(params, "graph.update_a", latent, latent, rng);
  p.update_h = make_affine(params, "graph.update_h", latent, latent, rng);
  return p;
}

SpatialGraphParams make_single_query_graph(ParameterSet& params, Index query_dim, Index latent, Rng& rng) {
  const Index pair_in = query_dim + latent;
  SpatialGraphParams p;
  p.phi_sn_o = p.phi_vn_o = make_affine(params, "graph.phi_q_o", pair_in, latent, rng);
  p.phi_sv_a = p.phi_vn_a = make_affine(params, "graph.phi_q_a", pair_in, latent, rng);
  p.phi_sn_h = p.phi_sv_h = make_affine(params, "graph.phi_q_h", pair_in, latent, rng);
  p.msg_sn = make_affine(params, "graph.msg_ho", 2 * latent, latent, rng);
  p.msg_vn = make_affine(params, "graph.msg_ao", 2 * latent, latent, rng);
  p.msg_sv = make_affine(params, "graph.msg_ha", 2 * latent, latent, rng);
  p.update_o = make_affine(params, "graph.update_o", latent, latent, rng);
  p.update_a = make_affine(params, "graph.update_a", latent, latent, rng);
  p.update_h = make_affine(params, "graph.update_h", latent, latent, rng);
  return p;
}

Tensor phi(const Tensor& linguistic, const Tensor& observations, const Affine& map) {
  return map(concat_cols(repeat_rows(linguistic, observations.rows()), observations));
}

PairFeatures pair_features(const GraphState& state, const LinguisticNodes& nodes, const SpatialGraphParams& p) {
  PairFeatures f;
  f.sn_o = phi(nodes.sn, state.objects, p.phi_sn_o);
  f.vn_o = same_binding(nodes.sn, p.phi_sn_o, nodes.vn, p.phi_vn_o) ? f.sn_o : phi(nodes.vn, state.objects, p.phi_vn_o);
  f.sv_a = phi(nodes.sv, state.activity, p.phi_sv_a);
  f.vn_a = same_binding(nodes.sv, p.phi_sv_a, nodes.vn, p.phi_vn_a) ? f.sv_a : phi(nodes.vn, state.activity, p.phi_vn_a);
  f.sn_h = phi(nodes.sn, state.humans, p.phi_sn_h);
  f.sv_h = same_binding(nodes.sn, p.phi_sn_h, nodes.sv, p.phi_sv_h) ? f.sn_h : phi(nodes.sv, state.humans, p.phi_sv_h);
  return f;
}

Messages compute_messages(const PairFeatures& phis, const GraphLayout& layout, const SpatialGraphParams& p) {
  const Index t = layout.steps;
  const Tensor sum_sn_h = segment_sum(phis.sn_h, layout.human_step, t);
  const Tensor sum_sv_h = segment_sum(phis.sv_h, layout.human_step, t);
  const Tensor sum_sn_o = segment_sum(phis.sn_o, layout.object_step, t);
  const Tensor sum_vn_o = segment_sum(phis.vn_o, layout.object_step, t);

  Messages m;
  m.h_sn_o = p.msg_sn(concat_cols(phis.sn_o, gather_rows(sum_sn_h, layout.object_step)));
  m.a_vn_o = p.msg_vn(concat_cols(phis.vn_o, gather_rows(phis.vn_a, layout.object_step)));
  m.h_sv_a = p.msg_sv(concat_cols(phis.sv_a, sum_sv_h));
  m.o_vn_a = p.msg_vn(concat_cols(phis.vn_a, sum_vn_o));
  m.o_sn_h = p.msg_sn(concat_cols(phis.sn_h, gather_rows(sum_sn_o, layout.human_step)));
  m.a_sv_h = p.msg_sv(concat_cols(phis.sv_h, gather_rows(phis.sv_a, layout.human_step)));
  return m;
}

GraphState update(const GraphState& state, const Messages& m, const GraphState& initial,
                  const SpatialGraphParams& p) {
  GraphState next;
  next.iteration = state.iteration + 1;
  next.objects = sigmoid(hadamard(p.update_o(hadamard(m.h_sn_o, m.a_vn_o)), initial.objects));
  next.activity = sigmoid(hadamard(p.update_a(hadamard(m.h_sv_a, m.o_vn_a)), initial.activity));
  next.humans = sigmoid(hadamard(p.update_h(hadamard(m.o_sn_h, m.a_sv_h)), initial.humans));
  return next;
}

GraphState run_message_passing(const GraphState& initial, const GraphLayout& layout, const LinguisticNodes& nodes,
                               const SpatialGraphParams& p, int iterations) {
  if (iterations < 0) throw ConfigError("message passing needs a non-negative iteration count");
  GraphState state = initial;
  for (int n = 0; n < iterations; ++n) {
    state = update(state, compute_messages(pair_features(state, nodes, p), layout, p), initial, p);
  }
  return state;
}

SpatialGraph::SpatialGraph(GraphVariant variant, int iterations, Index activity_dim, Index detection_dim,
                           Index query_dim, Index latent, ParameterSet& params, Rng& rng)
    : variant_(variant), iterations_(iterations) {
  if (iterations < 0) throw ConfigError("graph.iterations must be non-negative");
  if (variant == GraphVariant::no_graph) {
    pooled_projection_ = make_affine(params, "graph.pooled", activity_dim + detection_dim, latent, rng);
    return;
  }
  embed_ = make_node_embeddings(params, activity_dim, detection_dim, latent, rng);
  graph_ = variant == GraphVariant::single_query ? make_single_query_graph(params, query_dim, latent, rng)
                                                 : make_spatial_graph(params, query_dim, latent, rng);
}

GraphState SpatialGraph::run(const SceneObservations& scene, const QueryEncoding& query) const {
  if (variant_ == GraphVariant::no_graph) throw ContractError("no_graph has no message-passing state");
  const EmbeddedNodes e = embed_nodes(scene.activity, scene.humans, scene.objects, embed_);
  GraphState initial{0, e.activity, e.humans, e.objects};
  GraphLayout layout{scene.steps(), scene.human_step, scene.object_step};
  const LinguisticNodes nodes = variant_ == GraphVariant::single_query ? LinguisticNodes{query.q, query.q, query.q}
                                                                        : LinguisticNodes{query.sv, query.sn, query.vn};
  return run_message_passing(initial, layout, nodes, graph_, iterations_);
}

Tensor SpatialGraph::forward(const SceneObservations& scene, const QueryEncoding& query) const {
  if (variant_ != GraphVariant::no_graph) return run(scene, query).activity;

  const Index t = scene.steps();
  const Index d_o = scene.objects.cols();
  Matrix pooled = Matrix::Zero(t, d_o);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(t);
  for (std::size_t r = 0; r < scene.object_step.size(); ++r) {
    pooled.row(scene.object_step[r]) += scene.objects.row(static_cast<Index>(r));
    counts(scene.object_step[r]) += 1.0;
  }
  for (Index i = 0; i < t; ++i) {
    if (counts(i) > 0) pooled.row(i) /= counts(i);
  }
  Matrix input(t, scene.activity.cols() + d_o);
  input << scene.activity, pooled;
  return pooled_projection_(Tensor::constant(std::move(input)));
}

}  // namespace stg
