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

// Language-conditioned message passing over the activity (A), human (H) and
// object (O) nodes of every keyframe, conditioned on the linguistic nodes
// SV, SN and VN.
//
// Pair features      Phi_{L,X} = W_{lx} [L ; x] + b_{lx}
// Messages           Psi       = f([Phi_receiver ; Phi_or_sum_of_sender])
// Updates            x^{n+1}   = sigmoid(m_x(Psi_1 * Psi_2) * x^0)
//
// The message maps are shared per linguistic node: f_{H,SN,O} = f_{O,SN,H},
// f_{A,VN,O} = f_{O,VN,A} and f_{H,SV,A} = f_{A,SV,H}. Sums over an empty
// human or object set are zero vectors.
//
// All keyframes of a video are processed in one batch. Rows of the stacked
// human and object matrices carry the index of their timestep, and sums over
// k or j are per-timestep segment sums, so no information crosses timesteps.

#ifndef STGLOC_SPATIAL_GRAPH_HPP_
#define STGLOC_SPATIAL_GRAPH_HPP_

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stgloc/parameters.hpp"
#include "stgloc/text_encoder.hpp"
#include "stgloc/visual_frontend.hpp"

namespace stg {

enum class GraphVariant { full, no_graph, no_node_types, no_human_node, no_object_node, single_query };

std::string to_string(GraphVariant variant);
/// Throws ConfigError for unknown names.
GraphVariant parse_graph_variant(std::string_view name);
const std::array<GraphVariant, 6>& all_graph_variants();

/// Raw observations of every keyframe of one video, stacked by node type.
struct SceneObservations {
  Matrix activity;  // t x d_v
  Matrix humans;    // sum_i K_i x d_o
  Matrix objects;   // sum_i J_i x d_o
  std::vector<int> human_step;
  std::vector<int> object_step;

  Index steps() const { return activity.rows(); }
};

/// Stacks per-keyframe observations, applying the variant's routing:
/// no_node_types and no_graph send every detection to the object set,
/// no_human_node drops humans and no_object_node drops objects.
SceneObservations stack_scene(const Matrix& activity, std::span<const FrameObservations> frames,
                              GraphVariant variant, Index detection_dim);

struct LinguisticNodes {
  Tensor sv, sn, vn;
};

struct SpatialGraphParams {
  Affine phi_sn_o, phi_vn_o, phi_sv_a, phi_vn_a, phi_sn_h, phi_sv_h;
  Affine msg_sn, msg_vn, msg_sv;
  Affine update_o, update_a, update_h;
};

SpatialGraphParams make_spatial_graph(ParameterSet& params, Index query_dim, Index latent, Rng& rng);

/// The single-query-node graph. Pair maps Phi_{Q,O}, Phi_{Q,A}, Phi_{Q,H}
/// fill both slots of their observation type, and the message maps
/// f_{H,Q,O} = f_{O,Q,H}, f_{A,Q,O} = f_{O,Q,A}, f_{H,Q,A} = f_{A,Q,H}
/// fill the SN, VN and SV slots respectively. Use with LinguisticNodes {q, q, q}.
SpatialGraphParams make_single_query_graph(ParameterSet& params, Index query_dim, Index latent, Rng& rng);

struct GraphLayout {
  Index steps = 0;
  std::vector<int> human_step;
  std::vector<int> object_step;
};

struct GraphState {
  int iteration = 0;
  Tensor activity;  // t x latent
  Tensor humans;
  Tensor objects;
};

struct PairFeatures {
  Tensor sn_o, vn_o, sv_a, vn_a, sn_h, sv_h;
};

struct Messages {
  Tensor h_sn_o, a_vn_o;  // per object
  Tensor h_sv_a, o_vn_a;  // per activity
  Tensor o_sn_h, a_sv_h;  // per human
};

/// W [linguistic ; observation_r] + b for every row r of `observations`.
Tensor phi(const Tensor& linguistic, const Tensor& observations, const Affine& map);

PairFeatures pair_features(const GraphState& state, const LinguisticNodes& nodes, const SpatialGraphParams& p);
Messages compute_messages(const PairFeatures& phis, const GraphLayout& layout, const SpatialGraphParams& p);
/// One update; multiplies against the iteration-0 latents in `initial`.
GraphState update(const GraphState& state, const Messages& messages, const GraphState& initial,
                  const SpatialGraphParams& p);

/// N sequential message/update rounds. N = 0 returns `initial` untouched.
GraphState run_message_passing(const GraphState& initial, const GraphLayout& layout, const LinguisticNodes& nodes,
                               const SpatialGraphParams& p, int iterations);

/// Spatial stage of the model for one graph variant: node embeddings plus
/// message passing, or the mean-pooled projection for no_graph.
class SpatialGraph {
 public:
  SpatialGraph(GraphVariant variant, int iterations, Index activity_dim, Index detection_dim, Index query_dim,
               Index latent, ParameterSet& params, Rng& rng);

  GraphVariant variant() const { return variant_; }
  int iterations() const { return iterations_; }

  /// Contextualized activity representation, t x latent.
  Tensor forward(const SceneObservations& scene, const QueryEncoding& query) const;
  /// Final state of every node; not available for no_graph.
  GraphState run(const SceneObservations& scene, const QueryEncoding& query) const;

  const NodeEmbeddingParams& embeddings() const { return embed_; }
  const SpatialGraphParams& graph() const { return graph_; }

 private:
  GraphVariant variant_;
  int iterations_;
  NodeEmbeddingParams embed_;
  SpatialGraphParams graph_;
  Affine pooled_projection_;
};

}  // namespace stg

#endif  // STGLOC_SPATIAL_GRAPH_HPP_
