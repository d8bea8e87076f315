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

// Visual observations: activity features, keyframe sharpness, detection
// routing into human/object sets, and the tanh node embeddings
// psi(x) = tanh(x W + b) for the activity, human and object nodes.

#ifndef STGLOC_VISUAL_FRONTEND_HPP_
#define STGLOC_VISUAL_FRONTEND_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "stgloc/errors.hpp"
#include "stgloc/parameters.hpp"

namespace stg {

/// Population variance of the 4-neighbour Laplacian response over the valid
/// interior of a grayscale image.
template <typename Derived>
double variance_of_laplacian(const Eigen::MatrixBase<Derived>& image) {
  const Index h = image.rows();
  const Index w = image.cols();
  if (h < 3 || w < 3) {
    throw InputError("variance_of_laplacian: image " + std::to_string(h) + "x" + std::to_string(w) +
                     " is smaller than the 3x3 kernel");
  }
  const Index n = (h - 2) * (w - 2);
  double mean = 0.0;
  double sq = 0.0;
  for (Index r = 1; r + 1 < h; ++r) {
    for (Index c = 1; c + 1 < w; ++c) {
      const double v = image(r - 1, c) + image(r + 1, c) + image(r, c - 1) + image(r, c + 1) - 4.0 * image(r, c);
      mean += v;
      sq += v * v;
    }
  }
  mean /= static_cast<double>(n);
  const double var = sq / static_cast<double>(n) - mean * mean;
  return var > 0.0 ? var : 0.0;
}

/// Index of the sharpest frame; ties resolve to the lowest index.
template <typename MatrixType>
std::size_t select_keyframe(std::span<const MatrixType> frames) {
  if (frames.empty()) throw InputError("select_keyframe: no frames");
  std::size_t best = 0;
  double best_score = variance_of_laplacian(frames[0]);
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const double s = variance_of_laplacian(frames[i]);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

template <typename MatrixType>
std::size_t select_keyframe(const std::vector<MatrixType>& frames) {
  return select_keyframe(std::span<const MatrixType>(frames));
}

struct ActivityFeatures {
  std::string video_id;
  Matrix features;  // t x d_v
  double stride_seconds = 1.0;
  double duration_seconds = 0.0;

  Index steps() const { return features.rows(); }
  /// Throws InputError when the invariants on t, stride and duration fail.
  void validate() const;
};

struct Detection {
  std::string label;
  double confidence = 0.0;
  Eigen::VectorXd feature;
};

enum class NodeCategory { human, object };

class CategoryMap {
 public:
  CategoryMap() = default;
  explicit CategoryMap(std::unordered_map<std::string, NodeCategory> labels) : labels_(std::move(labels)) {}

  void set(const std::string& label, NodeCategory c) { labels_[label] = c; }
  /// Labels outside the map are objects.
  NodeCategory category(const std::string& label) const;
  const std::unordered_map<std::string, NodeCategory>& labels() const { return labels_; }

 private:
  std::unordered_map<std::string, NodeCategory> labels_;
};

/// Observations of one keyframe, split by node type.
struct FrameObservations {
  Matrix humans;   // K x d_o
  Matrix objects;  // J x d_o
  std::vector<std::string> human_labels;
  std::vector<std::string> object_labels;
};

/// Keeps the `top_n` most confident detections (stable on ties), then routes
/// each to the human or object set.
FrameObservations categorize_detections(std::span<const Detection> detections, const CategoryMap& categories,
                                        int top_n, Index feature_dim);

struct NodeEmbeddingParams {
  Affine activity;
  Affine human;
  Affine object;
};

NodeEmbeddingParams make_node_embeddings(ParameterSet& params, Index activity_dim, Index detection_dim,
                                         Index latent, Rng& rng);

struct EmbeddedNodes {
  Tensor activity;  // a^0, t x latent
  Tensor humans;    // h^{k,0} stacked over all keyframes
  Tensor objects;   // o^{j,0} stacked over all keyframes
};

/// Applies the node-specific tanh embeddings to stacked raw observations.
EmbeddedNodes embed_nodes(const Matrix& activity, const Matrix& humans, const Matrix& objects,
                          const NodeEmbeddingParams& params);

// File formats.

/// Binary: "FEAT", u32 version, u32-length id, u64 t, u64 d_v, f64 stride,
/// f64 duration, t*d_v f64 row-major.
void write_feature_file(const std::string& path, const ActivityFeatures& features);
ActivityFeatures read_feature_file(const std::string& path);

/// One JSON Lines record per keyframe.
struct KeyframeDetections {
  std::string video_id;
  std::int64_t frame_index = 0;
  std::vector<Detection> detections;
};

void write_detection_file(const std::string& path, std::span<const KeyframeDetections> frames);
std::vector<KeyframeDetections> read_detection_file(const std::string& path);

/// JSON object mapping label -> "human" | "object".
CategoryMap read_category_map(const std::string& path);
void write_category_map(const std::string& path, const CategoryMap& categories);

}  // namespace stg

#endif  // STGLOC_VISUAL_FRONTEND_HPP_
