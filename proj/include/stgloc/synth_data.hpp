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

// Synthetic moment-localization datasets with planted, query-correlated
// moments, and loaders for the on-disk annotation layout:
//
//   <dir>/annotations.jsonl        {"video_id","query","t_start_s","t_end_s","duration_s"}
//   <dir>/manifest.json            {"train": [...], "val": [...], "fps": f}
//   <dir>/categories.json          label -> "human" | "object"
//   <dir>/features/<video_id>.feat
//   <dir>/detections/<video_id>.jsonl

#ifndef STGLOC_SYNTH_DATA_HPP_
#define STGLOC_SYNTH_DATA_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "stgloc/visual_frontend.hpp"

namespace stg {

struct SyntheticSpec {
  int n_samples = 250;
  double val_fraction = 0.2;
  int t_min = 12;
  int t_max = 32;
  Index d_v = 16;
  Index d_o = 16;
  std::vector<std::string> actions = {"opens", "closes", "holds", "throws", "washes", "pours"};
  std::vector<std::string> objects = {"door", "cup", "bag", "towel", "phone", "book"};
  double signal_strength = 2.0;
  double noise_std = 0.5;
  double stride_seconds = 2.0;
  int frames_per_window = 3;
  int top_n = 15;
  std::uint64_t seed = 7;

  /// Throws ConfigError when these settings cannot produce valid samples.
  void validate() const;
};

/// Everything observed for one video, shared by all of its moments.
struct VideoData {
  ActivityFeatures features;
  std::vector<KeyframeDetections> keyframes;  // one record per window
  std::vector<FrameObservations> frames;      // categorized, one per window
};

struct AnnotatedSample {
  std::string video_id;
  std::string query;
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  double duration_s = 0.0;
  std::shared_ptr<const VideoData> video;
  // Generator bookkeeping; empty for loaded samples.
  std::string action;
  std::string object;
};

struct Dataset {
  std::vector<AnnotatedSample> train;
  std::vector<AnnotatedSample> val;
  CategoryMap categories;
  double fps = 25.0;
};

/// Labels routed to the human node by the synthetic category map.
const std::vector<std::string>& synthetic_human_labels();

Dataset generate(const SyntheticSpec& spec);

void write_dataset(const std::string& dir, const Dataset& data);

struct DataSources {
  std::string features_dir;
  std::string detections_dir;
  CategoryMap categories;
  double fps = 25.0;
  int top_n = 15;
  Index d_o = 16;
};

/// Parses annotation JSON Lines and joins each line with its feature and
/// detection files. Errors carry the offending line number or video id.
std::vector<AnnotatedSample> load_annotations(const std::string& path, const DataSources& sources);

/// Loads `<dir>` written by write_dataset (or laid out the same way).
Dataset load_dataset(const std::string& dir, int top_n, Index d_o);

}  // namespace stg

#endif  // STGLOC_SYNTH_DATA_HPP_
