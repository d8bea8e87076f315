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

#include "stgloc/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "json.hpp"
#include "stgloc/errors.hpp"

namespace stg {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kClutterLabels = {"wall", "floor", "ceiling", "window", "shelf"};

Eigen::VectorXd random_unit(Index dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (Index i = 0; i < dim; ++i) v(i) = normal(rng);
  return v / v.norm();
}

int uniform_int(int lo, int hi, Rng& rng) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double uniform(double lo, double hi, Rng& rng) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Matrix box_blur(const Matrix& img) {
  Matrix out(img.rows(), img.cols());
  for (Index r = 0; r < img.rows(); ++r) {
    for (Index c = 0; c < img.cols(); ++c) {
      double s = 0.0;
      int n = 0;
      for (Index dr = -1; dr <= 1; ++dr) {
        for (Index dc = -1; dc <= 1; ++dc) {
          const Index rr = r + dr;
          const Index cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= img.rows() || cc >= img.cols()) continue;
          s += img(rr, cc);
          ++n;
        }
      }
      out(r, c) = s / n;
    }
  }
  return out;
}

// Renders a window of frames with one sharp frame among blurred copies and
// returns the index chosen by the sharpness criterion.
std::size_t render_and_select_keyframe(int frames, Rng& rng) {
  Matrix texture(6, 6);
  for (Index i = 0; i < texture.size(); ++i) texture.data()[i] = uniform(0.0, 1.0, rng);
  const int sharp = uniform_int(0, frames - 1, rng);
  std::vector<Matrix> window;
  for (int f = 0; f < frames; ++f) window.push_back(f == sharp ? texture : box_blur(texture));
  return select_keyframe(window);
}

struct Prototypes {
  std::vector<Eigen::VectorXd> action_dirs;
  std::vector<Eigen::VectorXd> object_dirs;
  std::vector<Eigen::VectorXd> object_features;
  std::vector<Eigen::VectorXd> human_features;
  std::vector<Eigen::VectorXd> clutter_features;
};

Detection make_detection(const std::string& label, const Eigen::VectorXd& proto, double lo, double hi,
                         double noise_std, Rng& rng) {
  std::normal_distribution<double> normal(0.0, noise_std > 0.0 ? noise_std : 1.0);
  Detection d;
  d.label = label;
  d.confidence = uniform(lo, hi, rng);
  d.feature = proto;
  if (noise_std > 0.0) {
    for (Index i = 0; i < d.feature.size(); ++i) d.feature(i) += normal(rng);
  }
  return d;
}

struct Span {
  int start;
  int end;  // inclusive
  int action;
  int object;
};

void generate_videos(const SyntheticSpec& spec, const Prototypes& protos, const CategoryMap& cats, int samples,
                     int& next_video, std::vector<AnnotatedSample>& out, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto& humans = synthetic_human_labels();
  int remaining = samples;
  while (remaining > 0) {
    const int t = uniform_int(spec.t_min, spec.t_max, rng);
    // Each moment needs two windows plus a one-window gap to its neighbour.
    const int m = std::min({uniform_int(2, 3, rng), remaining, (t + 1) / 3});

    std::vector<int> actions(spec.actions.size());
    std::vector<int> objects(spec.objects.size());
    std::iota(actions.begin(), actions.end(), 0);
    std::iota(objects.begin(), objects.end(), 0);
    std::shuffle(actions.begin(), actions.end(), rng);
    std::shuffle(objects.begin(), objects.end(), rng);

    const int max_len = std::max(2, std::min(8, (t - (m - 1)) / m));
    std::vector<int> lengths;
    int used = m - 1;
    for (int i = 0; i < m; ++i) {
      lengths.push_back(uniform_int(std::min(3, max_len), max_len, rng));
      used += lengths.back();
    }
    const int slack = t - used;
    std::vector<int> cuts;
    for (int i = 0; i < m; ++i) cuts.push_back(uniform_int(0, slack, rng));
    std::sort(cuts.begin(), cuts.end());
    std::vector<Span> spans;
    int pos = cuts[0];
    for (int i = 0; i < m; ++i) {
      spans.push_back({pos, pos + lengths[static_cast<std::size_t>(i)] - 1, actions[static_cast<std::size_t>(i)],
                       objects[static_cast<std::size_t>(i)]});
      const int gap = i + 1 < m ? cuts[static_cast<std::size_t>(i + 1)] - cuts[static_cast<std::size_t>(i)] : 0;
      pos = spans.back().end + 2 + gap;
    }

    auto video = std::make_shared<VideoData>();
    char id[32];
    std::snprintf(id, sizeof(id), "syn%05d", next_video++);
    ActivityFeatures& f = video->features;
    f.video_id = id;
    f.stride_seconds = spec.stride_seconds;
    f.duration_seconds = (t - uniform(0.0, 0.5, rng)) * spec.stride_seconds;
    f.features.resize(t, spec.d_v);
    for (Index i = 0; i < f.features.size(); ++i) f.features.data()[i] = spec.noise_std * normal(rng);

    // Windows hosting each moment's object detection; shuffled away from the
    // moment when there is no signal.
    std::vector<std::pair<int, int>> planted;  // window, object
    for (const Span& s : spans) {
      const Eigen::VectorXd dir = (protos.action_dirs[static_cast<std::size_t>(s.action)] +
                                   protos.object_dirs[static_cast<std::size_t>(s.object)])
                                      .normalized();
      const int len = s.end - s.start + 1;
      const int offset = spec.signal_strength > 0.0 ? s.start : uniform_int(0, t - len, rng);
      for (int i = s.start; i <= s.end; ++i) {
        f.features.row(i) += spec.signal_strength * dir.transpose();
      }
      for (int i = 0; i < len; ++i) planted.emplace_back(offset + i, s.object);
    }

    for (int i = 0; i < t; ++i) {
      KeyframeDetections kf;
      kf.video_id = f.video_id;
      kf.frame_index = static_cast<std::int64_t>(i) * spec.frames_per_window +
                       static_cast<std::int64_t>(render_and_select_keyframe(spec.frames_per_window, rng));
      const int n_humans = uniform_int(1, 2, rng);
      for (int h = 0; h < n_humans; ++h) {
        const int label = uniform_int(0, static_cast<int>(humans.size()) - 1, rng);
        kf.detections.push_back(make_detection(humans[static_cast<std::size_t>(label)],
                                               protos.human_features[static_cast<std::size_t>(label)], 0.3, 0.9,
                                               spec.noise_std, rng));
      }
      const int n_clutter = uniform_int(1, 3, rng);
      for (int c = 0; c < n_clutter; ++c) {
        const int label = uniform_int(0, static_cast<int>(kClutterLabels.size()) - 1, rng);
        kf.detections.push_back(make_detection(kClutterLabels[static_cast<std::size_t>(label)],
                                               protos.clutter_features[static_cast<std::size_t>(label)], 0.2, 0.8,
                                               spec.noise_std, rng));
      }
      for (const auto& [window, object] : planted) {
        if (window != i) continue;
        kf.detections.push_back(make_detection(spec.objects[static_cast<std::size_t>(object)],
                                               protos.object_features[static_cast<std::size_t>(object)], 0.6, 1.0,
                                               spec.noise_std, rng));
      }
      video->frames.push_back(categorize_detections(kf.detections, cats, spec.top_n, spec.d_o));
      video->keyframes.push_back(std::move(kf));
    }

    for (const Span& s : spans) {
      AnnotatedSample a;
      a.video_id = f.video_id;
      a.action = spec.actions[static_cast<std::size_t>(s.action)];
      a.object = spec.objects[static_cast<std::size_t>(s.object)];
      a.query = "person " + a.action + " the " + a.object;
      a.duration_s = f.duration_seconds;
      a.t_start_s = s.start * spec.stride_seconds;
      a.t_end_s = std::min((s.end + 1) * spec.stride_seconds, f.duration_seconds);
      a.video = video;
      out.push_back(std::move(a));
    }
    remaining -= m;
  }
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw LoadError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_samples < 1) throw ConfigError("synthetic n_samples must be positive");
  if (t_min < 4 || t_max < t_min) throw ConfigError("synthetic t_range must satisfy 4 <= t_min <= t_max");
  if (d_v < 1 || d_o < 1) throw ConfigError("synthetic feature dims must be positive");
  if (actions.size() < 3 || objects.size() < 3) throw ConfigError("synthetic vocab needs at least 3 actions and 3 objects");
  if (signal_strength < 0.0 || noise_std < 0.0) throw ConfigError("synthetic signal and noise must be non-negative");
  if (!(stride_seconds > 0.0)) throw ConfigError("synthetic stride must be positive");
  if (frames_per_window < 1 || top_n < 1) throw ConfigError("synthetic frames_per_window and top_n must be positive");
  if (val_fraction < 0.0 || val_fraction >= 1.0) throw ConfigError("val_fraction must be in [0, 1)");
}

const std::vector<std::string>& synthetic_human_labels() {
  static const std::vector<std::string> kHumans = {"person", "hand", "shirt"};
  return kHumans;
}

Dataset generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Prototypes protos;
  for (std::size_t i = 0; i < spec.actions.size(); ++i) protos.action_dirs.push_back(random_unit(spec.d_v, rng));
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    protos.object_dirs.push_back(random_unit(spec.d_v, rng));
    protos.object_features.push_back(2.0 * random_unit(spec.d_o, rng));
  }
  for (std::size_t i = 0; i < synthetic_human_labels().size(); ++i) {
    protos.human_features.push_back(2.0 * random_unit(spec.d_o, rng));
  }
  for (std::size_t i = 0; i < kClutterLabels.size(); ++i) {
    protos.clutter_features.push_back(2.0 * random_unit(spec.d_o, rng));
  }

  Dataset d;
  d.fps = spec.frames_per_window / spec.stride_seconds;
  for (const auto& h : synthetic_human_labels()) d.categories.set(h, NodeCategory::human);
  for (const auto& o : spec.objects) d.categories.set(o, NodeCategory::object);
  for (const auto& c : kClutterLabels) d.categories.set(c, NodeCategory::object);

  const int n_val = static_cast<int>(std::lround(spec.n_samples * spec.val_fraction));
  int next_video = 0;
  generate_videos(spec, protos, d.categories, spec.n_samples - n_val, next_video, d.train, rng);
  generate_videos(spec, protos, d.categories, n_val, next_video, d.val, rng);
  return d;
}

void write_dataset(const std::string& dir, const Dataset& data) {
  const fs::path root(dir);
  fs::create_directories(root / "features");
  fs::create_directories(root / "detections");

  std::ofstream ann(root / "annotations.jsonl", std::ios::trunc);
  if (!ann) throw LoadError("cannot write annotations under " + dir);
  nlohmann::json manifest = {{"train", nlohmann::json::array()}, {"val", nlohmann::json::array()}, {"fps", data.fps}};
  std::set<std::string> written;
  for (const auto* split : {&data.train, &data.val}) {
    const char* name = split == &data.train ? "train" : "val";
    for (const AnnotatedSample& s : *split) {
      nlohmann::json rec = {{"video_id", s.video_id},
                            {"query", s.query},
                            {"t_start_s", s.t_start_s},
                            {"t_end_s", s.t_end_s},
                            {"duration_s", s.duration_s}};
      ann << rec.dump() << '\n';
      if (!written.insert(s.video_id).second) continue;
      manifest[name].push_back(s.video_id);
      write_feature_file((root / "features" / (s.video_id + ".feat")).string(), s.video->features);
      write_detection_file((root / "detections" / (s.video_id + ".jsonl")).string(), s.video->keyframes);
    }
  }
  std::ofstream(root / "manifest.json", std::ios::trunc) << manifest.dump(2) << '\n';
  write_category_map((root / "categories.json").string(), data.categories);
}

std::vector<AnnotatedSample> load_annotations(const std::string& path, const DataSources& sources) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open annotations: " + path);
  std::map<std::string, std::shared_ptr<const VideoData>> videos;
  std::vector<AnnotatedSample> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    AnnotatedSample s;
    try {
      const auto rec = nlohmann::json::parse(line);
      s.video_id = rec.at("video_id").get<std::string>();
      s.query = rec.at("query").get<std::string>();
      s.t_start_s = rec.at("t_start_s").get<double>();
      s.t_end_s = rec.at("t_end_s").get<double>();
      s.duration_s = rec.at("duration_s").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": " + e.what(), n);
    }
    if (!(s.t_start_s >= 0.0 && s.t_start_s < s.t_end_s && s.t_end_s <= s.duration_s)) {
      throw ParseError(path + ": moment [" + std::to_string(s.t_start_s) + ", " + std::to_string(s.t_end_s) +
                           "] is not ordered within [0, " + std::to_string(s.duration_s) + "]",
                       n);
    }

    auto it = videos.find(s.video_id);
    if (it == videos.end()) {
      const fs::path feat = fs::path(sources.features_dir) / (s.video_id + ".feat");
      if (!fs::exists(feat)) throw LoadError("no feature file for video '" + s.video_id + "' (" + feat.string() + ")");
      auto video = std::make_shared<VideoData>();
      video->features = read_feature_file(feat.string());
      video->features.validate();
      const Index t = video->features.steps();
      std::vector<std::vector<Detection>> per_window(static_cast<std::size_t>(t));
      const fs::path dets = fs::path(sources.detections_dir) / (s.video_id + ".jsonl");
      if (fs::exists(dets)) {
        video->keyframes = read_detection_file(dets.string());
        for (const KeyframeDetections& kf : video->keyframes) {
          const double seconds = static_cast<double>(kf.frame_index) / sources.fps;
          const auto window = std::clamp<Index>(
              static_cast<Index>(std::floor(seconds / video->features.stride_seconds + 1e-9)), 0, t - 1);
          auto& bucket = per_window[static_cast<std::size_t>(window)];
          bucket.insert(bucket.end(), kf.detections.begin(), kf.detections.end());
        }
      }
      for (const auto& bucket : per_window) {
        video->frames.push_back(categorize_detections(bucket, sources.categories, sources.top_n, sources.d_o));
      }
      it = videos.emplace(s.video_id, std::move(video)).first;
    }
    s.video = it->second;
    out.push_back(std::move(s));
  }
  return out;
}

Dataset load_dataset(const std::string& dir, int top_n, Index d_o) {
  const fs::path root(dir);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text(root / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError((root / "manifest.json").string() + ": " + e.what());
  }
  Dataset d;
  d.fps = manifest.value("fps", 25.0);
  const fs::path cats = root / "categories.json";
  if (fs::exists(cats)) d.categories = read_category_map(cats.string());

  DataSources sources{(root / "features").string(), (root / "detections").string(), d.categories, d.fps, top_n, d_o};
  std::vector<AnnotatedSample> all = load_annotations((root / "annotations.jsonl").string(), sources);

  std::set<std::string> train_ids;
  std::set<std::string> val_ids;
  for (const auto& id : manifest.at("train")) train_ids.insert(id.get<std::string>());
  for (const auto& id : manifest.at("val")) val_ids.insert(id.get<std::string>());
  for (AnnotatedSample& s : all) {
    if (train_ids.count(s.video_id)) {
      d.train.push_back(std::move(s));
    } else if (val_ids.count(s.video_id)) {
      d.val.push_back(std::move(s));
    } else {
      throw LoadError("video '" + s.video_id + "' is in neither split of the manifest");
    }
  }
  return d;
}

}  // namespace stg
