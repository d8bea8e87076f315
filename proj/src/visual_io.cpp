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

#include <fstream>

#include "binary_io.hpp"
#include "json.hpp"
#include "stgloc/visual_frontend.hpp"

namespace stg {

namespace {

constexpr std::uint32_t kFeatureVersion = 1;

}  // namespace

void write_feature_file(const std::string& path, const ActivityFeatures& features) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot open feature file for writing: " + path);
  out.write("FEAT", 4);
  binary::write_uint<std::uint32_t>(out, kFeatureVersion);
  binary::write_string(out, features.video_id);
  binary::write_uint<std::uint64_t>(out, static_cast<std::uint64_t>(features.features.rows()));
  binary::write_uint<std::uint64_t>(out, static_cast<std::uint64_t>(features.features.cols()));
  binary::write_f64(out, features.stride_seconds);
  binary::write_f64(out, features.duration_seconds);
  for (Index i = 0; i < features.features.size(); ++i) binary::write_f64(out, features.features.data()[i]);
  if (!out) throw LoadError("failed writing feature file: " + path);
}

ActivityFeatures read_feature_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open feature file: " + path);
  binary::expect_magic(in, "FEAT", path);
  const auto version = binary::read_uint<std::uint32_t>(in, "version");
  if (version != kFeatureVersion) throw LoadError(path + ": unsupported feature version " + std::to_string(version));
  ActivityFeatures f;
  f.video_id = binary::read_string(in, "video id");
  const auto t = binary::read_uint<std::uint64_t>(in, "t");
  const auto d = binary::read_uint<std::uint64_t>(in, "d_v");
  if (t > (1u << 24) || d > (1u << 20)) throw LoadError(path + ": implausible feature dimensions");
  f.stride_seconds = binary::read_f64(in, "stride");
  f.duration_seconds = binary::read_f64(in, "duration");
  f.features.resize(static_cast<Index>(t), static_cast<Index>(d));
  for (Index i = 0; i < f.features.size(); ++i) f.features.data()[i] = binary::read_f64(in, "features");
  return f;
}

void write_detection_file(const std::string& path, std::span<const KeyframeDetections> frames) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw LoadError("cannot open detection file for writing: " + path);
  for (const KeyframeDetections& f : frames) {
    nlohmann::json dets = nlohmann::json::array();
    for (const Detection& d : f.detections) {
      dets.push_back({{"label", d.label},
                      {"confidence", d.confidence},
                      {"feature", std::vector<double>(d.feature.data(), d.feature.data() + d.feature.size())}});
    }
    nlohmann::json rec = {{"video_id", f.video_id}, {"frame_index", f.frame_index}, {"detections", dets}};
    out << rec.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict) << '\n';
  }
}

std::vector<KeyframeDetections> read_detection_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open detection file: " + path);
  std::vector<KeyframeDetections> frames;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      KeyframeDetections f;
      f.video_id = rec.at("video_id").get<std::string>();
      f.frame_index = rec.at("frame_index").get<std::int64_t>();
      for (const auto& d : rec.at("detections")) {
        Detection det;
        det.label = d.at("label").get<std::string>();
        det.confidence = d.at("confidence").get<double>();
        if (det.confidence < 0.0 || det.confidence > 1.0) throw ParseError("confidence outside [0, 1]", n);
        const auto v = d.at("feature").get<std::vector<double>>();
        det.feature = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
        f.detections.push_back(std::move(det));
      }
      frames.push_back(std::move(f));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ": " + e.what(), n);
    }
  }
  return frames;
}

CategoryMap read_category_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open category map: " + path);
  CategoryMap map;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& [label, value] : j.items()) {
      const auto s = value.get<std::string>();
      if (s == "human") {
        map.set(label, NodeCategory::human);
      } else if (s == "object") {
        map.set(label, NodeCategory::object);
      } else {
        throw LoadError(path + ": label '" + label + "' has category '" + s + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path + ": " + e.what());
  }
  return map;
}

void write_category_map(const std::string& path, const CategoryMap& categories) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [label, c] : categories.labels()) j[label] = c == NodeCategory::human ? "human" : "object";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw LoadError("cannot open category map for writing: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace stg
