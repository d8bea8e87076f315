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

#include "stgloc/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "CLI11.hpp"
#include "stgloc/errors.hpp"

namespace stg {

namespace {

using Json = nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n\"");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\"");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',' || c == ' ' || c == '[' || c == ']') {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos == v.size()) return i;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected an integer, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<Json(const RunConfig&)> get;
};

#define STG_DOUBLE(name, member)                                                                          \
  Field {                                                                                                 \
    name, [](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_double(k, v); }, \
        [](const RunConfig& c) { return Json(c.member); }                                                 \
  }
#define STG_INT(name, member, type)                                                                                \
  Field {                                                                                                          \
    name, [](RunConfig& c, const std::string& k, const std::string& v) { c.member = static_cast<type>(to_int(k, v)); }, \
        [](const RunConfig& c) { return Json(c.member); }                                                          \
  }
#define STG_STRING(name, member)                                                                       \
  Field {                                                                                              \
    name, [](RunConfig& c, const std::string&, const std::string& v) { c.member = v; },               \
        [](const RunConfig& c) { return Json(c.member); }                                              \
  }
#define STG_BOOL(name, member)                                                                          \
  Field {                                                                                               \
    name, [](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_bool(k, v); }, \
        [](const RunConfig& c) { return Json(c.member); }                                               \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      STG_INT("model.word_dim", model.word_dim, Index),
      STG_INT("model.d_v", model.activity_dim, Index),
      STG_INT("model.d_o", model.detection_dim, Index),
      STG_INT("model.latent", model.latent, Index),
      STG_INT("model.hidden", model.hidden, Index),
      STG_DOUBLE("model.dropout", model.dropout),
      STG_INT("model.top_n", top_n, int),
      Field{"graph.variant",
            [](RunConfig& c, const std::string&, const std::string& v) { c.model.variant = parse_graph_variant(v); },
            [](const RunConfig& c) { return Json(to_string(c.model.variant)); }},
      STG_INT("graph.iterations", model.iterations, int),
      Field{"loss.smoothing",
            [](RunConfig& c, const std::string&, const std::string& v) {
              c.loss.smoothing = parse_target_smoothing(v);
            },
            [](const RunConfig& c) { return Json(to_string(c.loss.smoothing)); }},
      STG_DOUBLE("loss.sigma_pos", loss.sigma_positions),
      STG_BOOL("loss.spatial", loss.spatial),
      STG_DOUBLE("optimizer.lr", optimizer.learning_rate),
      STG_DOUBLE("optimizer.weight_decay", optimizer.weight_decay),
      STG_DOUBLE("optimizer.beta1", optimizer.beta1),
      STG_DOUBLE("optimizer.beta2", optimizer.beta2),
      STG_DOUBLE("optimizer.eps", optimizer.epsilon),
      STG_DOUBLE("data.fps", fps),
      STG_INT("train.batch_size", batch_size, int),
      STG_INT("train.epochs", epochs, int),
      STG_INT("train.seed", seed, std::uint64_t),
      STG_INT("train.eval_every", eval_every, int),
      Field{"eval.alphas",
            [](RunConfig& c, const std::string& k, const std::string& v) {
              c.alphas.clear();
              for (const auto& a : split_list(v)) c.alphas.push_back(to_double(k, a));
            },
            [](const RunConfig& c) { return Json(c.alphas); }},
      STG_STRING("eval.split", eval_split),
      STG_BOOL("eval.swap_degenerate", swap_degenerate),
      STG_INT("synth.n_samples", synth.n_samples, int),
      STG_DOUBLE("synth.val_fraction", synth.val_fraction),
      STG_INT("synth.t_min", synth.t_min, int),
      STG_INT("synth.t_max", synth.t_max, int),
      STG_DOUBLE("synth.signal_strength", synth.signal_strength),
      STG_DOUBLE("synth.noise_std", synth.noise_std),
      STG_DOUBLE("synth.stride", synth.stride_seconds),
      STG_INT("synth.frames_per_window", synth.frames_per_window, int),
      STG_INT("synth.seed", synth.seed, std::uint64_t),
      Field{"ablate.iterations",
            [](RunConfig& c, const std::string& k, const std::string& v) {
              c.ablate_iterations.clear();
              for (const auto& a : split_list(v)) c.ablate_iterations.push_back(static_cast<int>(to_int(k, a)));
            },
            [](const RunConfig& c) { return Json(c.ablate_iterations); }},
      Field{"ablate.variants",
            [](RunConfig& c, const std::string&, const std::string& v) {
              c.ablate_variants.clear();
              for (const auto& a : split_list(v)) c.ablate_variants.push_back(parse_graph_variant(a));
            },
            [](const RunConfig& c) {
              Json j = Json::array();
              for (GraphVariant v : c.ablate_variants) j.push_back(to_string(v));
              return j;
            }},
      STG_STRING("paths.data", paths.data),
      STG_STRING("paths.annotations", paths.annotations),
      STG_STRING("paths.val_annotations", paths.val_annotations),
      STG_STRING("paths.features", paths.features),
      STG_STRING("paths.detections", paths.detections),
      STG_STRING("paths.categories", paths.categories),
      STG_STRING("paths.embeddings", paths.embeddings),
      STG_STRING("paths.checkpoint", paths.checkpoint),
      STG_STRING("paths.report", paths.report),
      STG_STRING("paths.predictions", paths.predictions),
  };
  return kFields;
}

#undef STG_DOUBLE
#undef STG_INT
#undef STG_STRING
#undef STG_BOOL

std::string ini_value(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (const auto& e : v) s += (s.empty() ? "" : ",") + ini_value(e);
    return s;
  }
  return v.dump();
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  if (!(fps > 0.0)) throw ConfigError("data.fps must be > 0");
  if (top_n < 1) throw ConfigError("model.top_n must be >= 1");
  if (!(optimizer.learning_rate > 0.0)) throw ConfigError("optimizer.lr must be > 0");
  if (optimizer.weight_decay < 0.0) throw ConfigError("optimizer.weight_decay must be >= 0");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0 && optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) {
    throw ConfigError("optimizer betas must be in [0, 1)");
  }
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (eval_every < 1) throw ConfigError("train.eval_every must be >= 1");
  if (!(loss.sigma_positions > 0.0)) throw ConfigError("loss.sigma_pos must be > 0");
  if (alphas.empty()) throw ConfigError("eval.alphas must not be empty");
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("eval.alphas must lie in [0, 1]");
  }
  if (eval_split != "train" && eval_split != "val") throw ConfigError("eval.split must be train or val");
  for (int n : ablate_iterations) {
    if (n < 0) throw ConfigError("ablate.iterations must be >= 0");
  }
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (f.key == key) {
      f.set(config, key, trim(value));
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void apply_ini(RunConfig& config, const std::string& text) {
  std::istringstream in(text);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const CLI::ConfigItem& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    std::string value;
    for (const auto& v : item.inputs) value += (value.empty() ? "" : ",") + v;
    std::string key = item.fullname();
    if (item.parents.empty() && key == "seed") key = "train.seed";
    set_config_value(config, key, value);
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  RunConfig config;
  apply_ini(config, text.str());
  return config;
}

std::string to_ini(const RunConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const Field& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string s = f.key.substr(0, dot);
    if (s != section) {
      out << (section.empty() ? "" : "\n") << '[' << s << "]\n";
      section = s;
    }
    out << f.key.substr(dot + 1) << " = " << ini_value(f.get(config)) << '\n';
  }
  return out.str();
}

nlohmann::json to_json(const RunConfig& config) {
  Json j = Json::object();
  for (const Field& f : fields()) {
    const auto dot = f.key.find('.');
    j[f.key.substr(0, dot)][f.key.substr(dot + 1)] = f.get(config);
  }
  return j;
}

}  // namespace stg
