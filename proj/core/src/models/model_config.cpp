#include "poolforge/models/model_config.hpp"

#include <json.hpp>

#include "model_config_json.hpp"
#include "poolforge/error.hpp"

namespace poolforge::models {

std::string_view architecture_tag(Architecture arch) {
  switch (arch) {
    case Architecture::kBaselineNetVlad:
      return "baseline_netvlad";
    case Architecture::kAttentionEnhanced:
      return "attention_enhanced";
    case Architecture::kAttentionNetVlad:
      return "attention_netvlad";
    case Architecture::kSecondOrder:
      return "second_order_fa";
  }
  return "unknown";
}

Architecture parse_architecture(std::string_view tag) {
  for (auto a : {Architecture::kBaselineNetVlad, Architecture::kAttentionEnhanced, Architecture::kAttentionNetVlad,
                 Architecture::kSecondOrder})
    if (architecture_tag(a) == tag) return a;
  throw ConfigError("unknown architecture tag '" + std::string(tag) + "'");
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("model: ") + name + " must be positive");
  };
  positive(video_features, "video_features");
  positive(audio_features, "audio_features");
  positive(clusters, "clusters");
  positive(hidden, "hidden");
  positive(heads, "heads");
  positive(projected, "projected");
  positive(experts, "experts");
  positive(labels, "labels");
  positive(frames, "frames");
  if (!(temperature > 0.0)) throw ConfigError("model: temperature must be positive");
  if (!(bn_eps > 0.0) || !(bn_momentum >= 0.0 && bn_momentum < 1.0))
    throw ConfigError("model: batch-norm momentum must be in [0, 1) and eps positive");
  if (architecture == Architecture::kAttentionEnhanced || architecture == Architecture::kAttentionNetVlad) {
    if (video_features % heads != 0 || audio_features % heads != 0)
      throw ConfigError("model: feature widths must be divisible by " + std::to_string(heads) + " heads");
  }
  if (architecture == Architecture::kSecondOrder) {
    if (projected >= video_features || projected >= audio_features)
      throw ConfigError("model: projected width " + std::to_string(projected) +
                        " must be below both feature widths");
  }
}

void to_json_object(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"architecture", std::string(architecture_tag(c.architecture))},
                     {"video_features", c.video_features},
                     {"audio_features", c.audio_features},
                     {"clusters", c.clusters},
                     {"hidden", c.hidden},
                     {"heads", c.heads},
                     {"projected", c.projected},
                     {"experts", c.experts},
                     {"labels", c.labels},
                     {"frames", c.frames},
                     {"temperature", c.temperature},
                     {"inner_batch_norm", c.inner_batch_norm},
                     {"bn_momentum", c.bn_momentum},
                     {"bn_eps", c.bn_eps}};
}

ModelConfig from_json_object(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model: expected an object");
  ModelConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "architecture")
        c.architecture = parse_architecture(value.get<std::string>());
      else if (key == "video_features")
        c.video_features = value.get<std::size_t>();
      else if (key == "audio_features")
        c.audio_features = value.get<std::size_t>();
      else if (key == "clusters")
        c.clusters = value.get<std::size_t>();
      else if (key == "hidden")
        c.hidden = value.get<std::size_t>();
      else if (key == "heads")
        c.heads = value.get<std::size_t>();
      else if (key == "projected")
        c.projected = value.get<std::size_t>();
      else if (key == "experts")
        c.experts = value.get<std::size_t>();
      else if (key == "labels")
        c.labels = value.get<std::size_t>();
      else if (key == "frames")
        c.frames = value.get<std::size_t>();
      else if (key == "temperature")
        c.temperature = value.get<double>();
      else if (key == "inner_batch_norm")
        c.inner_batch_norm = value.get<bool>();
      else if (key == "bn_momentum")
        c.bn_momentum = value.get<double>();
      else if (key == "bn_eps")
        c.bn_eps = value.get<double>();
      else
        throw ConfigError("model: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  c.validate();
  return c;
}

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  to_json_object(j, *this);
  return j.dump();
}

ModelConfig ModelConfig::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return from_json_object(j);
}

}  // namespace poolforge::models
