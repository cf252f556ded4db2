#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace poolforge::models {

enum class Architecture {
  kBaselineNetVlad,
  kAttentionEnhanced,
  kAttentionNetVlad,
  kSecondOrder,
};

// Tags: baseline_netvlad, attention_enhanced, attention_netvlad, second_order_fa.
std::string_view architecture_tag(Architecture arch);
Architecture parse_architecture(std::string_view tag);

struct ModelConfig {
  Architecture architecture = Architecture::kBaselineNetVlad;
  std::size_t video_features = 1024;
  std::size_t audio_features = 128;
  std::size_t clusters = 8;
  std::size_t hidden = 1024;
  std::size_t heads = 8;
  // Projected width F' of the second-order block; applies to both streams.
  std::size_t projected = 16;
  std::size_t experts = 2;
  std::size_t labels = 10;
  std::size_t frames = 32;
  double temperature = 1.0;
  bool inner_batch_norm = true;
  double bn_momentum = 0.99;
  double bn_eps = 1e-5;

  std::size_t input_width() const { return video_features + audio_features; }
  void validate() const;

  // JSON object text; the same keys are accepted under "model" in training
  // configs and stored in checkpoint headers.
  std::string to_json() const;
  static ModelConfig from_json(std::string_view text);

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace poolforge::models
