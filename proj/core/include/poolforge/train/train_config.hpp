#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "poolforge/models/model_config.hpp"
#include "poolforge/train/adam.hpp"

namespace poolforge::train {

// JSON training configuration. Unknown keys are rejected. Example:
//
//   {
//     "learning_rate": 0.0003, "batch_size": 8, "max_steps": 2000, "seed": 1,
//     "model": {"architecture": "baseline_netvlad", "labels": 10},
//     "data": {"train_manifest": "corpus/manifest.txt", "holdout_fraction": 0.02},
//     "output_dir": "run", "checkpoint_interval": 500, "eval_interval": 100,
//     "log_interval": 10
//   }
struct TrainConfig {
  double learning_rate = 3e-4;
  std::size_t batch_size = 8;
  std::uint64_t max_steps = 2000;
  std::uint64_t seed = 0;
  models::ModelConfig model;
  std::filesystem::path train_manifest;
  // 0 disables the holdout split (the whole corpus is trained on).
  double holdout_fraction = 0.02;
  std::filesystem::path output_dir = "run";
  // Intervals in steps; 0 disables. The final checkpoint is always written.
  std::uint64_t checkpoint_interval = 0;
  std::uint64_t eval_interval = 0;
  std::uint64_t log_interval = 10;
  // lr * lr_decay^(step / lr_decay_steps); 1.0 keeps the rate constant.
  double lr_decay = 1.0;
  std::uint64_t lr_decay_steps = 1000;
  AdamOptions adam;

  void validate() const;
  double learning_rate_at(std::uint64_t step) const;

  // Relative paths in the text resolve against `base_dir`.
  static TrainConfig from_json(std::string_view text, const std::filesystem::path& base_dir = {});
  static TrainConfig from_file(const std::filesystem::path& path);
  std::string to_json() const;
};

}  // namespace poolforge::train
