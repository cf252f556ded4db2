#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "poolforge/data/record.hpp"
#include "poolforge/eval/gap.hpp"
#include "poolforge/layers/params.hpp"
#include "poolforge/models/checkpoint.hpp"
#include "poolforge/train/adam.hpp"
#include "poolforge/train/train_config.hpp"

namespace poolforge::train {

// Uniformly sampled frames [N, D] and multi-hot targets [L] of one video.
struct PreparedVideo {
  std::string id;
  Tensor frames;
  Tensor targets;
  std::vector<std::uint32_t> labels;
};

// Throws DataError when a record does not fit the model (feature widths,
// label range) or is otherwise invalid.
std::vector<PreparedVideo> prepare(const std::vector<data::VideoRecord>& records, const models::ModelConfig& model);

// Forward over `videos` in inference mode. Parallel across videos unless in
// verification mode; the result does not depend on the thread count.
eval::PredictionSet predict_all(layers::ParamStore& params, const models::ModelConfig& model,
                                const std::vector<PreparedVideo>& videos);

// Loads a checkpoint, evaluates it on every record of the manifest and
// returns the predictions with ground truth attached.
eval::PredictionSet evaluate_checkpoint(const models::Checkpoint& ckpt, const std::vector<data::VideoRecord>& records);

// Owns the parameters and optimizer state of one run. Step k always trains on
// the same batch for a given seed, so a resumed trainer continues exactly as
// an uninterrupted one would.
class Trainer {
 public:
  Trainer(TrainConfig config, std::vector<PreparedVideo> train);

  // One optimizer step; returns the batch loss before the update.
  double step();
  std::uint64_t steps_done() const { return adam_.step; }

  eval::PredictionSet predict(const std::vector<PreparedVideo>& videos);
  eval::EvalReport evaluate(const std::vector<PreparedVideo>& videos) { return eval::make_report(predict(videos)); }

  models::Checkpoint checkpoint() const;
  // Throws ConfigError when the checkpoint's model config or tensors do not
  // match this run, and FormatError on malformed optimizer state.
  void resume(const models::Checkpoint& ckpt);

  layers::ParamStore& params() { return params_; }
  const TrainConfig& config() const { return config_; }
  const std::vector<PreparedVideo>& train_set() const { return train_; }

 private:
  TrainConfig config_;
  std::vector<PreparedVideo> train_;
  layers::ParamStore params_;
  AdamState adam_;
};

struct TrainResult {
  std::vector<double> losses;
  std::filesystem::path final_checkpoint;
  std::optional<eval::EvalReport> last_eval;
};

// The `train` command: reads the manifest, splits, trains to max_steps,
// logging JSON lines to `log`. With max_steps = 0 only the initial
// checkpoint is written.
TrainResult run_training(const TrainConfig& config, const std::optional<std::filesystem::path>& resume,
                         std::ostream& log);

}  // namespace poolforge::train
