#include <vector>

#include "poolforge/models/model.hpp"
#include "poolforge/random.hpp"

namespace poolforge::models {

ModelConfig toy_config(Architecture arch) {
  ModelConfig c;
  c.architecture = arch;
  c.video_features = 6;
  c.audio_features = 4;
  c.clusters = 2;
  c.hidden = 6;
  c.heads = 2;
  c.projected = 2;
  c.experts = 2;
  c.labels = 3;
  c.frames = 4;
  return c;
}

GradCheckReport grad_check_model(const ModelConfig& config, std::uint64_t seed, const GradCheckOptions& options,
                                 std::size_t batch) {
  config.validate();
  const ParamStore base = init_model(config, seed);
  Rng rng(mix_seed(seed, 0x6763ULL));
  Tensor frames = rng.normal_tensor({batch, config.frames, config.input_width()}, 1.0);
  Tensor targets({batch, config.labels});
  for (double& t : targets.mutable_data()) t = rng.uniform() < 0.5 ? 1.0 : 0.0;

  std::vector<std::string> names;
  std::vector<Tensor> inputs{frames};
  for (const auto& [name, t] : base.params()) {
    names.push_back(name);
    inputs.push_back(t);
  }
  auto loss = [&](Tape& tape, std::span<const Var> in) {
    // Fresh buffers per evaluation: training mode updates running statistics.
    ParamStore store = base;
    Binder binder(tape, store, true);
    for (std::size_t i = 0; i < names.size(); ++i) binder.bind(names[i], in[i + 1]);
    return classification_loss(forward(binder, config, in[0]), targets);
  };
  return grad_check(loss, inputs, options);
}

}  // namespace poolforge::models
