#include "poolforge/train/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <thread>

#include "poolforge/data/record_io.hpp"
#include "poolforge/data/sampling.hpp"
#include "poolforge/error.hpp"
#include "poolforge/models/model.hpp"
#include "poolforge/random.hpp"
#include "poolforge/runtime.hpp"

namespace poolforge::train {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974ULL;
constexpr std::size_t kEvalChunk = 16;

const std::string kMomentPrefix = "adam/m/";
const std::string kVariancePrefix = "adam/v/";

Tensor stack(const std::vector<PreparedVideo>& videos, const std::vector<std::size_t>& idx, bool frames) {
  const Tensor& first = frames ? videos[idx[0]].frames : videos[idx[0]].targets;
  Shape shape = first.shape();
  shape.insert(shape.begin(), idx.size());
  std::vector<double> values;
  values.reserve(shape_size(shape));
  for (std::size_t i : idx) {
    auto d = (frames ? videos[i].frames : videos[i].targets).data();
    values.insert(values.end(), d.begin(), d.end());
  }
  return Tensor(shape, std::move(values));
}

std::string checkpoint_name(std::uint64_t step) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "step_%08llu.pfck", static_cast<unsigned long long>(step));
  return buf;
}

}  // namespace

std::vector<PreparedVideo> prepare(const std::vector<data::VideoRecord>& records, const models::ModelConfig& model) {
  std::vector<PreparedVideo> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    r.validate(model.labels);
    if (r.video.cols != model.video_features || r.audio.cols != model.audio_features)
      throw DataError("record '" + r.id + "': feature widths " + std::to_string(r.video.cols) + "+" +
                      std::to_string(r.audio.cols) + " do not match the model's " +
                      std::to_string(model.video_features) + "+" + std::to_string(model.audio_features));
    PreparedVideo p;
    p.id = r.id;
    p.frames = data::uniform_sample(r, model.frames);
    p.targets = Tensor({model.labels});
    for (auto l : r.labels) p.targets.mutable_data()[l] = 1.0;
    p.labels = r.labels;
    out.push_back(std::move(p));
  }
  return out;
}

eval::PredictionSet predict_all(layers::ParamStore& params, const models::ModelConfig& model,
                                const std::vector<PreparedVideo>& videos) {
  if (videos.empty()) throw DataError("evaluate: empty dataset");
  eval::PredictionSet set;
  set.label_count = model.labels;
  set.videos.resize(videos.size());
  const std::size_t chunks = (videos.size() + kEvalChunk - 1) / kEvalChunk;

  auto run_chunk = [&](std::size_t c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = c * kEvalChunk; i < std::min(videos.size(), (c + 1) * kEvalChunk); ++i) idx.push_back(i);
    const Tensor probs = models::predict(params, model, stack(videos, idx, true));
    auto p = probs.data();
    for (std::size_t r = 0; r < idx.size(); ++r) {
      auto& v = set.videos[idx[r]];
      v.id = videos[idx[r]].id;
      v.truth = videos[idx[r]].labels;
      v.top = eval::top_k_predictions(p.subspan(r * model.labels, model.labels));
    }
  };

  const unsigned threads = std::min<std::size_t>(worker_threads(), chunks);
  if (threads <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    return set;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t c = t; c < chunks; c += threads) run_chunk(c);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return set;
}

eval::PredictionSet evaluate_checkpoint(const models::Checkpoint& ckpt, const std::vector<data::VideoRecord>& records) {
  models::check_compatible(ckpt);
  const auto videos = prepare(records, ckpt.model);
  layers::ParamStore params = ckpt.params;
  return predict_all(params, ckpt.model, videos);
}

Trainer::Trainer(TrainConfig config, std::vector<PreparedVideo> train)
    : config_(std::move(config)), train_(std::move(train)) {
  config_.validate();
  if (train_.empty()) throw DataError("train: empty training set");
  params_ = models::init_model(config_.model, mix_seed(config_.seed, kInitStream));
  adam_.options = config_.adam;
}

double Trainer::step() {
  const auto idx = data::batch_for_step(train_.size(), config_.batch_size, config_.seed, adam_.step);
  if (idx.size() < 2) throw DataError("train: need at least 2 training videos for a batch");
  const Tensor frames = stack(train_, idx, true);
  const Tensor targets = stack(train_, idx, false);

  Tape tape;
  models::Binder binder(tape, params_, true);
  const Var probs = models::forward(binder, config_.model, tape.constant(frames));
  const Var loss = models::classification_loss(probs, targets);
  const double value = loss.value().item();
  tape.backward(loss);
  adam_step(params_, binder.gradients(), adam_, config_.learning_rate_at(adam_.step));
  return value;
}

eval::PredictionSet Trainer::predict(const std::vector<PreparedVideo>& videos) {
  return predict_all(params_, config_.model, videos);
}

models::Checkpoint Trainer::checkpoint() const {
  models::Checkpoint ck;
  ck.model = config_.model;
  ck.params = params_;
  for (const auto& [name, t] : adam_.m) ck.optimizer.emplace(kMomentPrefix + name, t);
  for (const auto& [name, t] : adam_.v) ck.optimizer.emplace(kVariancePrefix + name, t);
  nlohmann::json meta{{"step", adam_.step},
                      {"seed", config_.seed},
                      {"learning_rate", config_.learning_rate},
                      {"batch_size", config_.batch_size},
                      {"adam", {{"beta1", adam_.options.beta1}, {"beta2", adam_.options.beta2}, {"eps", adam_.options.eps}}}};
  ck.metadata = meta.dump();
  return ck;
}

void Trainer::resume(const models::Checkpoint& ck) {
  if (!(ck.model == config_.model))
    throw ConfigError("resume: checkpoint model config differs from the training config");
  models::check_compatible(ck);
  const layers::ParamStore fresh = models::init_model(config_.model, 0);

  AdamState state;
  state.options = config_.adam;
  try {
    const auto meta = nlohmann::json::parse(ck.metadata);
    state.step = meta.value("step", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("resume: bad checkpoint metadata: ") + e.what());
  }
  for (const auto& [name, t] : ck.optimizer) {
    std::string param;
    std::map<std::string, Tensor>* dst = nullptr;
    if (name.rfind(kMomentPrefix, 0) == 0) {
      param = name.substr(kMomentPrefix.size());
      dst = &state.m;
    } else if (name.rfind(kVariancePrefix, 0) == 0) {
      param = name.substr(kVariancePrefix.size());
      dst = &state.v;
    } else {
      throw FormatError("resume: unknown optimizer tensor '" + name + "'");
    }
    if (!fresh.has_param(param) || fresh.param(param).shape() != t.shape())
      throw FormatError("resume: optimizer tensor '" + name + "' does not match a parameter");
    dst->emplace(param, t);
  }
  if (state.step > 0 && (state.m.size() != fresh.params().size() || state.v.size() != fresh.params().size()))
    throw FormatError("resume: optimizer state incomplete");
  params_ = ck.params;
  adam_ = std::move(state);
}

TrainResult run_training(const TrainConfig& config, const std::optional<std::filesystem::path>& resume,
                         std::ostream& log) {
  config.validate();
  auto records = data::load_manifest(config.train_manifest);
  std::vector<data::VideoRecord> validation;
  if (config.holdout_fraction > 0.0) {
    auto parts = data::split(std::move(records), config.holdout_fraction, config.seed);
    records = std::move(parts.first);
    validation = std::move(parts.second);
  }
  Trainer trainer(config, prepare(records, config.model));
  const auto holdout = prepare(validation, config.model);
  if (resume) trainer.resume(models::load_checkpoint(*resume));

  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) throw DataError("train: cannot create " + config.output_dir.string() + ": " + ec.message());

  TrainResult result;
  auto emit = [&log](const nlohmann::json& j) { log << j.dump() << '\n' << std::flush; };
  if (trainer.steps_done() == 0) models::save_checkpoint(config.output_dir / checkpoint_name(0), trainer.checkpoint());

  while (trainer.steps_done() < config.max_steps) {
    const double loss = trainer.step();
    const std::uint64_t s = trainer.steps_done();
    result.losses.push_back(loss);
    if (config.log_interval > 0 && s % config.log_interval == 0) emit({{"step", s}, {"loss", loss}});
    if (config.eval_interval > 0 && s % config.eval_interval == 0 && !holdout.empty()) {
      result.last_eval = trainer.evaluate(holdout);
      emit({{"step", s}, {"holdout_gap", result.last_eval->gap}});
    }
    if (config.checkpoint_interval > 0 && s % config.checkpoint_interval == 0)
      models::save_checkpoint(config.output_dir / checkpoint_name(s), trainer.checkpoint());
  }
  result.final_checkpoint = config.output_dir / "final.pfck";
  models::save_checkpoint(result.final_checkpoint, trainer.checkpoint());
  const auto train_report = trainer.evaluate(trainer.train_set());
  emit({{"step", trainer.steps_done()}, {"train_gap", train_report.gap}});
  if (!holdout.empty()) {
    result.last_eval = trainer.evaluate(holdout);
    emit({{"step", trainer.steps_done()}, {"holdout_gap", result.last_eval->gap}});
  }
  return result;
}

}  // namespace poolforge::train
