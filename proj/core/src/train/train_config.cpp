#include "poolforge/train/train_config.hpp"

#include <cmath>
#include <json.hpp>

#include "../binary_io.hpp"
#include "../models/model_config_json.hpp"
#include "poolforge/error.hpp"

namespace poolforge::train {

namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

// Unsigned integer that rejects negative and fractional JSON numbers.
std::uint64_t count_of(const json& v, const std::string& key) {
  if (!v.is_number_unsigned()) throw ConfigError("config: '" + key + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

double real_of(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config: '" + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("config: learning_rate must be > 0");
  if (batch_size < 2) throw ConfigError("config: batch_size must be >= 2 (batch norm needs two rows)");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
    throw ConfigError("config: holdout_fraction must lie in [0, 1)");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("config: lr_decay must lie in (0, 1]");
  if (lr_decay_steps == 0) throw ConfigError("config: lr_decay_steps must be positive");
  adam.validate();
  model.validate();
}

double TrainConfig::learning_rate_at(std::uint64_t step) const {
  if (lr_decay == 1.0) return learning_rate;
  return learning_rate * std::pow(lr_decay, static_cast<double>(step) / static_cast<double>(lr_decay_steps));
}

TrainConfig TrainConfig::from_json(std::string_view text, const std::filesystem::path& base_dir) {
  TrainConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "learning_rate") c.learning_rate = real_of(v, key);
      else if (key == "batch_size") c.batch_size = count_of(v, key);
      else if (key == "max_steps") c.max_steps = count_of(v, key);
      else if (key == "seed") c.seed = count_of(v, key);
      else if (key == "model") c.model = models::from_json_object(v);
      else if (key == "output_dir") c.output_dir = resolve(base_dir, v.get<std::string>());
      else if (key == "checkpoint_interval") c.checkpoint_interval = count_of(v, key);
      else if (key == "eval_interval") c.eval_interval = count_of(v, key);
      else if (key == "log_interval") c.log_interval = count_of(v, key);
      else if (key == "lr_decay") c.lr_decay = real_of(v, key);
      else if (key == "lr_decay_steps") c.lr_decay_steps = count_of(v, key);
      else if (key == "data") {
        if (!v.is_object()) throw ConfigError("config: 'data' must be an object");
        for (const auto& [dk, dv] : v.items()) {
          if (dk == "train_manifest") c.train_manifest = resolve(base_dir, dv.get<std::string>());
          else if (dk == "holdout_fraction") c.holdout_fraction = real_of(dv, dk);
          else throw ConfigError("config: unknown key 'data." + dk + "'");
        }
      } else if (key == "adam") {
        if (!v.is_object()) throw ConfigError("config: 'adam' must be an object");
        for (const auto& [ak, av] : v.items()) {
          if (ak == "beta1") c.adam.beta1 = real_of(av, ak);
          else if (ak == "beta2") c.adam.beta2 = real_of(av, ak);
          else if (ak == "eps") c.adam.eps = real_of(av, ak);
          else throw ConfigError("config: unknown key 'adam." + ak + "'");
        }
      } else {
        throw ConfigError("config: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.train_manifest.empty()) throw ConfigError("config: data.train_manifest is required");
  c.validate();
  return c;
}

TrainConfig TrainConfig::from_file(const std::filesystem::path& path) {
  std::string text;
  try {
    text = detail::read_file(path.string());
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return from_json(text, path.parent_path());
}

std::string TrainConfig::to_json() const {
  json model_json;
  models::to_json_object(model_json, model);
  json j{{"learning_rate", learning_rate},
         {"batch_size", batch_size},
         {"max_steps", max_steps},
         {"seed", seed},
         {"model", model_json},
         {"data", {{"train_manifest", train_manifest.string()}, {"holdout_fraction", holdout_fraction}}},
         {"output_dir", output_dir.string()},
         {"checkpoint_interval", checkpoint_interval},
         {"eval_interval", eval_interval},
         {"log_interval", log_interval},
         {"lr_decay", lr_decay},
         {"lr_decay_steps", lr_decay_steps},
         {"adam", {{"beta1", adam.beta1}, {"beta2", adam.beta2}, {"eps", adam.eps}}}};
  return j.dump(2);
}

}  // namespace poolforge::train
