#include "poolforge/data/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>

#include "poolforge/error.hpp"
#include "poolforge/random.hpp"

namespace poolforge::data {

namespace {
constexpr std::uint64_t kMixtureStream = 0x6d69787475726573ULL;
constexpr std::uint64_t kVideoStream = 0x766964656f737472ULL;
}  // namespace

void SyntheticSpec::validate() const {
  if (labels == 0) throw ConfigError("synthetic: labels must be positive");
  if (video_features == 0 || audio_features == 0) throw ConfigError("synthetic: feature widths must be positive");
  if (min_frames == 0 || min_frames > max_frames) throw ConfigError("synthetic: need 1 <= min_frames <= max_frames");
  if (min_labels_per_video == 0 || min_labels_per_video > max_labels_per_video || max_labels_per_video > labels)
    throw ConfigError("synthetic: need 1 <= min_labels_per_video <= max_labels_per_video <= labels");
  if (!(mean_scale >= 0.0) || !(spread >= 0.0) || !(noise >= 0.0))
    throw ConfigError("synthetic: mean_scale, spread and noise must be non-negative");
}

SyntheticSpec SyntheticSpec::from_json(std::string_view text) {
  SyntheticSpec s;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw ConfigError("synthetic: expected a JSON object");
    for (const auto& [key, v] : j.items()) {
      if (key == "labels") s.labels = v.get<std::size_t>();
      else if (key == "video_features") s.video_features = v.get<std::size_t>();
      else if (key == "audio_features") s.audio_features = v.get<std::size_t>();
      else if (key == "min_frames") s.min_frames = v.get<std::size_t>();
      else if (key == "max_frames") s.max_frames = v.get<std::size_t>();
      else if (key == "min_labels_per_video") s.min_labels_per_video = v.get<std::size_t>();
      else if (key == "max_labels_per_video") s.max_labels_per_video = v.get<std::size_t>();
      else if (key == "mean_scale") s.mean_scale = v.get<double>();
      else if (key == "spread") s.spread = v.get<double>();
      else if (key == "noise") s.noise = v.get<double>();
      else if (key == "seed") s.seed = v.get<std::uint64_t>();
      else throw ConfigError("synthetic: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synthetic: ") + e.what());
  }
  s.validate();
  return s;
}

std::string SyntheticSpec::to_json() const {
  return nlohmann::json{{"labels", labels},
                        {"video_features", video_features},
                        {"audio_features", audio_features},
                        {"min_frames", min_frames},
                        {"max_frames", max_frames},
                        {"min_labels_per_video", min_labels_per_video},
                        {"max_labels_per_video", max_labels_per_video},
                        {"mean_scale", mean_scale},
                        {"spread", spread},
                        {"noise", noise},
                        {"seed", seed}}
      .dump(2);
}

LabelMixture label_mixture(const SyntheticSpec& spec) {
  spec.validate();
  LabelMixture m;
  Rng rng(mix_seed(spec.seed, kMixtureStream));
  for (std::size_t l = 0; l < spec.labels; ++l) {
    std::vector<float> v(spec.video_features);
    std::vector<float> a(spec.audio_features);
    for (float& x : v) x = static_cast<float>(spec.mean_scale * rng.normal());
    for (float& x : a) x = static_cast<float>(spec.mean_scale * rng.normal());
    m.video_means.push_back(std::move(v));
    m.audio_means.push_back(std::move(a));
    m.spreads.push_back(spec.spread * rng.uniform(0.5, 1.5));
  }
  return m;
}

CorpusGenerator::CorpusGenerator(SyntheticSpec spec) : spec_(spec), mixture_(label_mixture(spec)) {}

VideoRecord CorpusGenerator::generate(std::uint64_t index) const {
  Rng rng(mix_seed(mix_seed(spec_.seed, kVideoStream), index));
  VideoRecord rec;
  char id[32];
  std::snprintf(id, sizeof id, "vid%06llu", static_cast<unsigned long long>(index));
  rec.id = id;

  const std::size_t label_span = spec_.max_labels_per_video - spec_.min_labels_per_video + 1;
  const std::size_t count = spec_.min_labels_per_video + rng.below(label_span);
  const auto order = rng.permutation(spec_.labels);
  for (std::size_t i = 0; i < count; ++i) rec.labels.push_back(static_cast<std::uint32_t>(order[i]));
  std::sort(rec.labels.begin(), rec.labels.end());

  const std::size_t frames = spec_.min_frames + rng.below(spec_.max_frames - spec_.min_frames + 1);
  rec.video = FrameMatrix(frames, spec_.video_features);
  rec.audio = FrameMatrix(frames, spec_.audio_features);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::uint32_t label = rec.labels[rng.below(rec.labels.size())];
    const double s = mixture_.spreads[label];
    auto fill = [&](float* row, const std::vector<float>& mu) {
      for (std::size_t k = 0; k < mu.size(); ++k) {
        double v = mu[k] + s * rng.normal();
        if (spec_.noise > 0.0) v += spec_.noise * rng.normal();
        row[k] = static_cast<float>(v);
      }
    };
    fill(rec.video.row(t), mixture_.video_means[label]);
    fill(rec.audio.row(t), mixture_.audio_means[label]);
  }
  return rec;
}

std::vector<VideoRecord> generate_corpus(const SyntheticSpec& spec, std::size_t count) {
  CorpusGenerator gen(spec);
  std::vector<VideoRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(gen.next());
  return out;
}

}  // namespace poolforge::data
