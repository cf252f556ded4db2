#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "poolforge/data/record.hpp"

namespace poolforge::data {

// Parameters of the synthetic corpus used in place of a real video dataset.
// Every label owns one Gaussian component per stream (mean, isotropic
// spread); a video's frames are drawn from the equal-weight mixture of its
// labels' components plus isotropic noise.
struct SyntheticSpec {
  std::size_t labels = 10;
  std::size_t video_features = kVideoFeatures;
  std::size_t audio_features = kAudioFeatures;
  std::size_t min_frames = 32;
  std::size_t max_frames = 128;
  std::size_t min_labels_per_video = 1;
  std::size_t max_labels_per_video = 3;
  // Standard deviation of the label means around 0.
  double mean_scale = 1.0;
  // Label spreads are drawn uniformly from [0.5, 1.5] * spread.
  double spread = 0.5;
  double noise = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
  static SyntheticSpec from_json(std::string_view text);
  std::string to_json() const;
};

// Component parameters implied by a spec.
struct LabelMixture {
  std::vector<std::vector<float>> video_means;  // [L][Fv]
  std::vector<std::vector<float>> audio_means;  // [L][Fa]
  std::vector<double> spreads;                  // [L]
};

LabelMixture label_mixture(const SyntheticSpec& spec);

// Video i depends only on (spec, i), so corpora can be produced as a stream
// or in parallel and always agree.
class CorpusGenerator {
 public:
  explicit CorpusGenerator(SyntheticSpec spec);

  VideoRecord generate(std::uint64_t index) const;
  VideoRecord next() { return generate(next_index_++); }
  const LabelMixture& mixture() const { return mixture_; }

 private:
  SyntheticSpec spec_;
  LabelMixture mixture_;
  std::uint64_t next_index_ = 0;
};

std::vector<VideoRecord> generate_corpus(const SyntheticSpec& spec, std::size_t count);

}  // namespace poolforge::data
