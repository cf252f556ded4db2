#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "poolforge/data/record.hpp"
#include "poolforge/tensor.hpp"

namespace poolforge::data {

inline constexpr std::size_t kDefaultSampledFrames = 256;

// Evenly spaced frame indices floor(i * T / n), i = 0..n-1. Nondecreasing,
// start at 0, repeat frames when T < n.
std::vector<std::size_t> uniform_indices(std::size_t frames, std::size_t n);

// [n, video_dims + audio_dims]: sampled frames with video and audio features
// concatenated per frame, in temporal order.
Tensor uniform_sample(const VideoRecord& record, std::size_t n = kDefaultSampledFrames);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Random holdout of round(fraction * count) items, deterministic in `seed`.
// Both index lists are sorted.
SplitIndices split_indices(std::size_t count, double holdout_fraction, std::uint64_t seed);

std::pair<std::vector<VideoRecord>, std::vector<VideoRecord>> split(std::vector<VideoRecord> corpus,
                                                                    double holdout_fraction = 0.02,
                                                                    std::uint64_t seed = 0);

// Batch member indices for optimizer step `step`: `batch` distinct indices
// in [0, count) (all of them, shuffled, when batch >= count). Depends only
// on (count, batch, seed, step), which makes resumed runs replay the same
// batches.
std::vector<std::size_t> batch_for_step(std::size_t count, std::size_t batch, std::uint64_t seed, std::uint64_t step);

}  // namespace poolforge::data
