#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace poolforge::data {

inline constexpr std::size_t kVideoFeatures = 1024;
inline constexpr std::size_t kAudioFeatures = 128;

// Row-major float32 matrix of per-frame descriptors.
struct FrameMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  FrameMatrix() = default;
  FrameMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0f) {}

  float* row(std::size_t r) { return values.data() + r * cols; }
  const float* row(std::size_t r) const { return values.data() + r * cols; }

  bool operator==(const FrameMatrix&) const = default;
};

struct VideoRecord {
  std::string id;
  // Strictly increasing label indices.
  std::vector<std::uint32_t> labels;
  FrameMatrix video;
  FrameMatrix audio;

  std::size_t frames() const { return video.rows; }
  // Throws DataError unless: T >= 1, both streams share T, nonempty sorted
  // unique labels, and (when label_count > 0) every label < label_count.
  void validate(std::size_t label_count = 0) const;

  bool operator==(const VideoRecord&) const = default;
};

}  // namespace poolforge::data
