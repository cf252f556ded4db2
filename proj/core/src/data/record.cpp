#include "poolforge/data/record.hpp"

#include <cmath>

#include "poolforge/error.hpp"

namespace poolforge::data {

void VideoRecord::validate(std::size_t label_count) const {
  if (video.rows == 0) throw DataError("record '" + id + "': no frames");
  if (audio.rows != video.rows)
    throw DataError("record '" + id + "': video has " + std::to_string(video.rows) + " frames, audio " +
                    std::to_string(audio.rows));
  if (video.cols == 0 || audio.cols == 0) throw DataError("record '" + id + "': zero feature width");
  if (video.values.size() != video.rows * video.cols || audio.values.size() != audio.rows * audio.cols)
    throw DataError("record '" + id + "': frame storage does not match its dimensions");
  for (const auto* m : {&video, &audio})
    for (float v : m->values)
      if (!std::isfinite(v)) throw DataError("record '" + id + "': non-finite frame value");
  if (labels.empty()) throw DataError("record '" + id + "': empty label set");
  for (std::size_t i = 1; i < labels.size(); ++i)
    if (labels[i] <= labels[i - 1]) throw DataError("record '" + id + "': labels not strictly increasing");
  if (label_count > 0 && labels.back() >= label_count)
    throw DataError("record '" + id + "': label " + std::to_string(labels.back()) + " >= label count " +
                    std::to_string(label_count));
}

}  // namespace poolforge::data
