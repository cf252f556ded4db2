#include "poolforge/data/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "poolforge/error.hpp"
#include "poolforge/random.hpp"

namespace poolforge::data {

std::vector<std::size_t> uniform_indices(std::size_t frames, std::size_t n) {
  if (frames == 0) throw DataError("uniform_indices: video has no frames");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = (i * frames) / n;
  return idx;
}

Tensor uniform_sample(const VideoRecord& record, std::size_t n) {
  if (n == 0) throw ContractError("uniform_sample: n must be positive");
  const std::size_t fv = record.video.cols;
  const std::size_t fa = record.audio.cols;
  if (record.audio.rows != record.video.rows) throw DataError("uniform_sample: stream lengths differ");
  const auto idx = uniform_indices(record.frames(), n);
  Tensor out({n, fv + fa});
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < n; ++i) {
    const float* v = record.video.row(idx[i]);
    const float* a = record.audio.row(idx[i]);
    double* dst = o.data() + i * (fv + fa);
    for (std::size_t k = 0; k < fv; ++k) dst[k] = v[k];
    for (std::size_t k = 0; k < fa; ++k) dst[fv + k] = a[k];
  }
  return out;
}

SplitIndices split_indices(std::size_t count, double holdout_fraction, std::uint64_t seed) {
  if (count < 2) throw DataError("split: need at least 2 records, got " + std::to_string(count));
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw ConfigError("split: holdout fraction must lie in (0, 1)");
  const auto holdout = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(count)));
  Rng rng(mix_seed(seed, 0x73706c6974ULL));
  const auto perm = rng.permutation(count);
  SplitIndices s;
  s.validation.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(holdout));
  s.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(holdout), perm.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

std::pair<std::vector<VideoRecord>, std::vector<VideoRecord>> split(std::vector<VideoRecord> corpus,
                                                                    double holdout_fraction, std::uint64_t seed) {
  const SplitIndices s = split_indices(corpus.size(), holdout_fraction, seed);
  std::pair<std::vector<VideoRecord>, std::vector<VideoRecord>> out;
  for (std::size_t i : s.train) out.first.push_back(std::move(corpus[i]));
  for (std::size_t i : s.validation) out.second.push_back(std::move(corpus[i]));
  return out;
}

std::vector<std::size_t> batch_for_step(std::size_t count, std::size_t batch, std::uint64_t seed, std::uint64_t step) {
  if (count == 0) throw DataError("batch_for_step: empty dataset");
  Rng rng(mix_seed(mix_seed(seed, 0x6261746368ULL), step));
  auto perm = rng.permutation(count);
  perm.resize(std::min(batch, count));
  return perm;
}

}  // namespace poolforge::data
