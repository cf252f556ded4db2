#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace poolforge::eval {

inline constexpr std::size_t kTopK = 20;

struct LabelScore {
  std::uint32_t label = 0;
  double confidence = 0.0;

  bool operator==(const LabelScore&) const = default;
};

struct VideoPredictions {
  std::string id;
  // At most kTopK entries, typically in descending confidence.
  std::vector<LabelScore> top;
  // Ground-truth label set (sorted, unique).
  std::vector<std::uint32_t> truth;
};

struct PredictionSet {
  std::size_t label_count = 0;
  std::vector<VideoPredictions> videos;

  // Throws ContractError on non-finite confidences, labels >= label_count
  // or more than kTopK predictions for a video.
  void validate() const;
};

// The k highest-scoring labels, descending; equal scores keep label order.
std::vector<LabelScore> top_k_predictions(std::span<const double> scores, std::size_t k = kTopK);

enum class GapVariant {
  Standard,  // sum p(i) * (r(i) - r(i-1))
  Literal,   // sum p(i) * r(i); only for comparison, not a metric in [0,1]
};

struct GapResult {
  double value = 0.0;
  std::size_t positives = 0;
  std::size_t predictions = 0;
  // Set when the set has no ground-truth positives; value is then 0.
  bool no_positives = false;
};

// Global average precision over the pooled top-k predictions of all videos.
// Pairs are sorted by confidence, descending; ties keep input order (video
// order, then position within the video's list). Recall is relative to the
// total number of ground-truth labels.
GapResult compute_gap(const PredictionSet& preds, GapVariant variant = GapVariant::Standard);
double gap_at_20(const PredictionSet& preds);

// AP per label over all videos; nullopt for labels without positives.
std::vector<std::optional<double>> per_class_ap(const PredictionSet& preds);

struct EvalReport {
  double gap = 0.0;
  bool no_positives = false;
  std::vector<std::optional<double>> per_class;
  std::size_t videos = 0;
  std::size_t predictions = 0;
  std::size_t positives = 0;

  bool operator==(const EvalReport&) const = default;
  std::string to_json() const;
};

EvalReport make_report(const PredictionSet& preds);

// `video_id label:confidence ...` per line; confidences with round-trip
// precision.
std::string format_predictions(const PredictionSet& preds);
void write_predictions(const std::string& path, const PredictionSet& preds);
// Parses a predictions file; truth sets are left empty.
PredictionSet parse_predictions(const std::string& text, std::size_t label_count);
PredictionSet read_predictions(const std::string& path, std::size_t label_count);

}  // namespace poolforge::eval
