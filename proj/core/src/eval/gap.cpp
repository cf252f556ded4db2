#include "poolforge/eval/gap.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "poolforge/error.hpp"

namespace poolforge::eval {

namespace {

struct Scored {
  double confidence;
  bool correct;
};

bool contains(const std::vector<std::uint32_t>& sorted, std::uint32_t label) {
  return std::binary_search(sorted.begin(), sorted.end(), label);
}

double average_precision(std::vector<Scored> pool, std::size_t positives, GapVariant variant) {
  std::stable_sort(pool.begin(), pool.end(),
                   [](const Scored& a, const Scored& b) { return a.confidence > b.confidence; });
  double ap = 0.0, precision_at_hits = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].correct) ++hits;
    const double precision = static_cast<double>(hits) / static_cast<double>(i + 1);
    const double recall = static_cast<double>(hits) / static_cast<double>(positives);
    if (variant == GapVariant::Standard) {
      if (pool[i].correct) precision_at_hits += precision;
    } else {
      ap += precision * recall;
    }
  }
  // Dividing once keeps a perfect ranking at exactly 1.
  return variant == GapVariant::Standard ? precision_at_hits / static_cast<double>(positives) : ap;
}

std::vector<std::uint32_t> sorted_truth(const VideoPredictions& v) {
  std::vector<std::uint32_t> t = v.truth;
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

}  // namespace

void PredictionSet::validate() const {
  for (const auto& v : videos) {
    if (v.top.size() > kTopK)
      throw ContractError("predictions for '" + v.id + "': " + std::to_string(v.top.size()) + " > " +
                          std::to_string(kTopK) + " entries");
    for (const auto& p : v.top) {
      if (!std::isfinite(p.confidence)) throw ContractError("predictions for '" + v.id + "': non-finite confidence");
      if (label_count > 0 && p.label >= label_count)
        throw ContractError("predictions for '" + v.id + "': label " + std::to_string(p.label) + " out of range");
    }
    for (auto l : v.truth)
      if (label_count > 0 && l >= label_count)
        throw ContractError("truth for '" + v.id + "': label " + std::to_string(l) + " out of range");
  }
}

std::vector<LabelScore> top_k_predictions(std::span<const double> scores, std::size_t k) {
  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return scores[a] > scores[b]; });
  order.resize(std::min(k, order.size()));
  std::vector<LabelScore> out;
  out.reserve(order.size());
  for (auto l : order) out.push_back({l, scores[l]});
  return out;
}

GapResult compute_gap(const PredictionSet& preds, GapVariant variant) {
  preds.validate();
  GapResult r;
  std::vector<Scored> pool;
  for (const auto& v : preds.videos) {
    const auto truth = sorted_truth(v);
    r.positives += truth.size();
    for (const auto& p : v.top) pool.push_back({p.confidence, contains(truth, p.label)});
  }
  r.predictions = pool.size();
  if (r.positives == 0) {
    r.no_positives = true;
    return r;
  }
  r.value = average_precision(std::move(pool), r.positives, variant);
  return r;
}

double gap_at_20(const PredictionSet& preds) { return compute_gap(preds).value; }

std::vector<std::optional<double>> per_class_ap(const PredictionSet& preds) {
  preds.validate();
  std::size_t labels = preds.label_count;
  for (const auto& v : preds.videos) {
    for (const auto& p : v.top) labels = std::max<std::size_t>(labels, p.label + 1);
    for (auto l : v.truth) labels = std::max<std::size_t>(labels, l + 1);
  }
  std::vector<std::vector<Scored>> pools(labels);
  std::vector<std::size_t> positives(labels, 0);
  for (const auto& v : preds.videos) {
    const auto truth = sorted_truth(v);
    for (auto l : truth) ++positives[l];
    for (const auto& p : v.top) pools[p.label].push_back({p.confidence, contains(truth, p.label)});
  }
  std::vector<std::optional<double>> out(labels);
  for (std::size_t l = 0; l < labels; ++l)
    if (positives[l] > 0) out[l] = average_precision(std::move(pools[l]), positives[l], GapVariant::Standard);
  return out;
}

EvalReport make_report(const PredictionSet& preds) {
  const GapResult g = compute_gap(preds);
  EvalReport r;
  r.gap = g.value;
  r.no_positives = g.no_positives;
  r.per_class = per_class_ap(preds);
  r.videos = preds.videos.size();
  r.predictions = g.predictions;
  r.positives = g.positives;
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::json pc = nlohmann::json::array();
  for (const auto& ap : per_class) pc.push_back(ap ? nlohmann::json(*ap) : nlohmann::json(nullptr));
  nlohmann::json j{{"gap", gap},
                   {"videos", videos},
                   {"predictions", predictions},
                   {"positives", positives},
                   {"per_class_ap", pc}};
  if (no_positives) j["warning"] = "no ground-truth positives; gap defined as 0";
  return j.dump();
}

}  // namespace poolforge::eval
