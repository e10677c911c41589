#include "lens/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "lens/error.hpp"
#include "lens/normalize.hpp"
#include "lens/text.hpp"

namespace lens {

using nlohmann::json;

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Accuracy: return "accuracy";
    case Metric::MeanPerClass: return "mean-per-class";
    case Metric::VqaAccuracy: return "vqa-accuracy";
    case Metric::RocAuc: return "roc-auc";
  }
  return "?";
}

Metric parse_metric(std::string_view name) {
  const auto n = text::canonicalize(name);
  if (n == "accuracy") return Metric::Accuracy;
  if (n == "mean-per-class" || n == "mean per class") return Metric::MeanPerClass;
  if (n == "vqa-accuracy" || n == "vqa accuracy") return Metric::VqaAccuracy;
  if (n == "roc-auc" || n == "roc auc") return Metric::RocAuc;
  throw Error(ErrorCode::ConfigError, "unknown metric: " + std::string(name));
}

json to_json(const EvalRecord& r) {
  json j = {{"example_id", r.example_id},
            {"image_id", r.image_id},
            {"predicted", r.predicted.text},
            {"score", r.per_example_score},
            {"failed", r.failed},
            {"prompt_hash", r.prompt_hash}};
  if (!r.label.empty()) j["label"] = r.label;
  if (!r.references.empty()) j["references"] = r.references;
  if (r.positive) j["positive"] = *r.positive;
  if (r.predicted.candidate_scores) {
    json scores = json::array();
    for (const auto& [c, s] : *r.predicted.candidate_scores) scores.push_back({c, s});
    j["candidate_scores"] = scores;
  }
  if (r.predicted.positive_score) j["positive_score"] = *r.predicted.positive_score;
  if (r.predicted.generation_failed) j["generation_failed"] = true;
  if (r.predicted.used_fallback) j["used_fallback"] = true;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

json to_json(const MetricResult& m) {
  return {{"metric", to_string(m.metric)},
          {"value", m.value},
          {"n", m.n},
          {"failures", m.failures},
          {"config_fingerprint", m.config_fingerprint}};
}

namespace {

void require_records(std::span<const EvalRecord> records) {
  require(!records.empty(), ErrorCode::EmptyRecordSet, "no records to score");
}

std::size_t count_failures(std::span<const EvalRecord> records) {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const auto& r) { return r.failed; }));
}

bool is_correct(const EvalRecord& r, bool normalize) {
  if (r.failed) return false;
  if (normalize) return normalize_answer(r.predicted.text) == normalize_answer(r.label);
  return r.predicted.text == r.label;
}

MetricResult make(Metric m, double value, std::span<const EvalRecord> records) {
  MetricResult res;
  res.metric = m;
  res.value = value;
  res.n = records.size();
  res.failures = count_failures(records);
  return res;
}

}  // namespace

double vqa_score(std::string_view prediction, std::span<const std::string> references) {
  require(!references.empty(), ErrorCode::InvalidArgument, "VQA scoring needs at least one reference answer");
  const auto pred = normalize_answer(prediction);
  std::size_t matches = 0;
  for (const auto& ref : references) {
    if (normalize_answer(ref) == pred) ++matches;
  }
  return std::min(static_cast<double>(matches) / 3.0, 1.0);
}

MetricResult accuracy(std::span<const EvalRecord> records, bool normalize) {
  require_records(records);
  std::size_t correct = 0;
  for (const auto& r : records) {
    require(!r.label.empty(), ErrorCode::InvalidArgument, "record " + r.example_id + " has no gold label");
    if (is_correct(r, normalize)) ++correct;
  }
  return make(Metric::Accuracy, static_cast<double>(correct) / static_cast<double>(records.size()), records);
}

MetricResult mean_per_class_accuracy(std::span<const EvalRecord> records) {
  require_records(records);
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_class;  // label -> (correct, total)
  for (const auto& r : records) {
    require(!r.label.empty(), ErrorCode::InvalidArgument, "record " + r.example_id + " has no gold label");
    auto& [correct, total] = per_class[r.label];
    ++total;
    if (is_correct(r, false)) ++correct;
  }
  double sum = 0.0;
  for (const auto& [label, counts] : per_class) {
    sum += static_cast<double>(counts.first) / static_cast<double>(counts.second);
  }
  return make(Metric::MeanPerClass, sum / static_cast<double>(per_class.size()), records);
}

MetricResult vqa_accuracy(std::span<const EvalRecord> records) {
  require_records(records);
  double sum = 0.0;
  for (const auto& r : records) {
    const double s = vqa_score(r.predicted.text, r.references);
    if (!r.failed) sum += s;
  }
  return make(Metric::VqaAccuracy, sum / static_cast<double>(records.size()), records);
}

double roc_auc_scores(std::span<const double> positive_scores, std::span<const double> negative_scores) {
  require(!positive_scores.empty() && !negative_scores.empty(), ErrorCode::SingleClassSet,
          "ROC-AUC needs both positive and negative examples");
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> items;
  items.reserve(positive_scores.size() + negative_scores.size());
  for (double s : positive_scores) items.push_back({s, true});
  for (double s : negative_scores) items.push_back({s, false});
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score < b.score; });
  // average 1-based ranks over tie groups
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    while (j < items.size() && items[j].score == items[i].score) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) {
      if (items[t].positive) positive_rank_sum += avg_rank;
    }
    i = j;
  }
  const auto np = static_cast<double>(positive_scores.size());
  const auto nn = static_cast<double>(negative_scores.size());
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

MetricResult roc_auc(std::span<const EvalRecord> records) {
  require_records(records);
  std::vector<double> pos;
  std::vector<double> neg;
  for (const auto& r : records) {
    require(r.positive.has_value(), ErrorCode::InvalidArgument, "record " + r.example_id + " has no binary label");
    const double s = r.failed ? 0.0 : r.predicted.positive_score.value_or(0.0);
    (*r.positive ? pos : neg).push_back(s);
  }
  return make(Metric::RocAuc, roc_auc_scores(pos, neg), records);
}

MetricResult compute_metric(Metric metric, std::span<const EvalRecord> records) {
  switch (metric) {
    case Metric::Accuracy: return accuracy(records);
    case Metric::MeanPerClass: return mean_per_class_accuracy(records);
    case Metric::VqaAccuracy: return vqa_accuracy(records);
    case Metric::RocAuc: return roc_auc(records);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown metric");
}

}  // namespace lens
