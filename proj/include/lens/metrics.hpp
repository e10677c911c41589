#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "lens/reasoning.hpp"

namespace lens {

enum class Metric { Accuracy, MeanPerClass, VqaAccuracy, RocAuc };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view name);

// One scored example.
struct EvalRecord {
  std::string example_id;
  std::string image_id;
  Answer predicted;
  // gold label for classification / binary tasks; empty for VQA
  std::string label;
  // reference answers for VQA-style scoring
  std::vector<std::string> references;
  // binary ground truth for ROC-AUC tasks
  std::optional<bool> positive;
  // 0/1 or VQA credit for pointwise metrics; P(positive) for ROC-AUC
  double per_example_score = 0.0;
  bool failed = false;
  std::string error;
  std::string prompt_hash;
};

nlohmann::json to_json(const EvalRecord& r);

struct MetricResult {
  Metric metric = Metric::Accuracy;
  double value = 0.0;  // in [0, 1]
  std::size_t n = 0;
  std::string config_fingerprint;
  std::size_t failures = 0;
};

nlohmann::json to_json(const MetricResult& m);

// min(#references matching the normalized prediction / 3, 1)
double vqa_score(std::string_view prediction, std::span<const std::string> references);

// Failed records count as wrong (score 0 / positive_score 0) for every metric.
MetricResult accuracy(std::span<const EvalRecord> records, bool normalize = false);
MetricResult mean_per_class_accuracy(std::span<const EvalRecord> records);
MetricResult vqa_accuracy(std::span<const EvalRecord> records);
MetricResult roc_auc(std::span<const EvalRecord> records);

MetricResult compute_metric(Metric metric, std::span<const EvalRecord> records);

// Rank-based Mann-Whitney AUC over raw scores; ties contribute 1/2.
double roc_auc_scores(std::span<const double> positive_scores, std::span<const double> negative_scores);

}  // namespace lens
