#include "lens/reference_data.hpp"

#include <algorithm>

#include "lens/error.hpp"

namespace lens::reference {

const std::vector<RecognitionRow>& zero_shot_recognition() {
  static const std::vector<RecognitionRow> rows = {
      {"Pets", {90.1, 92.0, 92.6, 92.4, 87.8, 90.1}},
      {"DTD", {47.6, 49.0, 57.8, 58.5, 50.7, 53.7}},
      {"Aircraft", {31.1, 30.1, 38.5, 38.5, 29.5, 38.0}},
      {"Caltech101", {71.3, 71.9, 75.4, 75.5, 70.4, 75.6}},
      {"Flowers102", {73.0, 76.4, 76.6, 76.7, 75.5, 74.9}},
      {"Food101", {90.9, 90.9, 90.8, 92.1, 89.8, 92.6}},
      {"Cars", {75.9, 76.3, 92.9, 93.6, 75.9, 93.4}},
      {"Cifar10", {95.0, 94.9, 95.7, 95.5, 95.0, 95.6}},
      {"ImageNet-1k", {69.6, 69.2, 73.0, 73.1, 70.7, 75.6}},
  };
  return rows;
}

const std::vector<VisionLanguageRow>& zero_shot_vision_language() {
  static const std::vector<VisionLanguageRow> rows = {
      {"Kosmos-1", "1.6B", {51.0, std::nullopt, 67.1, 63.9, std::nullopt}},
      {"Flamingo-3B", "1.4B", {49.2, 41.2, std::nullopt, std::nullopt, 53.7}},
      {"Flamingo-9B", "1.8B", {51.8, 44.7, std::nullopt, std::nullopt, 57.0}},
      {"Flamingo-80B", "10.2B", {56.3, 50.6, std::nullopt, std::nullopt, 46.4}},
      {"BLIP-2 ViT-L FlanT5-XL", "103M", {62.3, 39.4, std::nullopt, std::nullopt, std::nullopt}},
      {"BLIP-2 ViT-g FlanT5-XXL", "108M", {65.0, 45.9, std::nullopt, std::nullopt, std::nullopt}},
      {"LENS FlanT5-XL", "0", {57.9, 32.8, 83.3, 58.0, 59.3}},
      {"LENS FlanT5-XXL", "0", {62.6, 43.3, 82.0, 59.4, 62.5}},
  };
  return rows;
}

const std::vector<AblationRow>& recognition_ablation() {
  static const std::vector<AblationRow> rows = {
      {"Objects", 76.6}, {"Attributes", 74.7}, {"Objects + Attributes", 77.0}};
  return rows;
}

const std::vector<AblationRow>& hateful_memes_ablation() {
  static const std::vector<AblationRow> rows = {{"OCR", 57.2},           {"Objects + OCR", 58.4},
                                                {"Attributes + OCR", 59.3}, {"Caption + OCR", 57.2},
                                                {"All", 59.4}};
  return rows;
}

const std::vector<AblationRow>& caption_count_ablation() {
  static const std::vector<AblationRow> rows = {{"Question", 37.2},
                                                {"Intensive Captioning (1) + Question", 52.5},
                                                {"Intensive Captioning (5) + Question", 56.6},
                                                {"Intensive Captioning (20) + Question", 59.1},
                                                {"Intensive Captioning (50) + Question", 60.4}};
  return rows;
}

const std::vector<DetailedAblationRow>& recognition_ablation_detailed() {
  static const std::vector<DetailedAblationRow> rows = {
      {"Pets", 90.1, 91.0, 92.6},       {"DTD", 53.7, 51.5, 57.8},     {"Aircraft", 38.0, 36.5, 38.5},
      {"Caltech101", 75.6, 71.6, 75.4}, {"Flowers102", 74.9, 75.6, 76.6}, {"Food101", 92.6, 89.1, 90.8},
      {"Cars", 93.4, 92.1, 92.9},       {"Cifar10", 95.6, 93.4, 95.7}, {"ImageNet-1k", 75.6, 71.5, 73.0},
  };
  return rows;
}

double vision_average(const std::vector<std::pair<std::string, double>>& values, std::span<const std::string> excluded) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [name, v] : values) {
    if (std::find(excluded.begin(), excluded.end(), name) != excluded.end()) continue;
    sum += v;
    ++n;
  }
  require(n > 0, ErrorCode::InvalidArgument, "no datasets left to average");
  return sum / static_cast<double>(n);
}

}  // namespace lens::reference
