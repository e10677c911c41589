#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

// Published full-scale results, shipped as static data so run reports can
// show them next to desk-scale numbers. Values are percentages.
namespace lens::reference {

struct RecognitionRow {
  std::string dataset;
  // LENS L14-FlanT5-XL, L14-FlanT5-XXL, H14-FlanT5-XL, H14-FlanT5-XXL, CLIP L14, CLIP H14
  double values[6];
};

inline constexpr const char* kRecognitionColumns[6] = {"LENS L14-XL", "LENS L14-XXL", "LENS H14-XL",
                                                        "LENS H14-XXL", "CLIP L14", "CLIP H14"};

const std::vector<RecognitionRow>& zero_shot_recognition();

struct VisionLanguageRow {
  std::string model;
  std::string trainable_params;
  // VQAv2 test-dev, OK-VQA test, Rendered-SST2 test, Hateful Memes dev, Hateful Memes test-seen
  std::optional<double> values[5];
};

inline constexpr const char* kVisionLanguageColumns[5] = {"VQAv2 test-dev", "OK-VQA test", "Rendered-SST2 test",
                                                           "Hateful Memes dev", "Hateful Memes test-seen"};

const std::vector<VisionLanguageRow>& zero_shot_vision_language();

struct AblationRow {
  std::string prompt_template;
  double value;
};

const std::vector<AblationRow>& recognition_ablation();   // average accuracy
const std::vector<AblationRow>& hateful_memes_ablation(); // ROC-AUC, dev
const std::vector<AblationRow>& caption_count_ablation(); // VQA accuracy, VQAv2 minival

struct DetailedAblationRow {
  std::string dataset;
  double objects;
  double attributes;
  double objects_attributes;
};

const std::vector<DetailedAblationRow>& recognition_ablation_detailed();

// Mean of `values` over datasets not in `excluded`. The published Vision Avg.
// uses all nine recognition datasets; the few-shot plot excludes ImageNet-1k.
double vision_average(const std::vector<std::pair<std::string, double>>& values,
                      std::span<const std::string> excluded = {});

}  // namespace lens::reference
