#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "lens/metrics.hpp"
#include "lens/prompting.hpp"
#include "lens/vision.hpp"

namespace lens {

enum class EvalMode { Open, Close };

std::string_view to_string(EvalMode m);
EvalMode parse_eval_mode(std::string_view name);

// Published dataset catalogue entry (name, split, size, evaluation method).
struct DatasetInfo {
  std::string name;
  std::string split;
  std::size_t size;
  EvalMode mode;
  Metric metric;
  TaskKind task;
  std::vector<std::string> aliases;
};

const std::vector<DatasetInfo>& dataset_registry();
// Matches case-insensitively on name, and on split when one is given.
const DatasetInfo* find_dataset(std::string_view name, std::string_view split = {});

struct DatasetExample {
  std::string id;
  ImageRef image;
  std::string question;
  std::vector<std::string> answers;
  std::string label;
  std::optional<std::string> ocr_text;
};

struct DatasetManifest {
  std::string name;
  std::string split;
  Metric evaluation = Metric::Accuracy;
  EvalMode mode = EvalMode::Close;
  TaskKind task = TaskKind::Recognition;
  std::string question_template;
  std::optional<std::vector<std::string>> answer_space;
  // binary candidates for ROC-AUC tasks
  std::string positive_label = "hateful";
  std::string negative_label = "not hateful";
  std::vector<DatasetExample> examples;

  // Checks the catalogue pairing and per-example requirements.
  void validate() const;
  TaskSpec task_spec() const;
};

// Header record then one JSON line per example. Relative image paths are
// resolved against the manifest's directory.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

struct Backends {
  EncoderBackend* encoder = nullptr;
  CaptionBackend* captioner = nullptr;
  LLMBackend* llm = nullptr;
};

struct PipelineConfig {
  ModuleConfig modules = ModuleConfig::recognition();
  GenerationParams llm_params;  // beams 5, length penalty -1
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

using DescriptionCache = std::unordered_map<std::string, VisualDescription>;

struct BenchmarkOptions {
  std::size_t shots = 0;
  // held-out support split the shots are drawn from; required when shots > 0
  const DatasetManifest* support = nullptr;
  // descriptions to reuse instead of calling the vision modules
  const DescriptionCache* cache = nullptr;
  // keep only the first N cached/generated captions
  std::optional<std::size_t> caption_limit;
};

struct BenchmarkResult {
  MetricResult metric;
  // plain accuracy for open-ended tasks that also carry a label
  std::optional<MetricResult> secondary;
  std::vector<EvalRecord> records;
  // rendered prompts, one per record, same order
  std::vector<std::string> prompts;
  // example ids of the shots used for each record
  std::vector<std::vector<std::string>> shot_ids;
  std::vector<double> latencies_ms;
  std::string fingerprint;
};

// Vision modules plus reasoning, with vocabularies fixed for one run.
class Pipeline {
 public:
  Pipeline(Backends backends, const TagVocabulary* tags, const AttributeVocabulary* attributes,
           PipelineConfig config);

  const PipelineConfig& config() const { return config_; }
  const Backends& backends() const { return backends_; }

  BenchmarkResult run_benchmark(const DatasetManifest& manifest, const BenchmarkOptions& options = {}) const;

  // Describes every example image once (keyed by image id).
  DescriptionCache describe_all(const DatasetManifest& manifest) const;

  std::string fingerprint(const DatasetManifest& manifest, const BenchmarkOptions& options) const;

 private:
  Backends backends_;
  const TagVocabulary* tags_;
  const AttributeVocabulary* attributes_;
  PipelineConfig config_;
};

BenchmarkResult run_benchmark(const DatasetManifest& manifest, Backends backends, const TagVocabulary* tags,
                              const AttributeVocabulary* attributes, const PipelineConfig& config,
                              const BenchmarkOptions& options = {});

struct AblationRow {
  std::string name;
  ModuleConfig modules;
  BenchmarkResult result;
};

// One benchmark per grid entry over the same examples and shot seeds.
std::vector<AblationRow> run_ablation(const DatasetManifest& manifest, Backends backends, const TagVocabulary* tags,
                                      const AttributeVocabulary* attributes, const PipelineConfig& base,
                                      const std::vector<std::pair<std::string, ModuleConfig>>& grid,
                                      const BenchmarkOptions& options = {});

struct SweepRow {
  std::size_t num_captions;
  BenchmarkResult result;
};

// Describes once with the largest caption count, then scores each count
// using the first N cached captions.
std::vector<SweepRow> run_caption_sweep(const DatasetManifest& manifest, Backends backends,
                                        const PipelineConfig& base, const std::vector<std::size_t>& counts,
                                        DescriptionCache* cache_out = nullptr);

// Run directory: records.jsonl, metrics.json, fingerprint.txt, report.md,
// and traces.jsonl (latencies; not deterministic).
void write_run_directory(const std::string& dir, const BenchmarkResult& result, const DatasetManifest& manifest);
void write_ablation_directory(const std::string& dir, const std::vector<AblationRow>& rows,
                              const DatasetManifest& manifest);

std::string render_report(const std::vector<std::pair<std::string, MetricResult>>& rows,
                          const DatasetManifest& manifest);

}  // namespace lens
