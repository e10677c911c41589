#include "lens/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "lens/error.hpp"
#include "lens/normalize.hpp"
#include "lens/reasoning.hpp"
#include "lens/reference_data.hpp"
#include "lens/text.hpp"

namespace lens {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(EvalMode m) { return m == EvalMode::Open ? "open" : "close"; }

EvalMode parse_eval_mode(std::string_view name) {
  const auto n = text::canonicalize(name);
  if (n == "open" || n == "open-ended") return EvalMode::Open;
  if (n == "close" || n == "closed" || n == "close-ended") return EvalMode::Close;
  throw Error(ErrorCode::ConfigError, "unknown evaluation mode: " + std::string(name));
}

const std::vector<DatasetInfo>& dataset_registry() {
  using M = Metric;
  using T = TaskKind;
  constexpr auto C = EvalMode::Close;
  constexpr auto O = EvalMode::Open;
  static const std::vector<DatasetInfo> rows = {
      {"Oxford-IIIT Pets", "test", 3669, C, M::MeanPerClass, T::Recognition, {"pets", "oxford pets"}},
      {"Describable Textures", "test", 1880, C, M::Accuracy, T::Recognition, {"dtd"}},
      {"Caltech-101", "test", 6085, C, M::Accuracy, T::Recognition, {"caltech101"}},
      {"Oxford Flowers 102", "test", 6149, C, M::MeanPerClass, T::Recognition, {"flowers102", "flowers"}},
      {"FGVC Aircraft", "test", 3333, C, M::MeanPerClass, T::Recognition, {"aircraft"}},
      {"Food101", "test", 25250, C, M::Accuracy, T::Recognition, {"food-101"}},
      {"Cifar10", "test", 10000, C, M::Accuracy, T::Recognition, {"cifar-10"}},
      {"ImageNet-1k", "validation", 50000, C, M::Accuracy, T::Recognition, {"imagenet"}},
      {"Hateful Memes", "dev", 500, O, M::RocAuc, T::Memes, {"hateful-memes"}},
      {"Hateful Memes", "test-seen", 1000, O, M::RocAuc, T::Memes, {"hateful-memes"}},
      {"VQA 2.0", "test-dev", 107394, O, M::VqaAccuracy, T::Vqa, {"vqav2", "vqa-v2"}},
      {"OK-VQA", "validation", 5046, O, M::VqaAccuracy, T::Vqa, {"okvqa"}},
      {"Rendered SST2", "validation", 1821, O, M::VqaAccuracy, T::Sentiment, {"rendered-sst2", "sst2"}},
  };
  return rows;
}

const DatasetInfo* find_dataset(std::string_view name, std::string_view split) {
  const auto n = text::canonicalize(name);
  const auto s = text::canonicalize(split);
  for (const auto& info : dataset_registry()) {
    bool named = text::canonicalize(info.name) == n;
    for (const auto& a : info.aliases) named = named || a == n;
    if (!named) continue;
    if (s.empty() || text::canonicalize(info.split) == s) return &info;
  }
  return nullptr;
}

namespace {

bool is_positive(const DatasetManifest& m, const std::string& label) {
  return normalize_answer(label) == normalize_answer(m.positive_label);
}

std::string default_question_template(TaskKind kind) {
  switch (kind) {
    case TaskKind::Recognition: return TaskSpec::recognition({}).question_template;
    case TaskKind::Vqa: return TaskSpec::vqa().question_template;
    case TaskKind::Memes: return TaskSpec::memes().question_template;
    case TaskKind::Sentiment: return TaskSpec::sentiment().question_template;
  }
  return "{question}";
}

}  // namespace

void DatasetManifest::validate() const {
  require(!text::trim(name).empty(), ErrorCode::ConfigError, "manifest has no name");
  if (const auto* info = find_dataset(name, split)) {
    require(info->mode == mode && info->metric == evaluation, ErrorCode::ConfigError,
            "manifest " + name + "/" + split + " declares " + std::string(to_string(mode)) + "/" +
                std::string(to_string(evaluation)) + " but the catalogue lists " + std::string(to_string(info->mode)) +
                "/" + std::string(to_string(info->metric)));
  }
  if (mode == EvalMode::Close && task != TaskKind::Memes) {
    require(answer_space && !answer_space->empty(), ErrorCode::ConfigError,
            "close-ended manifest " + name + " needs an answer_space");
  }
  std::set<std::string> ids;
  for (const auto& ex : examples) {
    require(!ex.id.empty(), ErrorCode::ConfigError, "example without id in " + name);
    require(ids.insert(ex.id).second, ErrorCode::ConfigError, "duplicate example id " + ex.id);
    switch (evaluation) {
      case Metric::VqaAccuracy:
        require(!ex.answers.empty(), ErrorCode::ConfigError, "example " + ex.id + " has no reference answers");
        break;
      case Metric::RocAuc:
        require(!ex.label.empty(), ErrorCode::ConfigError, "example " + ex.id + " has no binary label");
        require(is_positive(*this, ex.label) ||
                    normalize_answer(ex.label) == normalize_answer(negative_label),
                ErrorCode::ConfigError, "example " + ex.id + " label is neither positive nor negative");
        break;
      case Metric::Accuracy:
      case Metric::MeanPerClass:
        require(!ex.label.empty(), ErrorCode::ConfigError, "example " + ex.id + " has no label");
        if (answer_space) {
          require(std::find(answer_space->begin(), answer_space->end(), ex.label) != answer_space->end(),
                  ErrorCode::ConfigError, "example " + ex.id + " label not in answer_space");
        }
        break;
    }
  }
}

TaskSpec DatasetManifest::task_spec() const {
  TaskSpec spec;
  spec.kind = task;
  spec.question_template = question_template.empty() ? default_question_template(task) : question_template;
  if (task == TaskKind::Memes) {
    spec.answer_space = std::vector<std::string>{positive_label, negative_label};
  } else if (mode == EvalMode::Close) {
    spec.answer_space = answer_space;
  }
  spec.validate();
  return spec;
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot read manifest " + path);
  const auto base = fs::path(path).parent_path();
  DatasetManifest m;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    try {
      if (!header) {
        m.name = j.at("name").get<std::string>();
        m.split = j.value("split", "");
        m.evaluation = parse_metric(j.at("evaluation").get<std::string>());
        m.mode = parse_eval_mode(j.at("mode").get<std::string>());
        if (j.contains("task")) {
          m.task = parse_task_kind(j["task"].get<std::string>());
        } else if (const auto* info = find_dataset(m.name, m.split)) {
          m.task = info->task;
        } else {
          m.task = m.evaluation == Metric::VqaAccuracy ? TaskKind::Vqa
                   : m.evaluation == Metric::RocAuc    ? TaskKind::Memes
                                                       : TaskKind::Recognition;
        }
        m.question_template = j.value("question_template", "");
        if (j.contains("answer_space")) m.answer_space = j["answer_space"].get<std::vector<std::string>>();
        m.positive_label = j.value("positive_label", m.positive_label);
        m.negative_label = j.value("negative_label", m.negative_label);
        header = true;
        continue;
      }
      DatasetExample ex;
      ex.id = j.at("id").get<std::string>();
      const auto image = j.at("image").get<std::string>();
      fs::path p(image);
      if (p.is_relative()) p = base / p;
      ex.image.uri = p.string();
      ex.image.id = j.value("image_id", p.filename().string());
      ex.question = j.value("question", "");
      if (j.contains("answers")) ex.answers = j["answers"].get<std::vector<std::string>>();
      ex.label = j.value("label", "");
      if (j.contains("ocr_text")) ex.ocr_text = j["ocr_text"].get<std::string>();
      m.examples.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  require(header, ErrorCode::ParseError, "manifest " + path + " has no header");
  m.validate();
  return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write manifest " + path);
  json h = {{"name", m.name},
            {"split", m.split},
            {"evaluation", to_string(m.evaluation)},
            {"mode", to_string(m.mode)},
            {"task", to_string(m.task)},
            {"question_template", m.question_template},
            {"positive_label", m.positive_label},
            {"negative_label", m.negative_label}};
  if (m.answer_space) h["answer_space"] = *m.answer_space;
  out << h.dump() << '\n';
  for (const auto& ex : m.examples) {
    json j = {{"id", ex.id}, {"image", ex.image.uri}, {"image_id", ex.image.id}};
    if (!ex.question.empty()) j["question"] = ex.question;
    if (!ex.answers.empty()) j["answers"] = ex.answers;
    if (!ex.label.empty()) j["label"] = ex.label;
    if (ex.ocr_text) j["ocr_text"] = *ex.ocr_text;
    out << j.dump() << '\n';
  }
}

namespace {

// Most frequent reference answer (earliest wins ties), else the label.
std::string gold_answer(const DatasetExample& ex) {
  if (!ex.label.empty()) return ex.label;
  std::map<std::string, std::size_t> counts;
  std::string best;
  std::size_t best_n = 0;
  for (const auto& a : ex.answers) {
    const auto n = ++counts[a];
    if (n > best_n) {
      best_n = n;
      best = a;
    }
  }
  return best;
}

void check_disjoint(const DatasetManifest& eval, const DatasetManifest& support) {
  std::set<std::string> ids;
  std::set<std::string> images;
  for (const auto& ex : eval.examples) {
    ids.insert(ex.id);
    images.insert(ex.image.id);
  }
  for (const auto& ex : support.examples) {
    if (ids.count(ex.id) || images.count(ex.image.id)) {
      throw Error(ErrorCode::DataLeak, "support example " + ex.id + " (image " + ex.image.id +
                                           ") also appears in the evaluation set");
    }
  }
}

VisualDescription limit_captions(VisualDescription desc, std::optional<std::size_t> limit) {
  if (limit && desc.captions && desc.captions->size() > *limit) desc.captions->resize(*limit);
  return desc;
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const auto count = std::min(workers, n);
  pool.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (auto i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct Outcome {
  EvalRecord record;
  std::string prompt;
  std::vector<std::string> shot_ids;
  double latency_ms = 0.0;
};

}  // namespace

Pipeline::Pipeline(Backends backends, const TagVocabulary* tags, const AttributeVocabulary* attributes,
                   PipelineConfig config)
    : backends_(backends), tags_(tags), attributes_(attributes), config_(std::move(config)) {
  config_.modules.validate();
  config_.llm_params.validate();
}

std::string Pipeline::fingerprint(const DatasetManifest& manifest, const BenchmarkOptions& options) const {
  std::ostringstream s;
  s << "dataset=" << manifest.name << "/" << manifest.split << ";task=" << to_string(manifest.task)
    << ";metric=" << to_string(manifest.evaluation) << ";mode=" << to_string(manifest.mode) << ";"
    << config_.modules.fingerprint() << ";shots=" << options.shots
    << ";caption_limit=" << (options.caption_limit ? std::to_string(*options.caption_limit) : "none")
    << ";llm_beams=" << config_.llm_params.num_beams << ";length_penalty=" << config_.llm_params.length_penalty
    << ";max_new_tokens=" << config_.llm_params.max_new_tokens << ";seed=" << config_.seed << ";backends=";
  if (backends_.encoder) s << "encoder:" << backends_.encoder->identity() << ",";
  if (backends_.captioner) s << "captioner:" << backends_.captioner->identity() << ",";
  if (backends_.llm) s << "llm:" << backends_.llm->identity() << "(" << to_string(backends_.llm->mode()) << ")";
  return s.str();
}

namespace {

struct DescriberHolder {
  TagVocabulary fallback_tags;
  std::optional<Describer> describer;
};

// Classification manifests supply their own label set when no tag vocabulary was given.
void make_describer(DescriberHolder& h, const Backends& b, const TagVocabulary* tags,
                    const AttributeVocabulary* attributes, const ModuleConfig& modules,
                    const DatasetManifest& manifest) {
  const TagVocabulary* use = tags;
  if (!use && manifest.answer_space && manifest.task == TaskKind::Recognition) {
    h.fallback_tags = build_tag_vocabulary({{manifest.name, *manifest.answer_space}});
    use = &h.fallback_tags;
  }
  h.describer.emplace(VisionDeps{b.encoder, b.captioner, use, attributes}, modules);
}

}  // namespace

DescriptionCache Pipeline::describe_all(const DatasetManifest& manifest) const {
  DescriberHolder h;
  make_describer(h, backends_, tags_, attributes_, config_.modules, manifest);
  DescriptionCache cache;
  for (const auto& ex : manifest.examples) {
    if (cache.count(ex.image.id)) continue;
    cache.emplace(ex.image.id, h.describer->describe(ex.image, ex.ocr_text));
  }
  return cache;
}

BenchmarkResult Pipeline::run_benchmark(const DatasetManifest& manifest, const BenchmarkOptions& options) const {
  manifest.validate();
  require(!manifest.examples.empty(), ErrorCode::EmptyRecordSet, "manifest " + manifest.name + " has no examples");
  require(backends_.llm != nullptr, ErrorCode::BackendUnavailable, "benchmark needs an LLM backend");
  const TaskSpec task = manifest.task_spec();
  LLMBackend& llm = *backends_.llm;

  DescriberHolder holder;
  const bool need_describer = !options.cache || options.shots > 0;
  if (need_describer) make_describer(holder, backends_, tags_, attributes_, config_.modules, manifest);

  // Support shots: resolve the pool once so every example (and every
  // ablation row) draws from the same descriptions.
  std::vector<std::string> support_labels;
  std::vector<std::optional<Shot>> support_shots;
  if (options.shots > 0) {
    require(options.support != nullptr, ErrorCode::ConfigError, "shots > 0 needs a support manifest");
    check_disjoint(manifest, *options.support);
    require(options.support->examples.size() >= options.shots, ErrorCode::ConfigError,
            "support set is smaller than the shot count");
    for (const auto& ex : options.support->examples) support_labels.push_back(gold_answer(ex));
    support_shots.resize(options.support->examples.size());
  }
  std::mutex support_mutex;
  auto shot_for = [&](std::size_t idx) -> Shot {
    std::lock_guard lock(support_mutex);
    auto& slot = support_shots[idx];
    if (!slot) {
      const auto& ex = options.support->examples[idx];
      require(!support_labels[idx].empty(), ErrorCode::ShotMissingAnswer, "support example " + ex.id + " has no answer");
      slot = Shot{limit_captions(holder.describer->describe(ex.image, ex.ocr_text), options.caption_limit),
                  task.question(ex.question), support_labels[idx]};
    }
    return *slot;
  };

  const auto fp = fingerprint(manifest, options);
  std::vector<Outcome> outcomes(manifest.examples.size());

  const bool all_safe = (!backends_.encoder || backends_.encoder->thread_safe()) &&
                        (!backends_.captioner || backends_.captioner->thread_safe()) && llm.thread_safe();
  const std::size_t workers = all_safe ? config_.workers : 1;

  parallel_for(manifest.examples.size(), workers, [&](std::size_t i) {
    const auto& ex = manifest.examples[i];
    Outcome& out = outcomes[i];
    EvalRecord& rec = out.record;
    rec.example_id = ex.id;
    rec.image_id = ex.image.id;
    rec.label = ex.label;
    rec.references = ex.answers;
    if (manifest.evaluation == Metric::RocAuc) rec.positive = is_positive(manifest, ex.label);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      VisualDescription desc;
      const VisualDescription* cached = nullptr;
      if (options.cache) {
        auto it = options.cache->find(ex.image.id);
        if (it != options.cache->end()) cached = &it->second;
      }
      if (cached) {
        desc = *cached;
      } else {
        require(holder.describer.has_value(), ErrorCode::InvalidArgument,
                "image " + ex.image.id + " missing from the description cache");
        desc = holder.describer->describe(ex.image, ex.ocr_text);
      }
      desc = limit_captions(std::move(desc), options.caption_limit);

      std::vector<Shot> shots;
      if (options.shots > 0) {
        const auto seed = text::fnv1a(ex.id, config_.seed);
        for (auto idx : sample_shot_indices(support_labels, options.shots, seed)) {
          shots.push_back(shot_for(idx));
          out.shot_ids.push_back(options.support->examples[idx].id);
        }
      }

      const auto question = task.question(ex.question);
      const TokenCounter counter = [&llm](std::string_view s) { return llm.count_tokens(s); };
      const auto bundle = fit_to_budget(desc, task, question, shots, counter, llm.context_window());
      out.prompt = bundle.rendered;
      rec.prompt_hash = text::hex64(text::fnv1a(bundle.rendered));

      switch (manifest.evaluation) {
        case Metric::RocAuc: {
          if (llm.mode() == LLMMode::LocalScored) {
            rec.predicted = score_binary(llm, bundle, manifest.positive_label, manifest.negative_label);
          } else {
            // hard 0/1 scores from generate-then-match
            rec.predicted = answer_close(llm, bundle, *task.answer_space, config_.llm_params);
            rec.predicted.positive_score = rec.predicted.text == manifest.positive_label ? 1.0 : 0.0;
          }
          rec.per_example_score = *rec.predicted.positive_score;
          break;
        }
        case Metric::VqaAccuracy:
          rec.predicted = task.close_ended() ? answer_close(llm, bundle, *task.answer_space, config_.llm_params)
                                             : answer_open(llm, bundle, config_.llm_params);
          rec.per_example_score = vqa_score(rec.predicted.text, rec.references);
          break;
        case Metric::Accuracy:
        case Metric::MeanPerClass:
          rec.predicted = task.close_ended() ? answer_close(llm, bundle, *task.answer_space, config_.llm_params)
                                             : answer_open(llm, bundle, config_.llm_params);
          rec.per_example_score = rec.predicted.text == rec.label ? 1.0 : 0.0;
          break;
      }
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
      rec.per_example_score = 0.0;
    }
    out.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  });

  BenchmarkResult result;
  result.fingerprint = fp;
  for (auto& o : outcomes) {
    result.records.push_back(std::move(o.record));
    result.prompts.push_back(std::move(o.prompt));
    result.shot_ids.push_back(std::move(o.shot_ids));
    result.latencies_ms.push_back(o.latency_ms);
  }
  result.metric = compute_metric(manifest.evaluation, result.records);
  result.metric.config_fingerprint = fp;
  // two-class sentiment scored as VQA accuracy also gets plain accuracy
  if (manifest.evaluation == Metric::VqaAccuracy &&
      std::all_of(result.records.begin(), result.records.end(), [](const auto& r) { return !r.label.empty(); })) {
    result.secondary = accuracy(result.records, true);
    result.secondary->config_fingerprint = fp;
  }
  return result;
}

BenchmarkResult run_benchmark(const DatasetManifest& manifest, Backends backends, const TagVocabulary* tags,
                              const AttributeVocabulary* attributes, const PipelineConfig& config,
                              const BenchmarkOptions& options) {
  return Pipeline(backends, tags, attributes, config).run_benchmark(manifest, options);
}

std::vector<AblationRow> run_ablation(const DatasetManifest& manifest, Backends backends, const TagVocabulary* tags,
                                      const AttributeVocabulary* attributes, const PipelineConfig& base,
                                      const std::vector<std::pair<std::string, ModuleConfig>>& grid,
                                      const BenchmarkOptions& options) {
  require(!grid.empty(), ErrorCode::ConfigError, "ablation grid is empty");
  std::vector<AblationRow> rows;
  for (const auto& [name, modules] : grid) {
    PipelineConfig cfg = base;
    cfg.modules = modules;
    rows.push_back({name, modules, run_benchmark(manifest, backends, tags, attributes, cfg, options)});
  }
  return rows;
}

std::vector<SweepRow> run_caption_sweep(const DatasetManifest& manifest, Backends backends,
                                        const PipelineConfig& base, const std::vector<std::size_t>& counts,
                                        DescriptionCache* cache_out) {
  require(!counts.empty(), ErrorCode::ConfigError, "caption sweep needs at least one count");
  const auto largest = *std::max_element(counts.begin(), counts.end());
  require(largest >= 1 && largest <= kMaxCaptions, ErrorCode::ConfigError, "caption counts must be in [1, 50]");
  PipelineConfig cfg = base;
  cfg.modules.enabled = {VisionModule::Captions};
  cfg.modules.num_captions = static_cast<int>(largest);
  if (!cfg.modules.caption_top_k) cfg.modules.caption_beams = std::max(cfg.modules.caption_beams, static_cast<int>(largest));
  Pipeline pipeline(backends, nullptr, nullptr, cfg);
  const auto cache = pipeline.describe_all(manifest);
  std::vector<SweepRow> rows;
  for (auto n : counts) {
    BenchmarkOptions opts;
    opts.cache = &cache;
    opts.caption_limit = n;
    rows.push_back({n, pipeline.run_benchmark(manifest, opts)});
  }
  if (cache_out) *cache_out = cache;
  return rows;
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + path.string());
  out << content;
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v * 100.0);
  return buf;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

// Static full-scale rows relevant to the manifest's task.
std::string reference_section(const DatasetManifest& manifest) {
  std::ostringstream s;
  s << "\n## Published full-scale results (reference only)\n\n";
  if (manifest.task == TaskKind::Recognition) {
    s << "| Dataset |";
    for (const auto* c : reference::kRecognitionColumns) s << " " << c << " |";
    s << "\n|---|---|---|---|---|---|---|\n";
    std::vector<std::pair<std::string, double>> avg[6];
    for (const auto& r : reference::zero_shot_recognition()) {
      s << "| " << r.dataset << " |";
      for (int c = 0; c < 6; ++c) {
        s << " " << fmt(r.values[c]) << " |";
        avg[c].emplace_back(r.dataset, r.values[c]);
      }
      s << "\n";
    }
    s << "| Vision Avg. |";
    for (auto& a : avg) s << " " << fmt(reference::vision_average(a)) << " |";
    s << "\n\n| Ablation | Avg. accuracy |\n|---|---|\n";
    for (const auto& r : reference::recognition_ablation()) s << "| " << r.prompt_template << " | " << fmt(r.value) << " |\n";
  } else {
    s << "| Model | Trainable |";
    for (const auto* c : reference::kVisionLanguageColumns) s << " " << c << " |";
    s << "\n|---|---|---|---|---|---|---|\n";
    for (const auto& r : reference::zero_shot_vision_language()) {
      s << "| " << r.model << " | " << r.trainable_params << " |";
      for (const auto& v : r.values) s << " " << (v ? fmt(*v) : "-") << " |";
      s << "\n";
    }
    if (manifest.task == TaskKind::Memes) {
      s << "\n| Ablation | ROC-AUC (dev) |\n|---|---|\n";
      for (const auto& r : reference::hateful_memes_ablation()) s << "| " << r.prompt_template << " | " << fmt(r.value) << " |\n";
    }
    if (manifest.task == TaskKind::Vqa) {
      s << "\n| Captions | VQA accuracy |\n|---|---|\n";
      for (const auto& r : reference::caption_count_ablation()) s << "| " << r.prompt_template << " | " << fmt(r.value) << " |\n";
    }
  }
  return s.str();
}

std::string records_jsonl(const BenchmarkResult& result) {
  std::string out;
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    json j = to_json(result.records[i]);
    if (i < result.shot_ids.size() && !result.shot_ids[i].empty()) j["shots"] = result.shot_ids[i];
    out += j.dump() + "\n";
  }
  return out;
}

json metrics_json(const BenchmarkResult& result) {
  json j = to_json(result.metric);
  if (result.secondary) j["secondary"] = to_json(*result.secondary);
  return j;
}

}  // namespace

std::string render_report(const std::vector<std::pair<std::string, MetricResult>>& rows,
                          const DatasetManifest& manifest) {
  std::ostringstream s;
  s << "# " << manifest.name << " (" << manifest.split << ")\n\n";
  s << "| Run | Metric | Value | n | Failures |\n|---|---|---|---|---|\n";
  for (const auto& [name, m] : rows) {
    s << "| " << name << " | " << to_string(m.metric) << " | " << percent(m.value) << " | " << m.n << " | "
      << m.failures << " |\n";
  }
  s << reference_section(manifest);
  return s.str();
}

void write_run_directory(const std::string& dir, const BenchmarkResult& result, const DatasetManifest& manifest) {
  fs::create_directories(dir);
  const fs::path d(dir);
  write_file(d / "records.jsonl", records_jsonl(result));
  write_file(d / "metrics.json", metrics_json(result).dump(2) + "\n");
  write_file(d / "fingerprint.txt", result.fingerprint + "\n");
  std::vector<std::pair<std::string, MetricResult>> rows = {{"main", result.metric}};
  if (result.secondary) rows.emplace_back("plain accuracy", *result.secondary);
  write_file(d / "report.md", render_report(rows, manifest));
  std::string traces;
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    traces += json{{"example_id", result.records[i].example_id}, {"latency_ms", result.latencies_ms[i]}}.dump() + "\n";
  }
  write_file(d / "traces.jsonl", traces);
}

void write_ablation_directory(const std::string& dir, const std::vector<AblationRow>& rows,
                              const DatasetManifest& manifest) {
  fs::create_directories(dir);
  const fs::path d(dir);
  json metrics = json::array();
  std::vector<std::pair<std::string, MetricResult>> report_rows;
  std::string fingerprints;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    json m = metrics_json(row.result);
    m["name"] = row.name;
    metrics.push_back(m);
    report_rows.emplace_back(row.name, row.result.metric);
    fingerprints += row.name + "\t" + row.result.fingerprint + "\n";
    write_run_directory((d / ("row-" + std::to_string(i))).string(), row.result, manifest);
  }
  write_file(d / "metrics.json", metrics.dump(2) + "\n");
  write_file(d / "fingerprint.txt", fingerprints);
  write_file(d / "report.md", render_report(report_rows, manifest));
}

}  // namespace lens
