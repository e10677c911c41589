#pragma once

#include <memory>
#include <optional>
#include <string>

#include "json.hpp"

#include "lens/backends.hpp"
#include "lens/evaluation.hpp"
#include "lens/prompting.hpp"
#include "lens/vision.hpp"
#include "lens/vocabulary.hpp"

namespace lens {

// Parsed run configuration. Paths are already resolved against the
// directory of the config file.
struct AppConfig {
  // backends.{encoder,captioner,llm}: {kind: mock|local|remote, model_id,
  // endpoint, api_key_env, fixtures, dimension, context_window, ...}
  nlohmann::json backends = nlohmann::json::object();
  std::optional<std::string> tags_path;
  std::optional<std::string> attributes_path;
  TaskKind task = TaskKind::Vqa;
  std::optional<std::string> question_template;
  ModuleConfig modules = ModuleConfig::vqa();
  // false when `modules` is just the task preset
  bool modules_explicit = false;
  GenerationParams llm_params;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  // benchmark exits nonzero when the failed fraction exceeds this
  double max_failure_rate = 1.0;
  double session_ttl_seconds = 1800.0;
  std::optional<std::string> support_path;
  std::string base_dir = ".";
};

AppConfig load_config(const std::string& path);
AppConfig config_from_json(const nlohmann::json& j, const std::string& base_dir = ".");

// Merges "key=value,key=value" into backends.<role>.
void apply_backend_override(AppConfig& config, const std::string& role, const std::string& spec);

ModuleConfig preset_for(TaskKind task);
// Starts from `preset` (or the given base) and applies any listed fields.
ModuleConfig module_config_from_json(const nlohmann::json& j, const ModuleConfig& base);
nlohmann::json to_json(const ModuleConfig& config);

// Re-derives the preset for a new task kind while keeping explicit overrides.
void set_task(AppConfig& config, TaskKind task);

struct BackendSet {
  std::unique_ptr<EncoderBackend> encoder;
  std::unique_ptr<CaptionBackend> captioner;
  std::unique_ptr<LLMBackend> llm;

  Backends view() const { return {encoder.get(), captioner.get(), llm.get()}; }
};

std::unique_ptr<EncoderBackend> make_encoder(const nlohmann::json& spec, const std::string& base_dir);
std::unique_ptr<CaptionBackend> make_captioner(const nlohmann::json& spec, const std::string& base_dir);
std::unique_ptr<LLMBackend> make_llm(const nlohmann::json& spec, const std::string& base_dir);

// Only the roles present in the config are built.
BackendSet make_backends(const AppConfig& config);

struct Vocabularies {
  std::optional<TagVocabulary> tags;
  std::optional<AttributeVocabulary> attributes;

  const TagVocabulary* tags_ptr() const { return tags ? &*tags : nullptr; }
  const AttributeVocabulary* attributes_ptr() const { return attributes ? &*attributes : nullptr; }
};

Vocabularies load_vocabularies(const AppConfig& config);

PipelineConfig pipeline_config(const AppConfig& config);

}  // namespace lens
