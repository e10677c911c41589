#include "lens/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lens/error.hpp"
#include "lens/http_backends.hpp"
#include "lens/mock_backends.hpp"
#include "lens/text.hpp"

namespace lens {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string resolve(const std::string& base_dir, const std::string& path) {
  fs::path p(path);
  if (p.is_relative()) p = fs::path(base_dir) / p;
  return p.lexically_normal().string();
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::ConfigError, "cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("bad value for ") + key + ": " + e.what());
  }
}

std::string api_key(const json& spec) {
  const auto var = get_or<std::string>(spec, "api_key_env", "");
  if (var.empty()) return {};
  const char* v = std::getenv(var.c_str());
  return v ? v : "";
}

std::string kind_of(const json& spec) {
  const auto kind = text::canonicalize(get_or<std::string>(spec, "kind", "mock"));
  require(kind == "mock" || kind == "local" || kind == "remote", ErrorCode::ConfigError,
          "backend kind must be mock, local or remote, got " + kind);
  return kind;
}

std::string endpoint_of(const json& spec, const std::string& role) {
  const auto ep = get_or<std::string>(spec, "endpoint", "");
  require(!ep.empty(), ErrorCode::ConfigError, role + " backend needs an endpoint");
  return ep;
}

// Fixture document (inline object or file), with backend-spec fields layered
// over the role's section so a config can tweak a shared fixture file.
json fixtures_for(const json& spec, const std::string& role, const std::string& base_dir) {
  json doc = json::object();
  if (spec.contains("fixtures")) {
    const auto& f = spec["fixtures"];
    doc = f.is_string() ? read_json_file(resolve(base_dir, f.get<std::string>())) : f;
  }
  json section = doc.value(role, json::object());
  for (const auto& [k, v] : spec.items()) {
    if (k == "kind" || k == "model_id" || k == "fixtures" || k == "endpoint" || k == "api_key_env") continue;
    section[k] = v;
  }
  doc[role] = section;
  return doc;
}

const std::set<std::string>& module_keys() {
  static const std::set<std::string> keys = {"preset", "enabled", "top_k_tags", "top_k_attributes",
                                             "num_captions", "attribute_scope", "caption_beams", "caption_top_k",
                                             "caption_strategy", "seed", "tag_prompt", "attribute_prompt"};
  return keys;
}

}  // namespace

ModuleConfig preset_for(TaskKind task) {
  switch (task) {
    case TaskKind::Recognition: return ModuleConfig::recognition();
    case TaskKind::Vqa: return ModuleConfig::vqa();
    case TaskKind::Memes: return ModuleConfig::memes();
    case TaskKind::Sentiment: return ModuleConfig::sentiment();
  }
  return ModuleConfig::vqa();
}

ModuleConfig module_config_from_json(const json& j, const ModuleConfig& base) {
  require(j.is_object(), ErrorCode::ConfigError, "modules must be an object");
  for (const auto& [k, v] : j.items()) {
    require(module_keys().count(k) > 0, ErrorCode::ConfigError, "unknown modules key: " + k);
  }
  ModuleConfig c = base;
  if (j.contains("preset")) c = preset_for(parse_task_kind(j["preset"].get<std::string>()));
  if (j.contains("enabled")) {
    const auto& e = j["enabled"];
    c.enabled = e.is_string() ? parse_module_list(e.get<std::string>()) : std::set<VisionModule>{};
    if (e.is_array()) {
      for (const auto& m : e) c.enabled.insert(parse_vision_module(m.get<std::string>()));
    }
  }
  c.top_k_tags = get_or(j, "top_k_tags", c.top_k_tags);
  c.top_k_attributes = get_or(j, "top_k_attributes", c.top_k_attributes);
  c.num_captions = get_or(j, "num_captions", c.num_captions);
  if (j.contains("attribute_scope")) {
    const auto s = text::canonicalize(j["attribute_scope"].get<std::string>());
    if (s == "top-tag") {
      c.attribute_scope = AttributeScope::TopTaggedClass;
    } else if (s == "all") {
      c.attribute_scope = AttributeScope::AllClasses;
    } else {
      throw Error(ErrorCode::ConfigError, "attribute_scope must be top-tag or all");
    }
  }
  c.caption_beams = get_or(j, "caption_beams", c.caption_beams);
  if (j.contains("caption_top_k")) {
    if (j["caption_top_k"].is_null()) {
      c.caption_top_k.reset();
    } else {
      c.caption_top_k = get_or<int>(j, "caption_top_k", 50);
    }
  }
  if (j.contains("caption_strategy")) {
    const auto s = text::canonicalize(j["caption_strategy"].get<std::string>());
    if (s == "beam") {
      c.caption_top_k.reset();
    } else if (s == "top-k") {
      if (!c.caption_top_k) c.caption_top_k = 50;
    } else {
      throw Error(ErrorCode::ConfigError, "caption_strategy must be beam or top-k");
    }
  }
  c.seed = get_or(j, "seed", c.seed);
  c.tag_prompt = get_or(j, "tag_prompt", c.tag_prompt);
  c.attribute_prompt = get_or(j, "attribute_prompt", c.attribute_prompt);
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return c;
}

json to_json(const ModuleConfig& c) {
  json enabled = json::array();
  for (auto m : c.enabled) enabled.push_back(to_string(m));
  json j = {{"enabled", enabled},
            {"top_k_tags", c.top_k_tags},
            {"top_k_attributes", c.top_k_attributes},
            {"num_captions", c.num_captions},
            {"attribute_scope", c.attribute_scope == AttributeScope::TopTaggedClass ? "top-tag" : "all"},
            {"caption_beams", c.caption_beams},
            {"seed", c.seed},
            {"tag_prompt", c.tag_prompt},
            {"attribute_prompt", c.attribute_prompt}};
  j["caption_top_k"] = c.caption_top_k ? json(*c.caption_top_k) : json(nullptr);
  return j;
}

AppConfig config_from_json(const json& j, const std::string& base_dir) {
  require(j.is_object(), ErrorCode::ConfigError, "config must be a JSON object");
  AppConfig c;
  c.base_dir = base_dir;
  try {
    if (j.contains("backends")) c.backends = j["backends"];
    require(c.backends.is_object(), ErrorCode::ConfigError, "backends must be an object");
    if (j.contains("vocabulary")) {
      const auto& v = j["vocabulary"];
      if (v.contains("tags")) c.tags_path = resolve(base_dir, v["tags"].get<std::string>());
      if (v.contains("attributes")) c.attributes_path = resolve(base_dir, v["attributes"].get<std::string>());
    }
    if (j.contains("task")) c.task = parse_task_kind(j["task"].get<std::string>());
    if (j.contains("question_template")) c.question_template = j["question_template"].get<std::string>();
    c.modules = preset_for(c.task);
    if (j.contains("modules")) {
      c.modules = module_config_from_json(j["modules"], c.modules);
      c.modules_explicit = true;
    }
    if (j.contains("llm_params")) {
      const auto& p = j["llm_params"];
      c.llm_params.num_beams = get_or(p, "num_beams", c.llm_params.num_beams);
      c.llm_params.length_penalty = get_or(p, "length_penalty", c.llm_params.length_penalty);
      c.llm_params.max_new_tokens = get_or(p, "max_new_tokens", c.llm_params.max_new_tokens);
    }
    c.seed = get_or(j, "seed", c.seed);
    c.workers = get_or(j, "workers", c.workers);
    c.max_failure_rate = get_or(j, "max_failure_rate", c.max_failure_rate);
    if (j.contains("service")) {
      const auto& s = j["service"];
      c.session_ttl_seconds = get_or(s, "session_ttl_seconds", c.session_ttl_seconds);
      if (s.contains("support")) c.support_path = resolve(base_dir, s["support"].get<std::string>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, e.what());
  }
  try {
    c.llm_params.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  require(c.workers >= 1, ErrorCode::ConfigError, "workers must be >= 1");
  require(c.max_failure_rate >= 0.0 && c.max_failure_rate <= 1.0, ErrorCode::ConfigError,
          "max_failure_rate must be in [0, 1]");
  require(c.session_ttl_seconds > 0.0, ErrorCode::ConfigError, "session_ttl_seconds must be positive");
  return c;
}

AppConfig load_config(const std::string& path) {
  return config_from_json(read_json_file(path), fs::path(path).parent_path().string());
}

void apply_backend_override(AppConfig& config, const std::string& role, const std::string& spec) {
  require(role == "encoder" || role == "captioner" || role == "llm", ErrorCode::ConfigError,
          "unknown backend role: " + role);
  json& entry = config.backends[role];
  if (!entry.is_object()) entry = json::object();
  std::istringstream items(spec);
  std::string item;
  while (std::getline(items, item, ',')) {
    if (text::trim(item).empty()) continue;
    const auto eq = item.find('=');
    require(eq != std::string::npos, ErrorCode::ConfigError, "backend override needs key=value: " + item);
    const auto key = text::trim(item.substr(0, eq));
    const auto value = text::trim(item.substr(eq + 1));
    // numbers and booleans keep their JSON type
    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded() || parsed.is_object() || parsed.is_array()) parsed = value;
    if ((key == "fixtures") && parsed.is_string()) parsed = resolve(".", parsed.get<std::string>());
    entry[key] = parsed;
  }
}

void set_task(AppConfig& config, TaskKind task) {
  config.task = task;
  if (!config.modules_explicit) config.modules = preset_for(task);
}

std::unique_ptr<EncoderBackend> make_encoder(const json& spec, const std::string& base_dir) {
  const auto kind = kind_of(spec);
  const auto model = get_or<std::string>(spec, "model_id", "mock-encoder");
  if (kind == "mock") return mock::encoder_from_fixtures(fixtures_for(spec, "encoder", base_dir), model);
  const auto dim = get_or<std::size_t>(spec, "dimension", 0);
  require(dim > 0, ErrorCode::ConfigError, "encoder backend needs a positive dimension");
  return std::make_unique<http::HttpEncoder>(endpoint_of(spec, "encoder"), model, dim, api_key(spec));
}

std::unique_ptr<CaptionBackend> make_captioner(const json& spec, const std::string& base_dir) {
  const auto kind = kind_of(spec);
  const auto model = get_or<std::string>(spec, "model_id", "mock-captioner");
  if (kind == "mock") return mock::captioner_from_fixtures(fixtures_for(spec, "captioner", base_dir), model);
  return std::make_unique<http::HttpCaptioner>(endpoint_of(spec, "captioner"), model,
                                               get_or(spec, "supports_sampling", true), api_key(spec));
}

std::unique_ptr<LLMBackend> make_llm(const json& spec, const std::string& base_dir) {
  const auto kind = kind_of(spec);
  const auto model = get_or<std::string>(spec, "model_id", "mock-llm");
  if (kind == "mock") return mock::llm_from_fixtures(fixtures_for(spec, "llm", base_dir), model);
  const auto mode = kind == "local" ? LLMMode::LocalScored : LLMMode::RemoteGenerateOnly;
  return std::make_unique<http::HttpLLM>(endpoint_of(spec, "llm"), model, mode,
                                         get_or<std::size_t>(spec, "context_window", 2048), api_key(spec));
}

BackendSet make_backends(const AppConfig& config) {
  BackendSet set;
  try {
    if (config.backends.contains("encoder")) set.encoder = make_encoder(config.backends["encoder"], config.base_dir);
    if (config.backends.contains("captioner")) {
      set.captioner = make_captioner(config.backends["captioner"], config.base_dir);
    }
    if (config.backends.contains("llm")) set.llm = make_llm(config.backends["llm"], config.base_dir);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("backend config: ") + e.what());
  }
  return set;
}

Vocabularies load_vocabularies(const AppConfig& config) {
  Vocabularies v;
  if (config.tags_path) v.tags = load_tag_vocabulary(*config.tags_path);
  if (config.attributes_path) v.attributes = load_attribute_vocabulary(*config.attributes_path, v.tags_ptr());
  return v;
}

PipelineConfig pipeline_config(const AppConfig& config) {
  PipelineConfig p;
  p.modules = config.modules;
  p.llm_params = config.llm_params;
  p.seed = config.seed;
  p.workers = config.workers;
  return p;
}

}  // namespace lens
