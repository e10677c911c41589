#include "doctest.h"

#include <cstdlib>

#include "lens/config.hpp"
#include "lens/error.hpp"
#include "test_util.hpp"

using namespace lens;
using nlohmann::json;

namespace {

const std::string demo = LENS_DEMO_DATA;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("task presets") {
  const auto r = preset_for(TaskKind::Recognition);
  CHECK(r.enabled == std::set<VisionModule>{VisionModule::Tags, VisionModule::Attributes});
  CHECK(r.attribute_scope == AttributeScope::TopTaggedClass);
  const auto v = preset_for(TaskKind::Vqa);
  CHECK(v.enabled == std::set<VisionModule>{VisionModule::Captions});
  CHECK(v.num_captions == 50);
  CHECK(v.caption_top_k == std::optional<int>(50));
  const auto m = preset_for(TaskKind::Memes);
  CHECK(m.enabled.size() == 4);
  CHECK(m.attribute_scope == AttributeScope::AllClasses);
  CHECK(m.num_captions == 1);
  CHECK(m.caption_beams == 5);
  CHECK(preset_for(TaskKind::Sentiment) == m);
}

TEST_CASE("defaults of an empty config") {
  const auto c = config_from_json(json::object());
  CHECK(c.task == TaskKind::Vqa);
  CHECK(c.modules == ModuleConfig::vqa());
  CHECK_FALSE(c.modules_explicit);
  CHECK(c.llm_params.num_beams == 5);
  CHECK(c.llm_params.length_penalty == -1.0);
  CHECK(c.workers == 1);
  CHECK(c.session_ttl_seconds == 1800.0);
}

TEST_CASE("module overrides layer over the task preset") {
  const auto c = config_from_json({{"task", "memes"}, {"modules", {{"top_k_tags", 3}, {"attribute_scope", "top-tag"}}}});
  CHECK(c.modules.top_k_tags == 3);
  CHECK(c.modules.attribute_scope == AttributeScope::TopTaggedClass);
  CHECK(c.modules.enabled.size() == 4);
  CHECK(c.modules_explicit);

  auto t = config_from_json({{"task", "vqa"}});
  set_task(t, TaskKind::Recognition);
  CHECK(t.modules == ModuleConfig::recognition());
  auto kept = config_from_json({{"modules", {{"enabled", "tags"}}}});
  set_task(kept, TaskKind::Memes);
  CHECK(kept.modules.enabled == std::set<VisionModule>{VisionModule::Tags});

  const auto round = module_config_from_json(to_json(c.modules), ModuleConfig::vqa());
  CHECK(round == c.modules);
}

TEST_CASE("invalid configs are config errors") {
  CHECK(code_of([] { config_from_json({{"modules", {{"bogus", 1}}}}); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { config_from_json({{"modules", {{"enabled", json::array()}}}}); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { config_from_json({{"modules", {{"num_captions", 51}}}}); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { config_from_json({{"task", "poetry"}}); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { config_from_json({{"llm_params", {{"num_beams", 0}}}}); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { config_from_json({{"workers", 0}}); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { config_from_json({{"max_failure_rate", 2.0}}); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { config_from_json(json::array()); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { load_config("/nonexistent/config.json"); }) != ErrorCode::InvalidArgument);
}

TEST_CASE("demo config loads with resolved paths") {
  const auto c = load_config(demo + "/config.json");
  CHECK(c.task == TaskKind::Recognition);
  CHECK(c.modules.top_k_tags == 1);
  REQUIRE(c.tags_path);
  CHECK(*c.tags_path == demo + "/tags.jsonl");
  REQUIRE(c.support_path);
  const auto vocab = load_vocabularies(c);
  REQUIRE(vocab.tags);
  CHECK(vocab.tags->tags.size() == 10);
  REQUIRE(vocab.attributes);
  auto b = make_backends(c);
  REQUIRE(b.encoder);
  CHECK(b.encoder->identity() == "mock-clip");
  CHECK(b.encoder->dimension() == 64);
  CHECK(b.llm->identity() == "mock-flan");
  CHECK(b.llm->mode() == LLMMode::LocalScored);
}

TEST_CASE("backend overrides") {
  auto c = config_from_json({{"backends", {{"llm", {{"kind", "mock"}}}}}});
  apply_backend_override(c, "llm", "mode=remote-generate-only, context_window=64,model_id=tiny");
  CHECK(c.backends["llm"]["context_window"] == 64);
  const auto llm = make_llm(c.backends["llm"], ".");
  CHECK(llm->identity() == "tiny");
  CHECK(llm->mode() == LLMMode::RemoteGenerateOnly);
  CHECK(llm->context_window() == 64);
  CHECK(code_of([&] { apply_backend_override(c, "llm", "novalue"); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { apply_backend_override(c, "vision", "a=b"); }) == ErrorCode::ConfigError);
}

TEST_CASE("http backend specs") {
  CHECK(code_of([] { make_llm({{"kind", "local"}}, "."); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { make_encoder({{"kind", "remote"}, {"endpoint", "http://127.0.0.1:9"}}, "."); }) ==
        ErrorCode::ConfigError);
  CHECK(code_of([] { make_llm({{"kind", "cloud"}}, "."); }) == ErrorCode::ConfigError);
  ::setenv("LENS_TEST_KEY", "k", 1);
  const auto remote = make_llm({{"kind", "remote"}, {"endpoint", "http://127.0.0.1:9"}, {"api_key_env", "LENS_TEST_KEY"}}, ".");
  CHECK(remote->mode() == LLMMode::RemoteGenerateOnly);
  const auto local = make_llm({{"kind", "local"}, {"endpoint", "http://127.0.0.1:9"}, {"model_id", "flan"}}, ".");
  CHECK(local->mode() == LLMMode::LocalScored);
  CHECK(local->identity() == "flan");
}

TEST_CASE("pipeline config carries the run settings") {
  const auto c = config_from_json({{"task", "recognition"}, {"seed", 9}, {"workers", 3}, {"llm_params", {{"num_beams", 2}}}});
  const auto p = pipeline_config(c);
  CHECK(p.seed == 9);
  CHECK(p.workers == 3);
  CHECK(p.llm_params.num_beams == 2);
  CHECK(p.modules == ModuleConfig::recognition());
}
