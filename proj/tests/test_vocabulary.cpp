#include "doctest.h"

#include "lens/error.hpp"
#include "lens/mock_backends.hpp"
#include "lens/vocabulary.hpp"
#include "test_util.hpp"

using namespace lens;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

class DownLLM final : public LLMBackend {
 public:
  std::string identity() const override { return "down"; }
  LLMMode mode() const override { return LLMMode::RemoteGenerateOnly; }
  std::size_t context_window() const override { return 512; }

 protected:
  std::string raw_generate(std::string_view, const GenerationParams&) override {
    throw Error(ErrorCode::BackendUnavailable, "connection refused");
  }
};

}  // namespace

TEST_CASE("tag vocabulary union keeps first occurrence and canonical form") {
  const auto v = build_tag_vocabulary({{"imagenet", {"Golden Retriever", "tabby cat"}},
                                       {"coco", {"dog", "golden  retriever", " Tabby Cat "}}});
  CHECK(v.tags == std::vector<std::string>{"golden retriever", "tabby cat", "dog"});
  CHECK(v.sources == std::vector<std::string>{"imagenet", "coco"});
  CHECK(v.contains("dog"));
  CHECK_FALSE(v.contains("Dog"));
}

TEST_CASE("same class in two sources appears once") {
  const auto v = build_tag_vocabulary({{"a", {"dog"}}, {"b", {"DOG"}}});
  CHECK(v.tags.size() == 1);
}

TEST_CASE("empty source is rejected") {
  CHECK(code_of([] { build_tag_vocabulary({{"a", {"dog"}}, {"b", {}}}); }) == ErrorCode::EmptySource);
  CHECK(code_of([] { build_tag_vocabulary({}); }) == ErrorCode::EmptySource);
}

TEST_CASE("descriptor list parsing") {
  const auto d = parse_descriptor_list("- long golden fur\n* floppy ears\n\n1. a friendly face\n2) long golden fur\n\xE2\x80\xA2 a tail");
  CHECK(d == std::vector<std::string>{"long golden fur", "floppy ears", "a friendly face", "a tail"});
  CHECK(parse_descriptor_list("   \n  ").empty());
}

TEST_CASE("attribute generation queries once per class") {
  std::vector<std::string> prompts;
  mock::MockLLM llm(mock::MockLLMOptions{}, [&](std::string_view prompt, const GenerationParams&) {
    prompts.emplace_back(prompt);
    if (prompt.find("ghost") != std::string_view::npos) return std::string("   ");
    return std::string("- four legs\n- a tail\n- four legs");
  });
  TagVocabulary tags{{"dog", "cat", "ghost"}, {"test"}};
  const auto gen = generate_attributes(tags, llm);
  REQUIRE(prompts.size() == 3);
  CHECK(prompts[0] == "What are useful visual features for distinguishing a dog in a photo?");
  REQUIRE(gen.vocabulary.entries.size() == 3);
  CHECK(gen.vocabulary.entries[0].descriptors == std::vector<std::string>{"four legs", "a tail"});
  CHECK(gen.vocabulary.entries[2].descriptors.empty());
  REQUIRE(gen.failures.size() == 1);
  CHECK(gen.failures[0].class_name == "ghost");
  CHECK(gen.vocabulary.generator_identity == "mock-llm");
}

TEST_CASE("attribute generation with an unreachable backend") {
  DownLLM llm;
  TagVocabulary tags{{"dog", "cat"}, {"test"}};
  CHECK(code_of([&] { generate_attributes(tags, llm); }) == ErrorCode::BackendUnavailable);
}

TEST_CASE("vocabulary files round-trip") {
  testutil::TempDir dir;
  const auto tags = build_tag_vocabulary({{"s1", {"dog", "cat"}}});
  save_vocabulary(tags, dir.file("tags.jsonl"));
  CHECK(load_tag_vocabulary(dir.file("tags.jsonl")) == tags);

  AttributeVocabulary attrs{{{"dog", {"four legs", "a tail"}}, {"cat", {"whiskers"}}}, "mock-llm"};
  save_vocabulary(attrs, dir.file("attrs.jsonl"));
  CHECK(load_attribute_vocabulary(dir.file("attrs.jsonl"), &tags) == attrs);
}

TEST_CASE("vocabulary loading errors") {
  testutil::TempDir dir;
  testutil::write_file(dir.file("v2.jsonl"), R"({"kind":"tags","version":"2","sources":[]})" "\n" R"({"tag":"dog"})" "\n");
  CHECK(code_of([&] { load_tag_vocabulary(dir.file("v2.jsonl")); }) == ErrorCode::SchemaVersionMismatch);

  testutil::write_file(dir.file("bad.jsonl"), R"({"kind":"tags","version":"1","sources":[]})" "\n{oops\n");
  CHECK(code_of([&] { load_tag_vocabulary(dir.file("bad.jsonl")); }) == ErrorCode::ParseError);

  testutil::write_file(dir.file("dup.jsonl"),
                       R"({"kind":"tags","version":"1","sources":[]})" "\n" R"({"tag":"dog"})" "\n" R"({"tag":"dog"})" "\n");
  CHECK(code_of([&] { load_tag_vocabulary(dir.file("dup.jsonl")); }) == ErrorCode::ParseError);

  CHECK(code_of([&] { load_tag_vocabulary(dir.file("missing.jsonl")); }) == ErrorCode::IoError);

  const auto tags = build_tag_vocabulary({{"s1", {"dog"}}});
  AttributeVocabulary attrs{{{"cat", {"whiskers"}}}, "m"};
  save_vocabulary(attrs, dir.file("attrs.jsonl"));
  CHECK(code_of([&] { load_attribute_vocabulary(dir.file("attrs.jsonl"), &tags); }) == ErrorCode::ParseError);
}

TEST_CASE("source manifest with inline lists and class files") {
  testutil::TempDir dir;
  testutil::write_file(dir.file("classes.txt"), "Dog\ncat\n\n");
  testutil::write_file(dir.file("sources.jsonl"),
                       R"({"source":"inline","classes":["bird"]})" "\n" R"({"source":"file","file":"classes.txt"})" "\n");
  const auto sources = load_source_manifest(dir.file("sources.jsonl"));
  REQUIRE(sources.size() == 2);
  CHECK(build_tag_vocabulary(sources).tags == std::vector<std::string>{"bird", "dog", "cat"});
}
