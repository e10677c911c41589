#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "lens/error.hpp"
#include "lens/mock_backends.hpp"
#include "lens/vision.hpp"
#include "test_util.hpp"

using namespace lens;
using mock::MockCaptioner;
using mock::MockEncoder;

namespace {

ImageRef image(const std::string& id) {
  ImageRef r;
  r.id = id;
  return r;
}

// Exhaustive ranking: stable sort keeps vocabulary order among equal scores.
std::vector<std::size_t> oracle_rank(const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

}  // namespace

TEST_CASE("tag self-match scores 1") {
  MockEncoder enc(16);
  enc.plant_image("img", "A photo of dog");
  TagVocabulary vocab{{"cat", "dog", "bird"}, {"t"}};
  const auto tags = tag_image(image("img"), vocab, enc, 1);
  REQUIRE(tags.size() == 1);
  CHECK(tags[0].text == "dog");
  CHECK(tags[0].score == doctest::Approx(1.0));
}

TEST_CASE("k at least the vocabulary size returns a sorted permutation") {
  MockEncoder enc(8);
  TagVocabulary vocab{{"a", "b", "c", "d"}, {"t"}};
  const auto tags = tag_image(image("x"), vocab, enc, 10);
  REQUIRE(tags.size() == 4);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    names.push_back(tags[i].text);
    if (i > 0) CHECK(tags[i - 1].score >= tags[i].score);
    CHECK(tags[i].score <= 1.0 + 1e-6);
    CHECK(tags[i].score >= -1.0 - 1e-6);
  }
  std::sort(names.begin(), names.end());
  CHECK(names == vocab.tags);
  CHECK_THROWS_AS(tag_image(image("x"), vocab, enc, 0), Error);
  CHECK_THROWS_AS(tag_image(image("x"), TagVocabulary{}, enc, 1), Error);
}

TEST_CASE("top-k tags equal an exhaustive sort over 50 random tags") {
  MockEncoder enc(12);
  TagVocabulary vocab;
  for (int i = 0; i < 50; ++i) vocab.tags.push_back("tag" + std::to_string(i));
  const auto img = enc.embed_image(image("q"));
  std::vector<double> scores;
  for (const auto& t : vocab.tags) scores.push_back(img.dot(enc.embed_text("A photo of " + t)));
  const auto expect = oracle_rank(scores, 5);
  const auto got = tag_image(image("q"), vocab, enc, 5);
  REQUIRE(got.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(got[i].text == vocab.tags[expect[i]]);
}

TEST_CASE("equal scores keep vocabulary order") {
  MockEncoder enc(4);
  enc.set_image_vector("img", {1, 0, 0, 0});
  for (const auto* t : {"zeta", "alpha", "mid"}) enc.set_text_vector(std::string("A photo of ") + t, {1, 1, 0, 0});
  enc.set_text_vector("A photo of best", {1, 0, 0, 0});
  TagVocabulary vocab{{"zeta", "alpha", "best", "mid"}, {"t"}};
  const auto got = tag_image(image("img"), vocab, enc, 4);
  CHECK(got[0].text == "best");
  CHECK(got[1].text == "zeta");
  CHECK(got[2].text == "alpha");
  CHECK(got[3].text == "mid");
}

TEST_CASE("top_k_indices is invariant under monotone transforms") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(30);
    for (auto& v : s) v = std::round(u(rng) * 10.0) / 10.0;  // coarse values force ties
    std::vector<double> t(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) t[i] = 3.0 * std::exp(s[i]) + 1.0;
    CHECK(top_k_indices(s, 7) == top_k_indices(t, 7));
    CHECK(top_k_indices(s, 7) == oracle_rank(s, 7));
  }
}

TEST_CASE("descriptor clause wording") {
  CHECK(descriptor_clause("long golden fur") == "which has long golden fur");
  CHECK(descriptor_clause("a long tail") == "which is a long tail");
  CHECK(descriptor_clause("is often found indoors") == "which is often found indoors");
  CHECK(attribute_prompt_text(kAttributePrompt, "dog", "four legs") == "dog, which has four legs");
}

TEST_CASE("attributes within one class scope, k equals the pool") {
  MockEncoder enc(16);
  AttributeVocabulary attrs{{{"dog", {"four legs", "a tail", "floppy ears"}}, {"cat", {"whiskers"}}}, "m"};
  const auto out = attribute_image(image("img"), attrs, enc, 3, {"dog"});
  REQUIRE(out.size() == 3);
  std::vector<std::string> names;
  for (const auto& s : out) names.push_back(s.text);
  std::sort(names.begin(), names.end());
  CHECK(names == std::vector<std::string>{"a tail", "floppy ears", "four legs"});
  CHECK(out[0].score >= out[1].score);
  CHECK(out[1].score >= out[2].score);
  CHECK_THROWS_AS(attribute_image(image("img"), attrs, enc, 0), Error);
  try {
    attribute_image(image("img"), attrs, enc, 1, {"horse"});
    FAIL("expected EmptyScope");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyScope);
  }
}

TEST_CASE("attribute ranking equals an exhaustive sort") {
  MockEncoder enc(10);
  AttributeVocabulary attrs;
  std::vector<std::string> prompts;
  std::vector<std::string> descs;
  for (int c = 0; c < 4; ++c) {
    AttributeEntry e{"class" + std::to_string(c), {}};
    for (int d = 0; d < 5; ++d) {
      e.descriptors.push_back("feature " + std::to_string(c) + "-" + std::to_string(d));
      descs.push_back(e.descriptors.back());
      prompts.push_back(e.class_name + ", which has " + e.descriptors.back());
    }
    attrs.entries.push_back(e);
  }
  const auto img = enc.embed_image(image("q"));
  std::vector<double> scores;
  for (const auto& p : prompts) scores.push_back(img.dot(enc.embed_text(p)));
  const auto expect = oracle_rank(scores, 4);
  const auto got = attribute_image(image("q"), attrs, enc, 4);
  REQUIRE(got.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(got[i].text == descs[expect[i]]);
}

TEST_CASE("caption dedup keeps first occurrences") {
  MockCaptioner cap;
  cap.set_raw_output("img", {"a", "b", "a", "c", "d", "b", "e", "f", "a", "g"});
  const auto out = caption_image(image("img"), cap, GenerationParams::beam_search(10));
  CHECK(out == std::vector<std::string>{"a", "b", "c", "d", "e", "f", "g"});
}

TEST_CASE("seeded sampled captions are stable across calls") {
  MockCaptioner cap;
  const auto p = GenerationParams::top_k_sampling(20, 50, 42);
  CHECK(caption_image(image("img"), cap, p) == caption_image(image("img"), cap, p));
}

TEST_CASE("ocr attached verbatim") {
  CHECK(*attach_ocr({}, "its a joke").ocr_text == "its a joke");
  CHECK(*attach_ocr({}, "").ocr_text == "");
  const std::string uni = "caf\xC3\xA9 \"quoted\" \xE2\x9C\x93";
  CHECK(*attach_ocr({}, uni).ocr_text == uni);
  CHECK(*attach_ocr({}, "  padded  ").ocr_text == "padded");
}

TEST_CASE("module presets") {
  using VM = VisionModule;
  CHECK(ModuleConfig::recognition().enabled == std::set<VM>{VM::Tags, VM::Attributes});
  CHECK(ModuleConfig::vqa().enabled == std::set<VM>{VM::Captions});
  CHECK(ModuleConfig::vqa().num_captions == 50);
  CHECK(ModuleConfig::memes().enabled == std::set<VM>{VM::Tags, VM::Attributes, VM::Captions, VM::Ocr});
  CHECK(ModuleConfig::sentiment().enabled == ModuleConfig::memes().enabled);
  const auto memes_caps = ModuleConfig::memes().caption_params();
  CHECK(memes_caps.num_captions == 1);
  CHECK(memes_caps.num_beams == 5);
  CHECK_FALSE(memes_caps.is_sampling());
  ModuleConfig empty;
  CHECK_THROWS_AS(empty.validate(), Error);
  auto too_many = ModuleConfig::vqa();
  too_many.num_captions = 51;
  CHECK_THROWS_AS(too_many.validate(), Error);
  CHECK(parse_module_list("tags, attributes") == std::set<VM>{VM::Tags, VM::Attributes});
  CHECK_THROWS_AS(parse_module_list("tags,faces"), Error);
}

namespace {

struct World {
  MockEncoder enc{16};
  MockCaptioner cap;
  TagVocabulary tags{{"cat", "dog", "bird"}, {"t"}};
  AttributeVocabulary attrs{{{"cat", {"whiskers", "pointed ears"}}, {"dog", {"four legs", "a tail"}}, {"bird", {"feathers"}}}, "m"};

  World() { enc.plant_image("img", "A photo of dog", 0.05); }
  VisionDeps deps() { return {&enc, &cap, &tags, &attrs}; }
};

}  // namespace

TEST_CASE("describe populates exactly the enabled fields") {
  World w;
  const auto vqa = describe(image("img"), ModuleConfig::vqa(), w.deps());
  CHECK_FALSE(vqa.tags);
  CHECK_FALSE(vqa.attributes);
  CHECK(vqa.captions);
  CHECK_FALSE(vqa.ocr_text);

  const auto rec = describe(image("img"), ModuleConfig::recognition(), w.deps());
  CHECK(rec.tags);
  CHECK(rec.attributes);
  CHECK_FALSE(rec.captions);

  const auto memes = describe(image("img"), ModuleConfig::memes(), w.deps(), std::string("hi there"));
  CHECK(memes.tags);
  CHECK(memes.attributes);
  CHECK(memes.captions);
  REQUIRE(memes.ocr_text);
  CHECK(*memes.ocr_text == "hi there");
  CHECK(memes.captions->size() == 1);
}

TEST_CASE("recognition attributes come from the top tagged class") {
  World w;
  const auto d = describe(image("img"), ModuleConfig::recognition(), w.deps());
  REQUIRE(d.tags);
  CHECK(d.tags->front().text == "dog");
  REQUIRE(d.attributes);
  CHECK(d.attributes->size() == 2);
  for (const auto& a : *d.attributes) CHECK((a.text == "four legs" || a.text == "a tail"));
}

TEST_CASE("describe is repeatable and leaves inputs alone") {
  World w;
  const auto before = w.tags;
  const auto cfg = ModuleConfig::memes();
  const auto a = describe(image("img"), cfg, w.deps(), std::string("x"));
  const auto b = describe(image("img"), cfg, w.deps(), std::string("x"));
  CHECK(a == b);
  CHECK(w.tags == before);
}

TEST_CASE("describe reports missing dependencies") {
  World w;
  VisionDeps no_cap{&w.enc, nullptr, &w.tags, &w.attrs};
  CHECK_THROWS_AS(describe(image("img"), ModuleConfig::vqa(), no_cap), Error);
  VisionDeps no_tags{&w.enc, &w.cap, nullptr, &w.attrs};
  auto tags_only = ModuleConfig::recognition();
  tags_only.enabled = {VisionModule::Tags};
  CHECK_THROWS_AS(describe(image("img"), tags_only, no_tags), Error);
}

TEST_CASE("description records round-trip through a file") {
  World w;
  testutil::TempDir dir;
  DescriptionRecord ok{"img", describe(image("img"), ModuleConfig::memes(), w.deps(), std::string("ocr")), "", "h1",
                       {"encoder:mock-encoder"}};
  DescriptionRecord bad{"broken", std::nullopt, "cannot read image", "h1", {}};
  save_descriptions({ok, bad}, dir.file("d.jsonl"));
  const auto back = load_descriptions(dir.file("d.jsonl"));
  REQUIRE(back.size() == 2);
  CHECK(back[0].image_id == "img");
  CHECK(back[0].description == ok.description);
  CHECK(back[0].backends == ok.backends);
  CHECK(back[1].error == "cannot read image");
  CHECK_FALSE(back[1].description);
}
