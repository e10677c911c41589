#include "doctest.h"

#include <set>

#include <cmath>
#include <limits>
#include <random>

#include "lens/backends.hpp"
#include "lens/error.hpp"
#include "lens/mock_backends.hpp"

using namespace lens;
using lens::mock::MockCaptioner;
using lens::mock::MockEncoder;
using lens::mock::MockLLM;
using lens::mock::MockLLMOptions;
using lens::mock::MockRule;

namespace {

// Encoder whose raw output is fully scripted, to exercise the public checks.
class ScriptedEncoder final : public EncoderBackend {
 public:
  std::vector<double> image_out;
  std::vector<std::vector<double>> texts_out;
  std::size_t dim = 3;

  std::string identity() const override { return "scripted"; }
  std::size_t dimension() const override { return dim; }

 protected:
  std::vector<double> raw_embed_image(const ImageRef&) override { return image_out; }
  std::vector<std::vector<double>> raw_embed_texts(std::span<const std::string>) override { return texts_out; }
};

class ScriptedCaptioner final : public CaptionBackend {
 public:
  std::vector<std::string> out;
  bool sampling = false;

  std::string identity() const override { return "scripted-captioner"; }
  bool supports_sampling() const override { return sampling; }

 protected:
  std::vector<std::string> raw_generate(const ImageRef&, const GenerationParams&) override { return out; }
};

ImageRef image(const std::string& id) {
  ImageRef r;
  r.id = id;
  return r;
}

}  // namespace

TEST_CASE("embedding normalization") {
  Embedding e({3.0, 4.0, 0.0, 0.0});
  CHECK(e.norm() == doctest::Approx(5.0));
  const auto n = e.normalized();
  CHECK(n[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(n[1] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(n[2] == 0.0);
  CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-12));
  const auto twice = n.normalized();
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(twice[i] - n[i]) < 1e-9);
  CHECK_THROWS_AS(Embedding({0.0, 0.0}).normalized(), Error);
  CHECK_THROWS_AS(Embedding({std::numeric_limits<double>::quiet_NaN()}), Error);
  CHECK_THROWS_AS(Embedding({std::numeric_limits<double>::infinity()}), Error);
  CHECK_THROWS_AS(Embedding(std::vector<double>{}), Error);
}

TEST_CASE("generation params defaults and validation") {
  GenerationParams p;
  CHECK(p.num_beams == 5);
  CHECK(p.length_penalty == -1.0);
  CHECK_FALSE(p.is_sampling());
  CHECK_NOTHROW(p.validate());

  p.num_captions = 51;
  CHECK_THROWS_AS(p.validate(), Error);
  p.num_captions = 0;
  CHECK_THROWS_AS(p.validate(), Error);

  auto s = GenerationParams::top_k_sampling(50, 50, 7);
  CHECK(s.is_sampling());
  CHECK(s.num_beams == 1);
  CHECK_NOTHROW(s.validate());
  s.num_beams = 5;  // beam search and sampling at once
  CHECK_THROWS_AS(s.validate(), Error);

  CHECK_THROWS_AS(GenerationParams::top_k_sampling(51).validate(), Error);
  CHECK(GenerationParams::beam_search(1).num_captions == 1);
  CHECK(GenerationParams::beam_search(1).num_beams == 5);
}

TEST_CASE("mock encoder: stored vectors, normalization, determinism") {
  MockEncoder enc(4);
  enc.set_image_vector("img-A", {3, 4, 0, 0});
  const auto a = enc.embed_image(image("img-A"));
  CHECK(a.dimension() == 4);
  CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(a[0] == doctest::Approx(0.6));
  CHECK(a == enc.embed_image(image("img-A")));
  CHECK(enc.embed_image(image("other")) == enc.embed_image(image("other")));
}

TEST_CASE("mock encoder: text batches equal single calls and keep order") {
  MockEncoder enc(16);
  std::vector<std::string> texts;
  for (int i = 0; i < 1000; ++i) texts.push_back("a photo of class " + std::to_string(i));
  const auto batch = enc.embed_texts(texts);
  REQUIRE(batch.size() == texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto single = enc.embed_text(texts[i]);
    for (std::size_t d = 0; d < 16; ++d) REQUIRE(batch[i][d] == single[d]);
  }
  const auto dup = enc.embed_texts(std::vector<std::string>{"x", "x"});
  CHECK(dup[0] == dup[1]);
  CHECK_THROWS_AS(enc.embed_texts(std::vector<std::string>{}), Error);
  CHECK_THROWS_AS(enc.embed_texts(std::vector<std::string>{"ok", "  "}), Error);
}

TEST_CASE("mock encoder: every output has the declared dimension") {
  std::mt19937 rng(3);
  for (std::size_t dim : {1u, 2u, 7u, 64u}) {
    MockEncoder enc(dim);
    for (int i = 0; i < 50; ++i) {
      const auto s = "t" + std::to_string(rng());
      CHECK(enc.embed_text(s).dimension() == dim);
      CHECK(enc.embed_image(image(s)).dimension() == dim);
    }
  }
}

TEST_CASE("mock encoder: planted image with zero noise equals its text") {
  MockEncoder enc(8);
  enc.plant_image("pic", "A photo of cat");
  CHECK(enc.embed_image(image("pic")).dot(enc.embed_text("A photo of cat")) == doctest::Approx(1.0));
}

TEST_CASE("encoder boundary rejects bad backend output") {
  ScriptedEncoder enc;
  enc.image_out = {1, 2};
  CHECK_THROWS_AS(enc.embed_image(image("x")), Error);
  enc.image_out = {1, std::numeric_limits<double>::quiet_NaN(), 0};
  CHECK_THROWS_AS(enc.embed_image(image("x")), Error);
  enc.image_out = {0, 0, 2};
  CHECK(enc.embed_image(image("x"))[2] == doctest::Approx(1.0));
  enc.texts_out = {{1, 0, 0}};
  CHECK_THROWS_AS(enc.embed_texts(std::vector<std::string>{"a", "b"}), Error);
}

TEST_CASE("mock captioner: seeded sampling is reproducible") {
  MockCaptioner cap;
  std::vector<std::string> pool;
  for (int i = 0; i < 30; ++i) pool.push_back("caption " + std::to_string(i));
  cap.set_pool("img", pool);
  const auto p = GenerationParams::top_k_sampling(5, 50, 7);
  const auto first = cap.generate(image("img"), p);
  CHECK(first == cap.generate(image("img"), p));
  CHECK(first.size() <= 5);
  CHECK_FALSE(first.empty());
}

TEST_CASE("mock captioner: one beam caption") {
  MockCaptioner cap;
  cap.set_pool("img", {"a dog on grass", "a dog", "grass"});
  const auto out = cap.generate(image("img"), GenerationParams::beam_search(1));
  CHECK(out == std::vector<std::string>{"a dog on grass"});
}

TEST_CASE("captions are deduplicated down to the distinct pool") {
  MockCaptioner cap;
  std::vector<std::string> pool;
  for (int i = 0; i < 20; ++i) pool.push_back("c" + std::to_string(i));
  cap.set_pool("img", pool);
  const auto out = cap.generate(image("img"), GenerationParams::top_k_sampling(50, 50, 1));
  CHECK(out.size() <= 20);
  std::set<std::string> uniq(out.begin(), out.end());
  CHECK(uniq.size() == out.size());
  for (const auto& c : out) CHECK(std::find(pool.begin(), pool.end(), c) != pool.end());
}

TEST_CASE("caption boundary: blanks dropped, sampling support enforced") {
  ScriptedCaptioner cap;
  cap.out = {"  ", "a", "a", "", "b"};
  CHECK(cap.generate(image("x"), GenerationParams::beam_search(5)) == std::vector<std::string>{"a", "b"});
  CHECK_THROWS_AS(cap.generate(image("x"), GenerationParams::top_k_sampling(3)), Error);
  try {
    cap.generate(image("x"), GenerationParams::top_k_sampling(3));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SamplingUnsupported);
  }
  cap.out = {" ", ""};
  CHECK_THROWS_AS(cap.generate(image("x"), GenerationParams::beam_search(1)), Error);
  GenerationParams too_many;
  too_many.num_captions = 51;
  CHECK_THROWS_AS(cap.generate(image("x"), too_many), Error);
}

TEST_CASE("mock llm: echo rule and trimming") {
  MockLLMOptions o;
  o.rule = MockRule::Echo;
  MockLLM llm(o);
  CHECK(llm.generate("Question: q\nShort Answer:  blue  ", {}) == "blue");
  CHECK(llm.generate("Q\nShort Answer: red", {}) == llm.generate("Q\nShort Answer: red", {}));
  CHECK_THROWS_AS(llm.generate("", {}), Error);
}

TEST_CASE("mock llm: context window") {
  MockLLMOptions o;
  o.context_window = 512;
  MockLLM llm(o);
  std::string prompt;
  for (int i = 0; i < 513; ++i) prompt += "w ";
  try {
    llm.generate(prompt, {});
    FAIL("expected ContextLengthExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ContextLengthExceeded);
  }
}

TEST_CASE("mock llm: scoring sums per-token log-probs") {
  MockLLMOptions o;
  o.token_logprobs = {{"cat", -1.0}, {"a", -0.5}, {"b", -2.0}};
  MockLLM llm(o);
  CHECK(llm.score("p", "cat") == doctest::Approx(-1.0));
  CHECK(llm.score("p", "a b") == doctest::Approx(-0.5 + -2.0));
  CHECK(llm.score("p", "a b") == doctest::Approx(llm.score("p", "a") + llm.score("p", "b")));
  CHECK_THROWS_AS(llm.score("p", ""), Error);
  CHECK_THROWS_AS(llm.score("p", "   "), Error);
}

TEST_CASE("remote generate-only llm cannot score") {
  MockLLMOptions o;
  o.mode = LLMMode::RemoteGenerateOnly;
  MockLLM llm(o);
  try {
    llm.score("p", "x");
    FAIL("expected ScoringUnsupported");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ScoringUnsupported);
  }
  CHECK(to_string(LLMMode::RemoteGenerateOnly) == "remote-generate-only");
  CHECK(to_string(LLMMode::LocalScored) == "local-scored");
}

TEST_CASE("mock llm: majority and keyword rules read the query block") {
  const std::string prompt =
      "Captions:\na red apple\nQuestion: q1\nShort Answer: pear\n\n"
      "Tags: dog, puppy\nCaptions:\na dog on grass\na brown dog\nQuestion: What is it?\nShort Answer:";
  MockLLM majority{MockLLMOptions{}};
  CHECK(majority.generate(prompt, {}) == "dog");

  MockLLMOptions ko;
  ko.rule = MockRule::Keyword;
  ko.answer_vocabulary = {"grass", "apple"};
  MockLLM keyword(ko);
  CHECK(keyword.generate(prompt, {}) == "grass");

  MockLLMOptions fo;
  fo.rule = MockRule::FirstTag;
  MockLLM first(fo);
  CHECK(first.generate(prompt, {}) == "dog");
}

TEST_CASE("query description words cover tags, captions and quoted OCR text") {
  const auto words = mock::query_description_words(
      "Tags: Cat\nAttributes: fluffy fur\nCaptions:\na cat, sleeping\n"
      "OCR: this is an image with written \"Hello\" on it\nQuestion: q?\nShort Answer:");
  CHECK(words == std::vector<std::string>{"cat", "fluffy", "fur", "a", "cat", "sleeping", "hello"});
}

TEST_CASE("mock backends from fixtures") {
  const auto fx = nlohmann::json::parse(R"({
    "encoder": {"dimension": 6, "images": {"pic": "A photo of cat"}},
    "captioner": {"supports_sampling": false, "pools": {"pic": ["one", "two"]}},
    "llm": {"mode": "remote-generate-only", "rule": "echo", "context_window": 64}
  })");
  auto enc = mock::encoder_from_fixtures(fx, "enc");
  CHECK(enc->dimension() == 6);
  CHECK(enc->identity() == "enc");
  CHECK(enc->embed_image(image("pic")).dot(enc->embed_text("A photo of cat")) == doctest::Approx(1.0));
  auto cap = mock::captioner_from_fixtures(fx, "cap");
  CHECK_FALSE(cap->supports_sampling());
  CHECK(cap->generate(image("pic"), GenerationParams::beam_search(2)) == std::vector<std::string>{"one", "two"});
  auto llm = mock::llm_from_fixtures(fx, "llm");
  CHECK(llm->mode() == LLMMode::RemoteGenerateOnly);
  CHECK(llm->context_window() == 64);
  CHECK_THROWS_AS(mock::llm_from_fixtures(nlohmann::json::parse(R"({"llm": {"rule": "nope"}})"), "x"), Error);
}

TEST_CASE("image refs") {
  const auto f = ImageRef::from_file("/tmp/some/dir/photo.png");
  CHECK(f.id == "photo.png");
  const auto b = ImageRef::from_bytes("abc");
  CHECK(b.id == ImageRef::from_bytes("abc").id);
  CHECK(b.id != ImageRef::from_bytes("abd").id);
  CHECK(b.load_payload() == "abc");
  try {
    ImageRef::from_file("/nonexistent/x.png").load_payload();
    FAIL("expected ImageDecodeError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ImageDecodeError);
  }
}
