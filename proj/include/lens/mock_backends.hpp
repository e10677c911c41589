#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "lens/backends.hpp"

// Deterministic stand-ins for the three model backends. They are keyed lookup
// tables backed by hash-seeded PRNGs, so every call is reproducible given its
// inputs and seed, and they are safe for concurrent reads once configured.
namespace lens::mock {

class MockEncoder final : public EncoderBackend {
 public:
  explicit MockEncoder(std::size_t dimension, std::string identity = "mock-encoder");

  std::string identity() const override { return identity_; }
  std::size_t dimension() const override { return dimension_; }
  bool thread_safe() const override { return true; }

  // Configuration; not synchronized, call before sharing the instance.
  void set_text_vector(const std::string& text, std::vector<double> values);
  void set_image_vector(const std::string& image_id, std::vector<double> values);
  // The image embeds as `text` plus `noise` times a unit vector derived from
  // its id. noise = 0 makes embed_image equal embed_text(text).
  void plant_image(const std::string& image_id, const std::string& text, double noise = 0.0);

  std::size_t image_calls() const { return image_calls_.load(); }

 protected:
  std::vector<double> raw_embed_image(const ImageRef& image) override;
  std::vector<std::vector<double>> raw_embed_texts(std::span<const std::string> texts) override;

 private:
  std::vector<double> text_vector(const std::string& text) const;
  std::vector<double> hashed(std::uint64_t seed) const;

  std::size_t dimension_;
  std::string identity_;
  std::unordered_map<std::string, std::vector<double>> texts_;
  std::unordered_map<std::string, std::vector<double>> images_;
  std::atomic<std::size_t> image_calls_{0};
};

class MockCaptioner final : public CaptionBackend {
 public:
  explicit MockCaptioner(bool supports_sampling = true, std::string identity = "mock-captioner");

  std::string identity() const override { return identity_; }
  bool supports_sampling() const override { return supports_sampling_; }
  bool thread_safe() const override { return true; }

  // Candidate captions for an image. Beam search returns the pool head in
  // order; sampling draws with replacement using (seed, image id).
  void set_pool(const std::string& image_id, std::vector<std::string> captions);
  // Returned verbatim (before the backend boundary dedups) in either mode.
  void set_raw_output(const std::string& image_id, std::vector<std::string> captions);

  std::size_t calls() const { return calls_.load(); }

 protected:
  std::vector<std::string> raw_generate(const ImageRef& image, const GenerationParams& params) override;

 private:
  std::vector<std::string> default_pool(const std::string& image_id) const;

  bool supports_sampling_;
  std::string identity_;
  std::unordered_map<std::string, std::vector<std::string>> pools_;
  std::unordered_map<std::string, std::vector<std::string>> raw_;
  std::atomic<std::size_t> calls_{0};
};

enum class MockRule {
  Echo,           // text after the last `echo_marker`
  MajorityToken,  // most frequent content word of the query description
  Keyword,        // first description word found in `answer_vocabulary`
  FirstTag,       // first entry on the query block's Tags line
};

struct MockLLMOptions {
  std::string identity = "mock-llm";
  LLMMode mode = LLMMode::LocalScored;
  std::size_t context_window = 512;
  MockRule rule = MockRule::MajorityToken;
  std::string echo_marker = "Short Answer:";
  std::vector<std::string> answer_vocabulary;
  std::string fallback_answer = "unknown";
  // Per-token log-probabilities. Tokens absent from the table score
  // `grounded_logprob` when they occur in the query description (and
  // `grounded` is set), otherwise `default_logprob`.
  std::map<std::string, double> token_logprobs;
  double default_logprob = -4.0;
  bool grounded = true;
  double grounded_logprob = -1.0;
};

class MockLLM final : public LLMBackend {
 public:
  using GenerateFn = std::function<std::string(std::string_view prompt, const GenerationParams&)>;

  explicit MockLLM(MockLLMOptions options = {});
  MockLLM(MockLLMOptions options, GenerateFn generate);

  std::string identity() const override { return options_.identity; }
  LLMMode mode() const override { return options_.mode; }
  std::size_t context_window() const override { return options_.context_window; }
  bool thread_safe() const override { return true; }

  const MockLLMOptions& options() const { return options_; }
  std::size_t generate_calls() const { return generate_calls_.load(); }
  std::size_t score_calls() const { return score_calls_.load(); }

  // Log-probability the mock assigns to one continuation token.
  double token_logprob(std::string_view prompt, std::string_view token) const;

 protected:
  std::string raw_generate(std::string_view prompt, const GenerationParams& params) override;
  double raw_score(std::string_view prompt, std::string_view continuation) override;

 private:
  MockLLMOptions options_;
  GenerateFn generate_;
  std::atomic<std::size_t> generate_calls_{0};
  std::atomic<std::size_t> score_calls_{0};
};

// Content words of the final (query) block of a rendered prompt: the text of
// its Tags/Attributes/Captions/OCR sections, lowercased, punctuation stripped.
std::vector<std::string> query_description_words(std::string_view prompt);

MockRule parse_mock_rule(const std::string& name);

// Builds configured mocks from a fixtures document:
//   {"encoder":   {"dimension": 32, "noise": 0.05, "images": {id: text}},
//    "captioner": {"supports_sampling": true, "pools": {id: [captions]}},
//    "llm":       {"rule": "majority-token", "context_window": 512, ...}}
std::unique_ptr<MockEncoder> encoder_from_fixtures(const nlohmann::json& fixtures, const std::string& identity);
std::unique_ptr<MockCaptioner> captioner_from_fixtures(const nlohmann::json& fixtures, const std::string& identity);
std::unique_ptr<MockLLM> llm_from_fixtures(const nlohmann::json& fixtures, const std::string& identity);

}  // namespace lens::mock
