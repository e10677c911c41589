#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lens/image.hpp"

namespace lens {

// Fixed-dimension real vector with all-finite entries.
class Embedding {
 public:
  Embedding() = default;
  explicit Embedding(std::vector<double> values);

  std::size_t dimension() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  double norm() const;
  // Unit-length copy. Throws InvalidArgument on a zero vector.
  Embedding normalized() const;
  double dot(const Embedding& other) const;

  bool operator==(const Embedding&) const = default;

 private:
  std::vector<double> values_;
};

inline constexpr int kMaxCaptions = 50;

// Decoding configuration shared by the captioner and the language model.
// Beam search is active unless `top_k` is set, in which case stochastic
// top-k sampling is used and `num_beams` must be 1.
struct GenerationParams {
  int num_beams = 5;
  double length_penalty = -1.0;
  std::optional<int> top_k;
  int num_captions = 1;
  int max_new_tokens = 32;
  std::optional<std::uint64_t> seed;

  bool is_sampling() const { return top_k.has_value(); }
  void validate() const;

  static GenerationParams beam_search(int num_captions = 1);
  static GenerationParams top_k_sampling(int num_captions, int top_k = 50,
                                         std::optional<std::uint64_t> seed = std::nullopt);

  bool operator==(const GenerationParams&) const = default;
};

class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;

  virtual std::string identity() const = 0;
  virtual std::size_t dimension() const = 0;
  // True when the instance may be called from several threads at once.
  virtual bool thread_safe() const { return false; }

  // Unit-normalized, dimension-checked results.
  Embedding embed_image(const ImageRef& image);
  std::vector<Embedding> embed_texts(std::span<const std::string> texts);
  Embedding embed_text(const std::string& text);

 protected:
  virtual std::vector<double> raw_embed_image(const ImageRef& image) = 0;
  virtual std::vector<std::vector<double>> raw_embed_texts(std::span<const std::string> texts) = 0;

 private:
  Embedding finish(std::vector<double> raw) const;
};

class CaptionBackend {
 public:
  virtual ~CaptionBackend() = default;

  virtual std::string identity() const = 0;
  virtual bool supports_sampling() const = 0;
  virtual bool thread_safe() const { return false; }

  // Between 1 and params.num_captions distinct non-blank captions, in the
  // order the backend produced them.
  std::vector<std::string> generate(const ImageRef& image, const GenerationParams& params);

 protected:
  virtual std::vector<std::string> raw_generate(const ImageRef& image,
                                                const GenerationParams& params) = 0;
};

enum class LLMMode { LocalScored, RemoteGenerateOnly };

std::string_view to_string(LLMMode mode);

class LLMBackend {
 public:
  virtual ~LLMBackend() = default;

  virtual std::string identity() const = 0;
  virtual LLMMode mode() const = 0;
  virtual std::size_t context_window() const = 0;
  virtual bool thread_safe() const { return false; }
  // Whitespace tokenization unless the backend knows better.
  virtual std::size_t count_tokens(std::string_view text) const;

  // Trimmed generation; may be empty when the model produced only whitespace.
  std::string generate(std::string_view prompt, const GenerationParams& params);
  // Total log-likelihood of `continuation` following `prompt`.
  double score(std::string_view prompt, std::string_view continuation);

 protected:
  virtual std::string raw_generate(std::string_view prompt, const GenerationParams& params) = 0;
  virtual double raw_score(std::string_view prompt, std::string_view continuation);

 private:
  void check_window(std::size_t tokens) const;
};

}  // namespace lens
