#pragma once

#include <string>

#include "json.hpp"

#include "lens/backends.hpp"

// JSON-over-HTTP clients for model servers. Wire contracts (paths are
// appended to the configured endpoint):
//
//   POST /embed_text  {"texts": [..]}                       -> {"embeddings": [[..], ..]}
//   POST /embed_image {"image_id", "image_base64"}          -> {"embedding": [..]}
//   POST /caption     {"image_id", "image_base64", "num_captions", "num_beams",
//                      "top_k"?, "seed"?, "max_new_tokens"}  -> {"captions": [..]}
//   POST /generate    {"prompt", "max_new_tokens", "num_beams", "length_penalty"}
//                                                           -> {"text": ".."}
//   POST /score       {"prompt", "continuation"}            -> {"log_likelihood": x}
//
// /score is only called in local-scored mode. A bearer token is sent when
// an API key is configured.
namespace lens::http {

struct Endpoint {
  std::string host;    // scheme://host:port
  std::string prefix;  // path prefix without trailing slash

  static Endpoint parse(const std::string& url);
};

nlohmann::json post_json(const Endpoint& endpoint, const std::string& path, const nlohmann::json& body,
                         const std::string& api_key, int timeout_seconds = 120);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view encoded);

class HttpEncoder final : public EncoderBackend {
 public:
  HttpEncoder(const std::string& endpoint, std::string model_id, std::size_t dimension, std::string api_key = {});

  std::string identity() const override { return model_id_; }
  std::size_t dimension() const override { return dimension_; }
  bool thread_safe() const override { return true; }

 protected:
  std::vector<double> raw_embed_image(const ImageRef& image) override;
  std::vector<std::vector<double>> raw_embed_texts(std::span<const std::string> texts) override;

 private:
  Endpoint endpoint_;
  std::string model_id_;
  std::size_t dimension_;
  std::string api_key_;
};

class HttpCaptioner final : public CaptionBackend {
 public:
  HttpCaptioner(const std::string& endpoint, std::string model_id, bool supports_sampling, std::string api_key = {});

  std::string identity() const override { return model_id_; }
  bool supports_sampling() const override { return supports_sampling_; }
  bool thread_safe() const override { return true; }

 protected:
  std::vector<std::string> raw_generate(const ImageRef& image, const GenerationParams& params) override;

 private:
  Endpoint endpoint_;
  std::string model_id_;
  bool supports_sampling_;
  std::string api_key_;
};

class HttpLLM final : public LLMBackend {
 public:
  HttpLLM(const std::string& endpoint, std::string model_id, LLMMode mode, std::size_t context_window,
          std::string api_key = {});

  std::string identity() const override { return model_id_; }
  LLMMode mode() const override { return mode_; }
  std::size_t context_window() const override { return context_window_; }
  bool thread_safe() const override { return true; }

 protected:
  std::string raw_generate(std::string_view prompt, const GenerationParams& params) override;
  double raw_score(std::string_view prompt, std::string_view continuation) override;

 private:
  Endpoint endpoint_;
  std::string model_id_;
  LLMMode mode_;
  std::size_t context_window_;
  std::string api_key_;
};

}  // namespace lens::http
