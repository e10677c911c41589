#include "lens/http_backends.hpp"

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include <algorithm>

#include "httplib.h"
#include "lens/error.hpp"

namespace lens::http {

namespace bai = boost::archive::iterators;

std::string base64_encode(std::string_view bytes) {
  using It = bai::base64_from_binary<bai::transform_width<std::string_view::const_iterator, 6, 8>>;
  std::string out(It(bytes.begin()), It(bytes.end()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

std::string base64_decode(std::string_view encoded) {
  std::string s(encoded);
  s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == '\n' || c == '\r' || c == ' '; }), s.end());
  std::size_t pad = 0;
  while (!s.empty() && s.back() == '=') {
    s.pop_back();
    ++pad;
  }
  require(pad <= 2 && s.size() % 4 != 1, ErrorCode::ImageDecodeError, "malformed base64 payload");
  using It = bai::transform_width<bai::binary_from_base64<std::string::const_iterator>, 8, 6>;
  try {
    std::string out(It(s.begin()), It(s.end()));
    // trailing bits that do not form a full byte are an artifact of padding removal
    const std::size_t bytes = s.size() * 6 / 8;
    out.resize(bytes);
    return out;
  } catch (const bai::dataflow_exception&) {
    throw Error(ErrorCode::ImageDecodeError, "malformed base64 payload");
  }
}

Endpoint Endpoint::parse(const std::string& url) {
  const auto scheme = url.find("://");
  require(scheme != std::string::npos, ErrorCode::ConfigError, "endpoint must be an absolute URL: " + url);
  const auto slash = url.find('/', scheme + 3);
  Endpoint ep;
  ep.host = url.substr(0, slash);
  ep.prefix = slash == std::string::npos ? "" : url.substr(slash);
  while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
  return ep;
}

nlohmann::json post_json(const Endpoint& endpoint, const std::string& path, const nlohmann::json& body,
                         const std::string& api_key, int timeout_seconds) {
  httplib::Client client(endpoint.host);
  client.set_connection_timeout(5);
  client.set_read_timeout(timeout_seconds);
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
  auto res = client.Post(endpoint.prefix + path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::BackendUnavailable,
                endpoint.host + endpoint.prefix + path + ": " + httplib::to_string(res.error()));
  }
  nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
  if (res->status == 413 || (reply.is_object() && reply.value("error", "") == "context_length_exceeded")) {
    throw Error(ErrorCode::ContextLengthExceeded, endpoint.host + endpoint.prefix + path);
  }
  if (res->status != 200) {
    throw Error(ErrorCode::BackendUnavailable,
                endpoint.host + endpoint.prefix + path + " returned HTTP " + std::to_string(res->status));
  }
  if (reply.is_discarded() || !reply.is_object()) {
    throw Error(ErrorCode::BackendUnavailable, endpoint.host + endpoint.prefix + path + " returned malformed JSON");
  }
  return reply;
}

namespace {

template <typename T>
T field(const nlohmann::json& reply, const char* key) {
  try {
    return reply.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BackendUnavailable, std::string("bad field '") + key + "' in backend reply: " + e.what());
  }
}

nlohmann::json image_body(const ImageRef& image) {
  return {{"image_id", image.id}, {"image_base64", base64_encode(image.load_payload())}};
}

}  // namespace

HttpEncoder::HttpEncoder(const std::string& endpoint, std::string model_id, std::size_t dimension, std::string api_key)
    : endpoint_(Endpoint::parse(endpoint)),
      model_id_(std::move(model_id)),
      dimension_(dimension),
      api_key_(std::move(api_key)) {
  require(dimension_ >= 1, ErrorCode::ConfigError, "encoder dimension must be configured");
}

std::vector<double> HttpEncoder::raw_embed_image(const ImageRef& image) {
  return field<std::vector<double>>(post_json(endpoint_, "/embed_image", image_body(image), api_key_), "embedding");
}

std::vector<std::vector<double>> HttpEncoder::raw_embed_texts(std::span<const std::string> texts) {
  nlohmann::json body = {{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  return field<std::vector<std::vector<double>>>(post_json(endpoint_, "/embed_text", body, api_key_), "embeddings");
}

HttpCaptioner::HttpCaptioner(const std::string& endpoint, std::string model_id, bool supports_sampling,
                             std::string api_key)
    : endpoint_(Endpoint::parse(endpoint)),
      model_id_(std::move(model_id)),
      supports_sampling_(supports_sampling),
      api_key_(std::move(api_key)) {}

std::vector<std::string> HttpCaptioner::raw_generate(const ImageRef& image, const GenerationParams& params) {
  auto body = image_body(image);
  body["num_captions"] = params.num_captions;
  body["num_beams"] = params.num_beams;
  body["max_new_tokens"] = params.max_new_tokens;
  if (params.top_k) body["top_k"] = *params.top_k;
  if (params.seed) body["seed"] = *params.seed;
  return field<std::vector<std::string>>(post_json(endpoint_, "/caption", body, api_key_), "captions");
}

HttpLLM::HttpLLM(const std::string& endpoint, std::string model_id, LLMMode mode, std::size_t context_window,
                 std::string api_key)
    : endpoint_(Endpoint::parse(endpoint)),
      model_id_(std::move(model_id)),
      mode_(mode),
      context_window_(context_window),
      api_key_(std::move(api_key)) {}

std::string HttpLLM::raw_generate(std::string_view prompt, const GenerationParams& params) {
  nlohmann::json body = {{"prompt", prompt},
                         {"max_new_tokens", params.max_new_tokens},
                         {"num_beams", params.num_beams},
                         {"length_penalty", params.length_penalty}};
  return field<std::string>(post_json(endpoint_, "/generate", body, api_key_), "text");
}

double HttpLLM::raw_score(std::string_view prompt, std::string_view continuation) {
  nlohmann::json body = {{"prompt", prompt}, {"continuation", continuation}};
  return field<double>(post_json(endpoint_, "/score", body, api_key_), "log_likelihood");
}

}  // namespace lens::http
